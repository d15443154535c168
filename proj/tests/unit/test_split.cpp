// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "geosdm/core/util.hpp"
#include "geosdm/split/split.hpp"
#include "support/expect.hpp"
#include "support/fixtures.hpp"
#include "support/tempdir.hpp"

using namespace geosdm;
using namespace geosdm::split;
using geodata::Observation;
using geodata::ObservationTable;
using testing::error_kind;

namespace {

constexpr double kSixth = 1.0 / 6.0;

/// `per_cell` points at the centre region of each of `cells` consecutive cells along one row.
ObservationTable grid_table(int cells, int per_cell) {
  std::vector<Observation> rows;
  for (int c = 0; c < cells; ++c) {
    for (int i = 0; i < per_cell; ++i) {
      const double lon = -180.0 + (c + 0.3 + 0.4 * i / per_cell) * kSixth;
      rows.push_back({"c" + std::to_string(c) + "_" + std::to_string(i), lon, 10.05, {0}});
    }
  }
  return ObservationTable(std::move(rows));
}

std::set<Cell> val_cells(const SpatialSplit& s) {
  std::set<Cell> out;
  for (const auto& [id, p] : s.assignment) {
    if (p == Partition::val) out.insert(s.cell_of.at(id));
  }
  return out;
}

std::size_t mixed_cells(const SpatialSplit& s) {
  std::map<Cell, std::set<Partition>> parts;
  for (const auto& [id, p] : s.assignment) parts[s.cell_of.at(id)].insert(p);
  return static_cast<std::size_t>(std::count_if(parts.begin(), parts.end(), [](const auto& kv) { return kv.second.size() > 1; }));
}

}  // namespace

TEST_CASE("cell_index worked examples") {
  CHECK(cell_index(-180, -90, kSixth) == Cell{0, 0});
  CHECK(cell_index(3.05, 43.61, kSixth) == Cell{1098, 801});
  CHECK(cell_index(3.05 + kSixth, 43.61, kSixth) == Cell{1099, 801});
  CHECK(cell_index(180, 90, 1.0) == Cell{360, 180});
  CHECK(cell_index(-0.5, -0.5, 1.0) == Cell{179, 89});
}

TEST_CASE("cell_index agrees with the floor formula on random points") {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double lon = rng.uniform(-180, 180), lat = rng.uniform(-90, 90);
    const double size = rng.uniform(0.01, 3.0);
    const Cell c = cell_index(lon, lat, size);
    CHECK(c.cx == static_cast<long long>(std::floor((lon + 180.0) / size)));
    CHECK(c.cy == static_cast<long long>(std::floor((lat + 90.0) / size)));
  }
}

TEST_CASE("ten equal cells with target 0.15 select two cells") {
  const auto table = grid_table(10, 10);
  for (std::uint64_t seed : {0u, 1u, 2u, 99u}) {
    const auto s = block_holdout(table, kSixth, 0.15, seed);
    CHECK(val_cells(s).size() == 2);
    CHECK(s.val_fraction() == doctest::Approx(0.20));
    CHECK(s.count(Partition::val) == 20);
    CHECK(s.size() == 100);
  }
}

TEST_CASE("two occupied cells put one in val with no mixing") {
  const auto table = grid_table(2, 25);
  const auto s = block_holdout(table, kSixth, 0.15, 4);
  CHECK(val_cells(s).size() == 1);
  CHECK(mixed_cells(s) == 0);
  CHECK(s.count(Partition::train) == 25);
}

TEST_CASE("a single occupied cell is a degenerate split") {
  CHECK(error_kind([] { block_holdout(grid_table(1, 5), kSixth, 0.15, 0); }) == ErrorKind::degenerate_split);
  CHECK(error_kind([] { block_holdout(ObservationTable{}, kSixth, 0.15, 0); }) == ErrorKind::degenerate_split);
  CHECK(error_kind([] { block_holdout(grid_table(3, 2), 0.0, 0.15, 0); }) == ErrorKind::validation);
  CHECK(error_kind([] { block_holdout(grid_table(3, 2), kSixth, 1.0, 0); }) == ErrorKind::validation);
}

TEST_CASE("random tables: purity, determinism, fraction bound, monotone coverage") {
  Rng rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const auto table = testing::random_table(rng, 200 + rng.below(400), 5, 2.0, 4.0, 43.0, 44.5);
    const std::uint64_t seed = rng.below(1000);
    const auto s = block_holdout(table, kSixth, 0.15, seed);
    CHECK(mixed_cells(s) == 0);
    CHECK(s.size() == table.size());

    const auto again = block_holdout(table, kSixth, 0.15, seed);
    CHECK(again.assignment == s.assignment);
    CHECK(again.cell_of == s.cell_of);

    std::map<Cell, std::size_t> counts;
    for (const auto& [id, c] : s.cell_of) ++counts[c];
    std::size_t max_selected = 0;
    for (const auto& c : val_cells(s)) max_selected = std::max(max_selected, counts[c]);
    const double share = static_cast<double>(max_selected) / static_cast<double>(table.size());
    CHECK(s.val_fraction() >= 0.15);
    CHECK(s.val_fraction() < 0.15 + share);

    std::set<Cell> prev = val_cells(s);
    for (double target : {0.2, 0.3, 0.5}) {
      const auto bigger = val_cells(block_holdout(table, kSixth, target, seed));
      CHECK(std::includes(bigger.begin(), bigger.end(), prev.begin(), prev.end()));
      prev = bigger;
    }
  }
}

TEST_CASE("apply_split partitions the table") {
  const auto table = grid_table(6, 5);
  const auto s = block_holdout(table, kSixth, 0.3, 8);
  const auto [train, val] = apply_split(table, s);
  CHECK(train.size() + val.size() == table.size());
  CHECK(val.size() == s.count(Partition::val));
  for (const auto& o : val.records()) CHECK(s.assignment.at(o.survey_id) == Partition::val);
}

TEST_CASE("split CSV save/load, test alias, unknown token") {
  testing::TempDir dir("split");
  const auto s = block_holdout(grid_table(8, 4), kSixth, 0.15, 5);
  save_split(s, dir / "split.csv");
  const auto back = load_split(dir / "split.csv");
  CHECK(back.assignment == s.assignment);
  CHECK(back.cell_of == s.cell_of);

  const auto three = parse_split("surveyId,partition,cx,cy\na,train,1,2\nb,test,3,4\nc,val,3,4\n");
  CHECK(three.size() == 3);
  CHECK(three.assignment.at("b") == Partition::val);
  CHECK(three.cell_of.at("a") == Cell{1, 2});
  CHECK(error_kind([] { parse_split("surveyId,partition,cx,cy\na,holdout,1,2\n"); }) == ErrorKind::format);
  CHECK(error_kind([] { parse_split("id,part\n"); }) == ErrorKind::format);
}
