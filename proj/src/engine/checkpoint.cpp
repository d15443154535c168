// SPDX-License-Identifier: Apache-2.0
#include "geosdm/engine/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "geosdm/core/error.hpp"
#include "geosdm/core/util.hpp"
#include "json.hpp"

namespace geosdm::engine {

namespace {

constexpr char kMagic[8] = {'G', 'E', 'O', 'S', 'D', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t& pos, const std::string& where) {
  if (pos + sizeof(T) > bytes.size()) throw Error(ErrorKind::format, where + ": truncated checkpoint");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

nlohmann::json real_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double real_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

Checkpoint capture_checkpoint(modelkit::MultiModalModel& model, const AdamW* optimizer, const TrainState& state,
                              const std::string& config_digest) {
  Checkpoint ck;
  for (const auto& [name, p] : model.parameters()) ck.weights.emplace(name, p->value);
  if (optimizer) {
    ck.moments = optimizer->moments();
    ck.optimizer_steps = optimizer->steps();
  }
  ck.state = state;
  ck.config_digest = config_digest;
  ck.architecture_digest = model.architecture_digest();
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::vector<double> payload;
  nlohmann::ordered_json header;
  auto append = [&](const Tensor& t) {
    const std::size_t offset = payload.size();
    payload.insert(payload.end(), t.values().begin(), t.values().end());
    return offset;
  };
  header["weights"] = nlohmann::json::array();
  for (const auto& [name, t] : ck.weights) {
    header["weights"].push_back({{"name", name}, {"shape", t.shape()}, {"offset", append(t)}});
  }
  header["moments"] = nlohmann::json::array();
  for (const auto& [name, mv] : ck.moments) {
    const auto m_off = append(mv.m);
    const auto v_off = append(mv.v);
    header["moments"].push_back({{"name", name}, {"shape", mv.m.shape()}, {"m_offset", m_off}, {"v_offset", v_off}});
  }
  header["optimizer_steps"] = ck.optimizer_steps;
  header["train_state"] = {{"epoch", ck.state.epoch},
                           {"best_val_loss", real_or_null(ck.state.best_val_loss)},
                           {"global_step", ck.state.global_step},
                           {"rng_seed", ck.state.rng_seed},
                           {"lr_current", ck.state.lr_current}};
  header["config_digest"] = ck.config_digest;
  header["architecture_digest"] = ck.architecture_digest;
  header["payload_elements"] = payload.size();

  const std::string head = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, head.size());
  out += head;
  const std::size_t base = out.size();
  out.resize(base + payload.size() * sizeof(double));
  if (!payload.empty()) std::memcpy(out.data() + base, payload.data(), payload.size() * sizeof(double));

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  write_text(tmp, out);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  const std::string where = path.string();
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::format, where + ": not a checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get<std::uint32_t>(bytes, pos, where);
  if (version != kVersion) throw Error(ErrorKind::format, where + ": unsupported checkpoint version " + std::to_string(version));
  const auto head_len = get<std::uint64_t>(bytes, pos, where);
  if (pos + head_len > bytes.size()) throw Error(ErrorKind::format, where + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(std::string_view(bytes).substr(pos, head_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, where + ": bad header: " + e.what());
  }
  pos += head_len;

  Checkpoint ck;
  try {
    const auto elements = header.at("payload_elements").get<std::size_t>();
    if (bytes.size() - pos != elements * sizeof(double)) {
      throw Error(ErrorKind::format, where + ": payload holds " + std::to_string((bytes.size() - pos) / sizeof(double)) +
                                         " values, header declares " + std::to_string(elements));
    }
    auto read_tensor = [&](const Shape& shape, std::size_t offset) {
      const std::size_t n = shape_numel(shape);
      if (offset + n > elements) throw Error(ErrorKind::format, where + ": tensor exceeds payload");
      std::vector<double> vals(n);
      if (n) std::memcpy(vals.data(), bytes.data() + pos + offset * sizeof(double), n * sizeof(double));
      return Tensor(shape, std::move(vals));
    };
    for (const auto& w : header.at("weights")) {
      ck.weights.emplace(w.at("name").get<std::string>(),
                         read_tensor(w.at("shape").get<Shape>(), w.at("offset").get<std::size_t>()));
    }
    for (const auto& m : header.at("moments")) {
      const auto shape = m.at("shape").get<Shape>();
      ck.moments.emplace(m.at("name").get<std::string>(),
                         Moments{read_tensor(shape, m.at("m_offset").get<std::size_t>()),
                                 read_tensor(shape, m.at("v_offset").get<std::size_t>())});
    }
    ck.optimizer_steps = header.at("optimizer_steps").get<std::int64_t>();
    const auto& st = header.at("train_state");
    ck.state.epoch = st.at("epoch").get<std::int64_t>();
    ck.state.best_val_loss = real_from(st.at("best_val_loss"));
    ck.state.global_step = st.at("global_step").get<std::int64_t>();
    ck.state.rng_seed = st.at("rng_seed").get<std::int64_t>();
    ck.state.lr_current = st.at("lr_current").get<double>();
    ck.config_digest = header.at("config_digest").get<std::string>();
    ck.architecture_digest = header.at("architecture_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, where + ": malformed header field: " + e.what());
  }
  return ck;
}

void restore_weights(modelkit::MultiModalModel& model, const Checkpoint& ck) {
  auto params = model.parameters();
  std::vector<std::string> problems;
  std::map<std::string, modelkit::Parameter*> by_name;
  for (const auto& [name, p] : params) {
    by_name.emplace(name, p);
    const auto it = ck.weights.find(name);
    if (it == ck.weights.end()) {
      problems.push_back(name + " " + shape_str(p->value.shape()) + " missing from checkpoint");
    } else if (it->second.shape() != p->value.shape()) {
      problems.push_back(name + ": model " + shape_str(p->value.shape()) + " vs checkpoint " + shape_str(it->second.shape()));
    }
  }
  for (const auto& [name, t] : ck.weights) {
    if (!by_name.count(name)) problems.push_back(name + " " + shape_str(t.shape()) + " not in model");
  }
  const std::string digest = model.architecture_digest();
  if (!problems.empty() || digest != ck.architecture_digest) {
    std::string msg = "architecture digest model " + digest + " vs checkpoint " + ck.architecture_digest;
    for (std::size_t i = 0; i < problems.size() && i < 20; ++i) msg += "; " + problems[i];
    if (problems.size() > 20) msg += "; ... " + std::to_string(problems.size() - 20) + " more";
    throw Error(ErrorKind::checkpoint_mismatch, msg);
  }
  for (const auto& [name, p] : params) p->value = ck.weights.at(name);
}

bool CheckpointTracker::update(double val_loss, std::int64_t epoch) {
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch;
    return true;
  }
  return false;
}

}  // namespace geosdm::engine
