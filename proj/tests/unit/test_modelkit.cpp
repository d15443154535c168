// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "geosdm/core/rng.hpp"
#include "geosdm/modelkit/encoders.hpp"
#include "geosdm/modelkit/location.hpp"
#include "geosdm/modelkit/mme.hpp"
#include "geosdm/modelkit/surgery.hpp"
#include "support/expect.hpp"

using namespace geosdm;
using namespace geosdm::modelkit;
using testing::error_kind;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.normal();
  return t;
}

FeatureExtractor encoder(const std::string& name, std::size_t channels, std::size_t dim, std::uint64_t seed = 1,
                         bool pretrained = false) {
  EncoderSpec s;
  s.name = name;
  s.input_channels = channels;
  s.embedding_dim = dim;
  s.pretrained = pretrained;
  return build_encoder(s, seed);
}

Tensor eval_forward(FeatureExtractor& f, const Tensor& x) {
  ForwardContext ctx;
  return f.forward(x, ctx);
}

MultiModalModel micro_mme(std::size_t classes, double dropout) {
  std::vector<Branch> b;
  b.push_back({"patch", encoder("micro_conv2d", 4, 64, 1)});
  b.push_back({"climate", encoder("micro_conv3d", 2, 64, 2)});
  b.push_back({"landsat", encoder("micro_conv3d", 2, 128, 3)});
  FusionSpec f;
  f.modality_dims = {64, 64, 128};
  f.num_classes = classes;
  f.dropout_p = dropout;
  return build_mme(std::move(b), f, 9);
}

ModelInputs micro_inputs(std::size_t n, std::uint64_t seed) {
  return {{"patch", random_tensor({n, 4, 16, 16}, seed)},
          {"climate", random_tensor({n, 2, 4, 3}, seed + 1)},
          {"landsat", random_tensor({n, 2, 4, 3}, seed + 2)}};
}

}  // namespace

TEST_CASE("built-in encoders meet their shape contracts") {
  auto conv2d = encoder("micro_conv2d", 4, 64);
  CHECK(eval_forward(conv2d, random_tensor({2, 4, 32, 32}, 1)).shape() == Shape{2, 64});
  auto conv3d = encoder("micro_conv3d", 6, 64);
  CHECK(eval_forward(conv3d, random_tensor({2, 6, 4, 21}, 2)).shape() == Shape{2, 64});
  auto mlp = encoder("micro_mlp", 10, 32);
  CHECK(eval_forward(mlp, random_tensor({3, 10}, 3)).shape() == Shape{3, 32});
  CHECK(conv2d.parameter_count() > 0);
  CHECK(std::isfinite(static_cast<double>(mlp.parameter_count())));
}

TEST_CASE("unknown encoders raise a registry error listing the catalogue") {
  EncoderSpec s;
  s.name = "resnet999";
  try {
    build_encoder(s);
    FAIL("expected registry error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::registry);
    CHECK(std::string(e.what()).find("builtin/micro_conv2d") != std::string::npos);
  }
}

TEST_CASE("providers can register extra encoders") {
  EncoderRegistry reg;
  reg.add("plugin", "tiny", [](const EncoderSpec& s, Rng& rng) {
    Sequential net;
    net.add("flatten", std::make_unique<Flatten>());
    net.add("fc", std::make_unique<Linear>(s.input_channels, s.embedding_dim, rng));
    return FeatureExtractor("tiny", std::move(net), s.input_channels, s.pretrained);
  });
  EncoderSpec s{"plugin", "tiny", 3, 5};
  auto f = reg.build(s, 0);
  CHECK(eval_forward(f, random_tensor({2, 3}, 4)).shape() == Shape{2, 5});
}

TEST_CASE("modify_first_layer with unchanged channels is an exact identity") {
  auto base = encoder("micro_conv2d", 3, 64, 5);
  auto same = modify_first_layer(base, 3, 77);
  const Tensor x = random_tensor({2, 3, 16, 16}, 6);
  CHECK(eval_forward(base, x) == eval_forward(same, x));
}

TEST_CASE("mean replication preserves pre-activations for replicated constant input") {
  Rng rng(8);
  Sequential net;
  net.add("conv", std::make_unique<Conv2d>(3, 1, 3, 1, 1, rng));
  FeatureExtractor toy("toy", std::move(net), 3, true);
  auto wide = modify_first_layer(toy, 6, 1);
  const Tensor x3({1, 3, 5, 5}, 0.7);
  const Tensor x6({1, 6, 5, 5}, 0.7);
  const Tensor a = eval_forward(toy, x3), b = eval_forward(wide, x6);
  REQUIRE(a.shape() == b.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
}

TEST_CASE("modify_first_layer changes only the first-layer parameter count") {
  for (std::size_t c_new : {1u, 4u, 6u, 13u}) {
    auto base = encoder("micro_conv2d", 3, 64, 5);
    const std::size_t before = base.parameter_count();
    auto adapted = modify_first_layer(base, c_new, 3);
    const auto& conv = dynamic_cast<const Conv2d&>(adapted.net().layer(0));
    const auto delta = static_cast<long long>(adapted.parameter_count()) - static_cast<long long>(before);
    CHECK(delta == (static_cast<long long>(c_new) - 3) * 9 * static_cast<long long>(conv.out_channels()));
    CHECK(eval_forward(adapted, random_tensor({2, c_new, 32, 32}, 9)).shape() == Shape{2, 64});
  }
  auto mlp = encoder("micro_mlp", 4, 8);
  CHECK(error_kind([&] { modify_first_layer(mlp, 6); }) == ErrorKind::unsupported_architecture);
}

TEST_CASE("modify_last_layer resizes the classifier") {
  auto cls = encoder("micro_mlp", 16, 1000, 4);
  auto big = modify_last_layer(cls, 11255, 2);
  CHECK(eval_forward(big, random_tensor({2, 16}, 1)).shape() == Shape{2, 11255});
  auto same = modify_last_layer(cls, 1000, 99);
  const Tensor x = random_tensor({2, 16}, 1);
  CHECK(eval_forward(same, x).shape() == Shape{2, 1000});
  CHECK_FALSE(eval_forward(same, x) == eval_forward(cls, x));
  auto binary = modify_last_layer(cls, 1, 2);
  CHECK(eval_forward(binary, x).shape() == Shape{2, 1});
  auto headless = strip_head(cls);
  CHECK(error_kind([&] { modify_last_layer(headless, 3); }) == ErrorKind::no_head);
}

TEST_CASE("strip_head exposes the penultimate width and composes with add_head and MME") {
  EncoderSpec s{"builtin", "micro_mlp", 12, 20};
  s.options["hidden"] = 512;
  auto cls = build_encoder(s, 3);
  auto ext = strip_head(cls);
  CHECK(ext.output_dim() == 512);
  CHECK_FALSE(ext.has_head());
  auto again = strip_head(ext);
  CHECK(again.net().size() == ext.net().size());
  auto rebuilt = add_head(ext, 20, 1);
  CHECK(eval_forward(rebuilt, random_tensor({3, 12}, 2)).shape() == Shape{3, 20});

  std::vector<Branch> b;
  b.push_back({"tab", ext});
  FusionSpec f{{512}, 0.0, 32, 7};
  auto mme = build_mme(std::move(b), f, 0);
  ForwardContext ctx;
  CHECK(mme.forward({{"tab", random_tensor({4, 12}, 3)}}, ctx).shape() == Shape{4, 7});
}

TEST_CASE("surgery suite: adapted encoders at several batch sizes") {
  auto patch = modify_first_layer(encoder("micro_conv2d", 3, 64, 1, true), 6, 2);
  auto cls = modify_last_layer(encoder("micro_conv2d", 3, 1000, 2), 20, 3);
  for (std::size_t n : {1u, 2u, 7u}) {
    CHECK(eval_forward(patch, random_tensor({n, 6, 32, 32}, n)).shape() == Shape{n, 64});
    CHECK(eval_forward(cls, random_tensor({n, 3, 32, 32}, n)).shape() == Shape{n, 20});
  }
}

TEST_CASE("MME shape contract, fusion errors and eval determinism") {
  auto model = micro_mme(20, 0.1);
  for (std::size_t n : {1u, 2u, 7u}) {
    ForwardContext ctx;
    CHECK(model.forward(micro_inputs(n, n), ctx).shape() == Shape{n, 20});
  }
  CHECK(model.num_classes() == 20);
  ForwardContext eval;
  const auto inputs = micro_inputs(2, 11);
  CHECK(model.forward(inputs, eval) == model.forward(inputs, eval));

  std::vector<Branch> b;
  b.push_back({"patch", encoder("micro_conv2d", 4, 64)});
  b.push_back({"climate", encoder("micro_conv3d", 2, 32)});
  try {
    build_mme(std::move(b), FusionSpec{{64, 64}, 0.1, 256, 20}, 0);
    FAIL("expected fusion error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::fusion_shape);
    CHECK(std::string(e.what()).find("climate") != std::string::npos);
  }
  auto m = micro_mme(3, 0.0);
  auto partial = micro_inputs(2, 1);
  partial.erase("landsat");
  CHECK(error_kind([&] { m.forward(partial, eval); }) == ErrorKind::missing_modality);
}

TEST_CASE("dropout: stochastic in training, deterministic when p = 0") {
  const auto inputs = micro_inputs(3, 5);
  auto noisy = micro_mme(5, 0.5);
  Rng r1(1), r2(2);
  ForwardContext t1{true, &r1}, t2{true, &r2};
  CHECK_FALSE(noisy.forward(inputs, t1) == noisy.forward(inputs, t2));

  auto plain = micro_mme(5, 0.0);
  Rng r3(3), r4(4);
  ForwardContext t3{true, &r3}, t4{true, &r4};
  CHECK(plain.forward(inputs, t3) == plain.forward(inputs, t4));
}

TEST_CASE("zeroing one modality changes the logits") {
  auto model = micro_mme(6, 0.0);
  auto inputs = micro_inputs(2, 3);
  ForwardContext ctx;
  const Tensor fused = model.embed(inputs, ctx);
  Tensor zeroed = fused;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 64; j < 128; ++j) zeroed.at(i, j) = 0.0;
  }
  CHECK_FALSE(model.forward_head(fused, ctx) == model.forward_head(zeroed, ctx));
}

TEST_CASE("one gradient step moves every encoder branch") {
  auto model = micro_mme(4, 0.1);
  const auto inputs = micro_inputs(3, 7);
  Rng rng(1);
  ForwardContext ctx{true, &rng};
  model.zero_grad();
  const Tensor logits = model.forward(inputs, ctx);
  model.backward(Tensor(logits.shape(), 1.0));
  std::map<std::string, Tensor> before;
  for (auto& [name, p] : model.parameters()) {
    before[name] = p->value;
    for (std::size_t i = 0; i < p->value.numel(); ++i) p->value[i] -= 0.1 * p->grad[i];
  }
  for (const auto& modality : model.modalities()) {
    bool moved = false;
    for (auto& [name, p] : model.parameters()) {
      if (name.rfind("branch." + modality + ".", 0) == 0 && !(p->value == before[name])) moved = true;
    }
    CHECK_MESSAGE(moved, modality);
  }
}

TEST_CASE("architecture digest tracks structure, not weights") {
  auto a = micro_mme(4, 0.1);
  auto b = micro_mme(4, 0.1);
  for (auto& [_, p] : b.parameters()) p->value.fill(0.5);
  CHECK(a.architecture_digest() == b.architecture_digest());
  CHECK(a.architecture_digest() != micro_mme(5, 0.1).architecture_digest());
}

TEST_CASE("sinusoidal location features and embeddings") {
  const SinusoidalLocationEncoder enc(32, 6, 42);
  const auto f = enc.features(0, 0);
  REQUIRE(f.size() == 24);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == (i % 2 == 0 ? 0.0 : 1.0));
  CHECK(enc.encode(3.05, 43.61) == enc.encode(3.05, 43.61));
  CHECK(enc.encode(1, 2).size() == 32);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const double lon = rng.uniform(-180, 180), lat = rng.uniform(-89, 89);
    CHECK(enc.encode(lon, lat) != enc.encode(lon, lat + 0.01));
  }
  CHECK(enc.encode(3.05, 43.61) != enc.encode(3.05, 43.62));

  auto loc = encoder("sinusoidal_location", 2, 16);
  Tensor xy({2, 2}, std::vector<double>{3.05, 43.61, 3.05, 43.61});
  const Tensor out = eval_forward(loc, xy);
  CHECK(out.shape() == Shape{2, 16});
  for (std::size_t j = 0; j < 16; ++j) CHECK(out.at(0, j) == out.at(1, j));
}
