#include <sensoropt/neuralnet.hpp>

#include "test_util.hpp"

#include <fstream>
#include <random>

using namespace sensoropt;
using sensoropt::test::relative_error;
using sensoropt::test::TempDir;

namespace {

NetworkConfig chain(std::vector<std::size_t> sizes, OutputActivation act = OutputActivation::Identity) {
  NetworkConfig c;
  c.layer_sizes = std::move(sizes);
  c.output_activation = act;
  return c;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Hand-checked 3-2-1 network.
struct Tiny {
  NetworkConfig config = chain({3, 2, 1});
  NetworkParameters params = NetworkParameters::zeros(config);
  Tiny() {
    auto& w1 = params.layers[0].weights;
    w1(0, 0) = 0.5, w1(0, 1) = -1.0, w1(0, 2) = 0.25;
    w1(1, 0) = -0.5, w1(1, 1) = 0.2, w1(1, 2) = 0.1;
    params.layers[0].bias = {0.1, -0.2};
    params.layers[1].weights(0, 0) = 2.0;
    params.layers[1].weights(0, 1) = -3.0;
    params.layers[1].bias = {0.05};
  }
};

double cost_at(const NetworkParameters& p, const NetworkConfig& c, std::span<const double> x,
               std::span<const double> y) {
  return quadratic_cost(y, forward(p, c, x).output());
}

Model small_model(std::uint64_t seed) {
  Model m;
  m.config = NetworkConfig::surrogate({12, 9});
  m.params = NetworkParameters::initialize(m.config, seed);
  m.norm.input_max = {510, 144, 500, 3650, 49, 4000};
  m.norm.output_max = {4.5, 22.0, 3.6};
  return m;
}

}  // namespace

TEST(Activation, LeakyRelu) {
  EXPECT_EQ(leaky_relu(2.0, 0.3), 2.0);
  EXPECT_DOUBLE_EQ(leaky_relu(-1.0, 0.3), -0.3);
  EXPECT_EQ(leaky_relu(0.0, 0.3), 0.0);
  EXPECT_EQ(leaky_relu_derivative(-5.0, 0.3), 0.3);
  EXPECT_EQ(leaky_relu_derivative(0.0, 0.3), 0.3);
  EXPECT_EQ(leaky_relu_derivative(1e-9, 0.3), 1.0);
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(NetworkConfig{}.validate_surrogate());
  EXPECT_NO_THROW(chain({3, 2, 1}).validate());
  EXPECT_THROWS_KIND(chain({3, 2, 1}).validate_surrogate(), ErrorKind::Config);
  EXPECT_THROWS_KIND(NetworkConfig::surrogate({64}).validate_surrogate(), ErrorKind::Config);
  EXPECT_THROWS_KIND(chain({3, 0, 1}).validate(), ErrorKind::Config);
  EXPECT_THROWS_KIND(chain({3}).validate(), ErrorKind::Config);
  auto c = NetworkConfig{};
  c.leaky_slope = 1.0;
  EXPECT_THROWS_KIND(c.validate(), ErrorKind::Config);
  EXPECT_NE(NetworkConfig{}.hash(), NetworkConfig::surrogate({64, 64, 32}).hash());
}

TEST(Init, GlorotBoundsAndDeterminism) {
  const auto c = NetworkConfig{};
  const auto p = NetworkParameters::initialize(c, 9);
  EXPECT_EQ(p, NetworkParameters::initialize(c, 9));
  EXPECT_NE(p, NetworkParameters::initialize(c, 10));
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(c.layer_sizes[l] + c.layer_sizes[l + 1]));
    for (double w : p.layers[l].weights.data()) EXPECT_LE(std::abs(w), limit);
    for (double b : p.layers[l].bias) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(p.parameter_count(), 10u * 64 + 64 + 64 * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
}

TEST(Forward, ZeroWeightsGiveActivatedBias) {
  const auto c = chain({4, 3, 2});
  auto p = NetworkParameters::zeros(c);
  p.layers[0].bias = {0.5, -2.0, 0.0};
  const std::vector<double> x{1, 2, 3, 4};
  const auto t = forward(p, c, x);
  EXPECT_EQ(t.a[1][0], 0.5);
  EXPECT_DOUBLE_EQ(t.a[1][1], -0.6);
  EXPECT_EQ(t.a[1][2], 0.0);
}

TEST(Forward, IdentityLayerPassesInput) {
  const auto c = chain({3, 3});
  auto p = NetworkParameters::zeros(c);
  for (std::size_t i = 0; i < 3; ++i) p.layers[0].weights(i, i) = 1.0;
  const std::vector<double> x{0.2, 1.5, 7.0};
  const auto out = forward(p, c, x).output();
  EXPECT_EQ(std::vector<double>(out.begin(), out.end()), x);
}

TEST(Forward, HandTraceThreeTwoOne) {
  Tiny net;
  const std::vector<double> x{1, 2, -1};
  const auto t = forward(net.params, net.config, x);
  EXPECT_NEAR(t.z[1][0], -1.65, 1e-12);
  EXPECT_NEAR(t.z[1][1], -0.4, 1e-12);
  EXPECT_NEAR(t.a[1][0], -0.495, 1e-12);
  EXPECT_NEAR(t.a[1][1], -0.12, 1e-12);
  EXPECT_NEAR(t.z[2][0], -0.58, 1e-12);
  EXPECT_NEAR(t.a[2][0], -0.58, 1e-12);
}

TEST(Forward, Errors) {
  Tiny net;
  const std::vector<double> short_x{1, 2};
  EXPECT_THROWS_KIND(forward(net.params, net.config, short_x), ErrorKind::Shape);
  const std::vector<double> nan_x{1, std::nan(""), 0};
  EXPECT_THROWS_KIND(forward(net.params, net.config, nan_x), ErrorKind::Domain);
}

TEST(Forward, Deterministic) {
  const auto c = NetworkConfig{};
  const auto p = NetworkParameters::initialize(c, 1);
  std::mt19937_64 rng(2);
  const auto x = random_vector(rng, 10, 0, 1);
  const auto a = forward(p, c, x);
  const auto b = forward(p, c, x);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.a, b.a);
}

TEST(Cost, Examples) {
  const std::vector<double> y{1, 0};
  const std::vector<double> zero{0, 0};
  EXPECT_EQ(quadratic_cost(y, y), 0.0);
  EXPECT_EQ(quadratic_cost(y, zero), 0.5);
  const std::vector<double> three{1, 0, 0};
  EXPECT_THROWS_KIND(quadratic_cost(y, three), ErrorKind::Shape);
}

TEST(Cost, BatchIsMean) {
  // Costs 0.5 and 1.5 on a 1-1 identity net with zero parameters.
  const auto c = chain({1, 1});
  const auto p = NetworkParameters::zeros(c);
  BatchEngine engine(c, 2);
  const std::vector<double> x{0, 0};
  const std::vector<double> y{1, std::sqrt(3.0)};
  engine.forward(p, x, 2);
  auto g = Gradients::zeros_like(p);
  EXPECT_NEAR(engine.backward(p, y, g), 1.0, 1e-15);
}

TEST(Delta, OutputDelta) {
  const auto c = chain({1, 1});
  auto p = NetworkParameters::zeros(c);
  p.layers[0].bias = {0.5};
  const std::vector<double> x{0};
  const auto t = forward(p, c, x);
  const std::vector<double> y{1};
  EXPECT_EQ(output_delta(c, y, t)[0], -0.5);
  const std::vector<double> same{0.5};
  EXPECT_EQ(output_delta(c, same, t)[0], 0.0);

  const auto cl = chain({1, 1}, OutputActivation::LeakyRelu);
  auto pl = NetworkParameters::zeros(cl);
  pl.layers[0].bias = {-1.0};
  const auto tl = forward(pl, cl, x);
  EXPECT_DOUBLE_EQ(tl.a[1][0], -0.3);
  EXPECT_DOUBLE_EQ(output_delta(cl, y, tl)[0], -(1 + 0.3) * 0.3);
}

TEST(Backprop, HandGradientsThreeTwoOne) {
  Tiny net;
  const std::vector<double> x{1, 2, -1};
  const std::vector<double> y{1};
  const auto t = forward(net.params, net.config, x);
  const auto g = backprop(net.params, net.config, t, y);
  EXPECT_NEAR(g.bias[1][0], -1.58, 1e-12);
  EXPECT_NEAR(g.weights[1](0, 0), 0.7821, 1e-12);
  EXPECT_NEAR(g.weights[1](0, 1), 0.1896, 1e-12);
  EXPECT_NEAR(g.bias[0][0], -0.948, 1e-12);
  EXPECT_NEAR(g.bias[0][1], 1.422, 1e-12);
  const double want[2][3] = {{-0.948, -1.896, 0.948}, {1.422, 2.844, -1.422}};
  for (int r = 0; r < 2; ++r)
    for (int col = 0; col < 3; ++col) EXPECT_NEAR(g.weights[0](r, col), want[r][col], 1e-12);
}

TEST(Backprop, ZeroDeltaGivesZeroGradients) {
  Tiny net;
  const std::vector<double> x{1, 2, -1};
  const auto t = forward(net.params, net.config, x);
  const std::vector<double> y{t.a[2][0]};
  const auto g = backprop(net.params, net.config, t, y);
  for (const auto& w : g.weights)
    for (double v : w.data()) EXPECT_EQ(v, 0.0);
  for (const auto& b : g.bias)
    for (double v : b) EXPECT_EQ(v, 0.0);
}

TEST(Backprop, WeightGradientIsRankOneOuterProduct) {
  const auto c = chain({10, 8, 8, 8, 3});
  const auto p = NetworkParameters::initialize(c, 4);
  std::mt19937_64 rng(5);
  const auto x = random_vector(rng, 10);
  const auto y = random_vector(rng, 3);
  const auto t = forward(p, c, x);
  const auto g = backprop(p, c, t, y);
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    ASSERT_EQ(g.weights[l].rows(), c.layer_sizes[l + 1]);
    ASSERT_EQ(g.weights[l].cols(), c.layer_sizes[l]);
    for (std::size_t r = 0; r < g.weights[l].rows(); ++r)
      for (std::size_t k = 0; k < g.weights[l].cols(); ++k)
        EXPECT_DOUBLE_EQ(g.weights[l](r, k), g.deltas[l][r] * t.a[l][k]);
    EXPECT_EQ(g.bias[l], g.deltas[l]);
  }
}

TEST(Backprop, MatchesFiniteDifferences) {
  for (auto act : {OutputActivation::Identity, OutputActivation::LeakyRelu}) {
    const auto c = chain({10, 8, 8, 8, 3}, act);
    auto p = NetworkParameters::initialize(c, 21);
    std::mt19937_64 rng(22);
    for (auto& layer : p.layers)
      for (auto& b : layer.bias) b = std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
    const auto x = random_vector(rng, 10);
    const auto y = random_vector(rng, 3);
    const auto g = backprop(p, c, forward(p, c, x), y);
    const double h = 1e-6;
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = cost_at(p, c, x, y);
      param = saved - h;
      const double down = cost_at(p, c, x, y);
      param = saved;
      const double numeric = (up - down) / (2 * h);
      if (std::abs(numeric) < 1e-8 && std::abs(analytic) < 1e-8) return;
      EXPECT_LT(relative_error(numeric, analytic), 1e-5) << numeric << " vs " << analytic;
    };
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      auto w = p.layers[l].weights.data();
      auto gw = g.weights[l].data();
      for (std::size_t i = 0; i < w.size(); ++i) check(w[i], gw[i]);
      for (std::size_t i = 0; i < p.layers[l].bias.size(); ++i) check(p.layers[l].bias[i], g.bias[l][i]);
    }
  }
}

TEST(Backprop, BatchEqualsMeanOfSamples) {
  const auto c = chain({10, 8, 8, 8, 3});
  const auto p = NetworkParameters::initialize(c, 31);
  std::mt19937_64 rng(32);
  const std::size_t n = 7;
  const auto xs = random_vector(rng, n * 10);
  const auto ys = random_vector(rng, n * 3);

  auto mean = Gradients::zeros_like(p);
  double mean_cost = 0;
  for (std::size_t s = 0; s < n; ++s) {
    std::span<const double> x(xs.data() + s * 10, 10);
    std::span<const double> y(ys.data() + s * 3, 3);
    const auto t = forward(p, c, x);
    mean_cost += quadratic_cost(y, t.output()) / n;
    const auto g = backprop(p, c, t, y);
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      for (std::size_t i = 0; i < g.weights[l].data().size(); ++i)
        mean.weights[l].data()[i] += g.weights[l].data()[i] / n;
      for (std::size_t i = 0; i < g.bias[l].size(); ++i) mean.bias[l][i] += g.bias[l][i] / n;
    }
  }

  const auto reference = batch_backprop(p, c, xs, ys, n);
  BatchEngine engine(c, 16);
  engine.forward(p, xs, n);
  auto batched = Gradients::zeros_like(p);
  EXPECT_LT(relative_error(engine.backward(p, ys, batched), mean_cost), 1e-12);

  for (std::size_t l = 0; l < mean.weights.size(); ++l) {
    for (std::size_t i = 0; i < mean.weights[l].data().size(); ++i) {
      const double want = mean.weights[l].data()[i];
      EXPECT_NEAR(reference.weights[l].data()[i], want, 1e-12 * std::max(1.0, std::abs(want)));
      EXPECT_NEAR(batched.weights[l].data()[i], want, 1e-12 * std::max(1.0, std::abs(want)));
    }
    for (std::size_t i = 0; i < mean.bias[l].size(); ++i) {
      EXPECT_NEAR(reference.bias[l][i], mean.bias[l][i], 1e-12);
      EXPECT_NEAR(batched.bias[l][i], mean.bias[l][i], 1e-12);
    }
  }
}

TEST(BatchEngine, OutputsMatchPerSampleForward) {
  const auto c = NetworkConfig{};
  const auto p = NetworkParameters::initialize(c, 41);
  std::mt19937_64 rng(42);
  const std::size_t n = 37;
  const auto xs = random_vector(rng, n * 10, 0, 1);
  BatchEngine engine(c, 64);
  engine.forward(p, xs, n);
  std::vector<double> out(n * 3);
  engine.outputs(out);
  for (std::size_t s = 0; s < n; ++s) {
    const auto ref = forward(p, c, std::span<const double>(xs.data() + s * 10, 10)).output();
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(out[s * 3 + k], ref[k], 1e-13);
  }
  EXPECT_THROWS_KIND(engine.forward(p, xs, 65), ErrorKind::Shape);
}

TEST(Sgd, DefaultLearningRate) {
  const auto c = chain({1, 1});
  auto p = NetworkParameters::zeros(c);
  p.layers[0].weights(0, 0) = 1.0;
  p.layers[0].bias = {1.0};
  auto g = Gradients::zeros_like(p);
  g.weights[0](0, 0) = 2.0;
  g.bias[0][0] = -4.0;
  const auto state = OptimizerState::create(OptimizerMode::Sgd, 0.0005, p);
  sgd_step(p, g, state);
  EXPECT_EQ(p.layers[0].weights(0, 0), 1.0 - 0.0005 * 2.0);
  EXPECT_DOUBLE_EQ(p.layers[0].weights(0, 0), 0.999);
  EXPECT_DOUBLE_EQ(p.layers[0].bias[0], 1.002);
}

TEST(Sgd, ZeroGradientLeavesParameters) {
  const auto c = NetworkConfig{};
  auto p = NetworkParameters::initialize(c, 3);
  const auto before = p;
  const auto state = OptimizerState::create(OptimizerMode::Sgd, 0.0005, p);
  sgd_step(p, Gradients::zeros_like(p), state);
  EXPECT_EQ(p, before);
}

TEST(Sgd, LinearInFixedGradient) {
  const auto c = chain({3, 2, 1});
  auto p1 = NetworkParameters::initialize(c, 8);
  auto p2 = p1;
  std::mt19937_64 rng(9);
  auto g = Gradients::zeros_like(p1);
  for (auto& w : g.weights)
    for (auto& v : w.data()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  sgd_step(p1, g, OptimizerState::create(OptimizerMode::Sgd, 0.001, p1));
  const auto half = OptimizerState::create(OptimizerMode::Sgd, 0.0005, p2);
  sgd_step(p2, g, half);
  sgd_step(p2, g, half);
  for (std::size_t l = 0; l < p1.layers.size(); ++l)
    for (std::size_t i = 0; i < p1.layers[l].weights.data().size(); ++i)
      EXPECT_NEAR(p1.layers[l].weights.data()[i], p2.layers[l].weights.data()[i], 1e-15);
}

TEST(Sgd, SmallStepDecreasesSampleCost) {
  const auto c = chain({10, 8, 8, 8, 3});
  auto p = NetworkParameters::initialize(c, 50);
  std::mt19937_64 rng(51);
  const auto x = random_vector(rng, 10);
  const auto y = random_vector(rng, 3);
  const double before = cost_at(p, c, x, y);
  const auto g = backprop(p, c, forward(p, c, x), y);
  sgd_step(p, g, OptimizerState::create(OptimizerMode::Sgd, 1e-6, p));
  EXPECT_LT(cost_at(p, c, x, y), before);
}

TEST(Adam, FirstStepClosedForm) {
  const auto c = chain({2, 2});
  auto p = NetworkParameters::zeros(c);
  p.layers[0].weights(0, 0) = 0.3;
  auto g = Gradients::zeros_like(p);
  const double grads[4] = {0.7, -2.5, 1e-3, -4e-8};
  for (int i = 0; i < 4; ++i) g.weights[0].data()[i] = grads[i];
  g.bias[0] = {5.0, 0.0};
  auto state = OptimizerState::create(OptimizerMode::Adam, 0.0005, p);
  const auto before = p;
  adam_step(p, g, state);
  EXPECT_EQ(state.step, 1u);
  for (int i = 0; i < 4; ++i) {
    const double want = before.layers[0].weights.data()[i] - 0.0005 * grads[i] / (std::abs(grads[i]) + 1e-7);
    EXPECT_NEAR(p.layers[0].weights.data()[i], want, 1e-12);
  }
  EXPECT_NEAR(p.layers[0].bias[0], -0.0005 * 5.0 / (5.0 + 1e-7), 1e-12);
  EXPECT_EQ(p.layers[0].bias[1], 0.0);
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  const auto c = chain({1, 1});
  auto p = NetworkParameters::zeros(c);
  auto g = Gradients::zeros_like(p);
  g.weights[0](0, 0) = -3.0;
  auto state = OptimizerState::create(OptimizerMode::Adam, 0.001, p);
  double prev = 0;
  for (int t = 0; t < 200; ++t) {
    adam_step(p, g, state);
    const double step = p.layers[0].weights(0, 0) - prev;
    prev = p.layers[0].weights(0, 0);
    EXPECT_NEAR(step, 0.001, 1e-9);
  }
}

TEST(Adam, ZeroGradientFreshState) {
  const auto c = NetworkConfig{};
  auto p = NetworkParameters::initialize(c, 3);
  const auto before = p;
  auto state = OptimizerState::create(OptimizerMode::Adam, 0.0005, p);
  adam_step(p, Gradients::zeros_like(p), state);
  EXPECT_EQ(p, before);
  auto sgd = OptimizerState::create(OptimizerMode::Sgd, 0.0005, p);
  EXPECT_THROWS_KIND(adam_step(p, Gradients::zeros_like(p), sgd), ErrorKind::Config);
}

TEST(ModelIo, RoundTripBitIdentical) {
  TempDir dir;
  const auto m = small_model(61);
  save_model(m, dir / "m.bin");
  const auto back = load_model(dir / "m.bin");
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.norm, m.norm);
  std::mt19937_64 rng(62);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_vector(rng, 10, 0, 1);
    const auto a = forward(m.params, m.config, x).output();
    const auto b = forward(back.params, back.config, x).output();
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(std::bit_cast<std::uint64_t>(a[k]), std::bit_cast<std::uint64_t>(b[k]));
  }
  EXPECT_EQ(serialize_model(back), serialize_model(m));
}

TEST(ModelIo, TruncatedFile) {
  const auto bytes = serialize_model(small_model(1));
  for (std::size_t cut : {std::size_t{0}, std::size_t{7}, std::size_t{19}, bytes.size() / 2, bytes.size() - 1}) {
    std::span<const std::uint8_t> part(bytes.data(), cut);
    EXPECT_THROWS_KIND(deserialize_model(part), ErrorKind::Load) << cut;
  }
}

TEST(ModelIo, CorruptionDetected) {
  auto bytes = serialize_model(small_model(2));
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROWS_KIND(deserialize_model(flipped), ErrorKind::Load);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROWS_KIND(deserialize_model(magic), ErrorKind::Load);
  auto version = bytes;
  version[8] = 2;
  EXPECT_THROWS_KIND(deserialize_model(version), ErrorKind::Load);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROWS_KIND(deserialize_model(trailing), ErrorKind::Load);
}

TEST(ModelIo, ConfigHashMismatch) {
  auto bytes = serialize_model(small_model(3));
  // Payload starts after magic, version and length; its first field is the
  // config hash. Patch it and reseal the checksum so only the hash is wrong.
  constexpr std::size_t payload = 8 + 4 + 8;
  bytes[payload] ^= 0x01;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = payload; i < bytes.size() - 8; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  for (std::size_t i = 0; i < 8; ++i) bytes[bytes.size() - 8 + i] = static_cast<std::uint8_t>(h >> (8 * i));
  try {
    deserialize_model(bytes);
    FAIL() << "expected a load error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Load);
    EXPECT_NE(std::string(e.what()).find("hash"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, MissingFile) {
  TempDir dir;
  EXPECT_THROWS_KIND(load_model(dir / "nope.bin"), ErrorKind::Io);
}
