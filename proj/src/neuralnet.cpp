#include "sensoropt/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sensoropt/errors.hpp"
#include "sensoropt/rng.hpp"

namespace sensoropt {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

double activation(const NetworkConfig& c, std::size_t layer, double z) {
  if (layer == c.layer_count() && c.output_activation == OutputActivation::Identity) return z;
  return leaky_relu(z, c.leaky_slope);
}

double activation_derivative(const NetworkConfig& c, std::size_t layer, double z) {
  if (layer == c.layer_count() && c.output_activation == OutputActivation::Identity) return 1.0;
  return leaky_relu_derivative(z, c.leaky_slope);
}

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    fail(ErrorKind::Shape, std::string(what) + ": expected " + std::to_string(want) + ", got " + std::to_string(got));
}

}  // namespace

NetworkConfig NetworkConfig::surrogate(std::vector<std::size_t> hidden) {
  NetworkConfig c;
  c.layer_sizes.clear();
  c.layer_sizes.push_back(kNetworkInputs);
  c.layer_sizes.insert(c.layer_sizes.end(), hidden.begin(), hidden.end());
  c.layer_sizes.push_back(kNetworkOutputs);
  return c;
}

void NetworkConfig::validate() const {
  if (layer_sizes.size() < 2) fail(ErrorKind::Config, "network needs an input and an output layer");
  for (std::size_t s : layer_sizes)
    if (s == 0) fail(ErrorKind::Config, "layer sizes must be >= 1");
  if (!(leaky_slope > 0 && leaky_slope < 1)) fail(ErrorKind::Config, "leaky slope must be in (0, 1)");
  if (output_activation != OutputActivation::Identity && output_activation != OutputActivation::LeakyRelu)
    fail(ErrorKind::Config, "unknown output activation");
}

void NetworkConfig::validate_surrogate() const {
  validate();
  if (input_size() != kNetworkInputs) fail(ErrorKind::Config, "surrogate input layer must have 10 neurons");
  if (output_size() != kNetworkOutputs) fail(ErrorKind::Config, "surrogate output layer must have 3 neurons");
  if (layer_sizes.size() < 4) fail(ErrorKind::Config, "surrogate needs at least two hidden layers");
}

std::uint64_t NetworkConfig::hash() const {
  std::uint64_t h = kFnvOffset;
  const auto n = static_cast<std::uint64_t>(layer_sizes.size());
  fnv_bytes(h, &n, sizeof n);
  for (std::size_t s : layer_sizes) {
    const auto v = static_cast<std::uint64_t>(s);
    fnv_bytes(h, &v, sizeof v);
  }
  fnv_bytes(h, &leaky_slope, sizeof leaky_slope);
  const auto act = static_cast<std::uint32_t>(output_activation);
  fnv_bytes(h, &act, sizeof act);
  return h;
}

NetworkParameters NetworkParameters::zeros(const NetworkConfig& config) {
  config.validate();
  NetworkParameters p;
  for (std::size_t l = 1; l < config.layer_sizes.size(); ++l) {
    p.layers.push_back({Matrix(config.layer_sizes[l], config.layer_sizes[l - 1]),
                        std::vector<double>(config.layer_sizes[l], 0.0)});
  }
  return p;
}

NetworkParameters NetworkParameters::initialize(const NetworkConfig& config, std::uint64_t seed) {
  NetworkParameters p = zeros(config);
  std::mt19937_64 rng(mix_seed(seed, 0x1417u));
  for (auto& layer : p.layers) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    for (double& w : layer.weights.data()) w = uniform_real(rng, -limit, limit);
  }
  return p;
}

void NetworkParameters::check_shapes(const NetworkConfig& config) const {
  check_size(layers.size(), config.layer_count(), "layer count");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    check_size(layers[l].weights.rows(), config.layer_sizes[l + 1], "weight rows");
    check_size(layers[l].weights.cols(), config.layer_sizes[l], "weight columns");
    check_size(layers[l].bias.size(), config.layer_sizes[l + 1], "bias length");
  }
}

bool NetworkParameters::all_finite() const {
  for (const auto& layer : layers) {
    for (double w : layer.weights.data())
      if (!std::isfinite(w)) return false;
    for (double b : layer.bias)
      if (!std::isfinite(b)) return false;
  }
  return true;
}

double NetworkParameters::l2_norm() const {
  double s = 0;
  for (const auto& layer : layers) {
    for (double w : layer.weights.data()) s += w * w;
    for (double b : layer.bias) s += b * b;
  }
  return std::sqrt(s);
}

std::size_t NetworkParameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.data().size() + layer.bias.size();
  return n;
}

Gradients Gradients::zeros_like(const NetworkParameters& params) {
  Gradients g;
  for (const auto& layer : params.layers) {
    g.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
    g.bias.emplace_back(layer.bias.size(), 0.0);
    g.deltas.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

void Gradients::set_zero() {
  for (auto& m : weights) std::fill(m.data().begin(), m.data().end(), 0.0);
  for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
  for (auto& d : deltas) std::fill(d.begin(), d.end(), 0.0);
}

ForwardTrace forward(const NetworkParameters& params, const NetworkConfig& config,
                     std::span<const double> input) {
  check_size(input.size(), config.input_size(), "input dimension");
  for (double x : input)
    if (!std::isfinite(x)) fail(ErrorKind::Domain, "non-finite network input");

  ForwardTrace t;
  t.z.resize(config.layer_sizes.size());
  t.a.resize(config.layer_sizes.size());
  t.a[0].assign(input.begin(), input.end());
  for (std::size_t l = 1; l < config.layer_sizes.size(); ++l) {
    const Layer& layer = params.layers[l - 1];
    const auto& prev = t.a[l - 1];
    auto& z = t.z[l];
    auto& a = t.a[l];
    z.resize(layer.weights.rows());
    a.resize(layer.weights.rows());
    for (std::size_t j = 0; j < z.size(); ++j) {
      double s = layer.bias[j];
      const auto w = layer.weights.row(j);
      for (std::size_t k = 0; k < prev.size(); ++k) s += w[k] * prev[k];
      z[j] = s;
      a[j] = activation(config, l, s);
    }
  }
  return t;
}

double quadratic_cost(std::span<const double> y, std::span<const double> output) {
  check_size(output.size(), y.size(), "cost dimension");
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - output[i];
    s += d * d;
  }
  return 0.5 * s;
}

std::vector<double> output_delta(const NetworkConfig& config, std::span<const double> y,
                                 const ForwardTrace& trace) {
  const std::size_t L = config.layer_count();
  const auto& aL = trace.a.at(L);
  const auto& zL = trace.z.at(L);
  check_size(y.size(), aL.size(), "target dimension");
  std::vector<double> delta(aL.size());
  for (std::size_t j = 0; j < delta.size(); ++j)
    delta[j] = -(y[j] - aL[j]) * activation_derivative(config, L, zL[j]);
  return delta;
}

Gradients backprop(const NetworkParameters& params, const NetworkConfig& config, const ForwardTrace& trace,
                   std::span<const double> y) {
  const std::size_t L = config.layer_count();
  Gradients g = Gradients::zeros_like(params);
  g.deltas[L - 1] = output_delta(config, y, trace);
  for (std::size_t l = L; l >= 1; --l) {
    const auto& delta = g.deltas[l - 1];
    const auto& prev = trace.a[l - 1];
    g.bias[l - 1] = delta;
    Matrix& gw = g.weights[l - 1];
    for (std::size_t j = 0; j < delta.size(); ++j)
      for (std::size_t k = 0; k < prev.size(); ++k) gw(j, k) = delta[j] * prev[k];
    if (l == 1) break;
    const Matrix& w = params.layers[l - 1].weights;
    auto& below = g.deltas[l - 2];
    for (std::size_t k = 0; k < below.size(); ++k) {
      double s = 0;
      for (std::size_t j = 0; j < delta.size(); ++j) s += w(j, k) * delta[j];
      below[k] = s * activation_derivative(config, l - 1, trace.z[l - 1][k]);
    }
  }
  return g;
}

Gradients batch_backprop(const NetworkParameters& params, const NetworkConfig& config,
                         std::span<const double> inputs, std::span<const double> targets, std::size_t batch) {
  if (batch == 0) fail(ErrorKind::Shape, "empty batch");
  check_size(inputs.size(), batch * config.input_size(), "batch inputs");
  check_size(targets.size(), batch * config.output_size(), "batch targets");
  Gradients sum = Gradients::zeros_like(params);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto trace = forward(params, config, inputs.subspan(b * config.input_size(), config.input_size()));
    const auto g = backprop(params, config, trace, targets.subspan(b * config.output_size(), config.output_size()));
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      auto dst = sum.weights[l].data();
      auto src = g.weights[l].data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      for (std::size_t i = 0; i < g.bias[l].size(); ++i) sum.bias[l][i] += g.bias[l][i];
      for (std::size_t i = 0; i < g.deltas[l].size(); ++i) sum.deltas[l][i] += g.deltas[l][i];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch);
  for (std::size_t l = 0; l < sum.weights.size(); ++l) {
    for (double& v : sum.weights[l].data()) v *= inv;
    for (double& v : sum.bias[l]) v *= inv;
    for (double& v : sum.deltas[l]) v *= inv;
  }
  return sum;
}

BatchEngine::BatchEngine(const NetworkConfig& config, std::size_t max_batch)
    : config_(config), max_batch_(max_batch) {
  config_.validate();
  if (max_batch == 0) fail(ErrorKind::Config, "batch engine needs max_batch >= 1");
  const std::size_t n = config_.layer_sizes.size();
  z_.resize(n);
  a_.resize(n);
  delta_.resize(n);
  std::size_t widest = 0;
  for (std::size_t l = 0; l < n; ++l) {
    const std::size_t width = config_.layer_sizes[l] * max_batch;
    z_[l].resize(width);
    a_[l].resize(width);
    delta_[l].resize(width);
    widest = std::max(widest, config_.layer_sizes[l]);
  }
  transposed_.resize(widest * max_batch);
}

void BatchEngine::forward(const NetworkParameters& params, std::span<const double> inputs, std::size_t batch) {
  if (batch == 0 || batch > max_batch_) fail(ErrorKind::Shape, "batch size outside engine capacity");
  const std::size_t n_in = config_.input_size();
  check_size(inputs.size(), batch * n_in, "batch inputs");
  batch_ = batch;

  double* a0 = a_[0].data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t k = 0; k < n_in; ++k) a0[k * batch + b] = inputs[b * n_in + k];

  const std::size_t L = config_.layer_count();
  for (std::size_t l = 1; l <= L; ++l) {
    const Layer& layer = params.layers[l - 1];
    const std::size_t fan_in = layer.weights.cols();
    const std::size_t fan_out = layer.weights.rows();
    const double* prev = a_[l - 1].data();
    double* z = z_[l].data();
    double* a = a_[l].data();
    const bool identity = l == L && config_.output_activation == OutputActivation::Identity;
    const double alpha = config_.leaky_slope;
    for (std::size_t j = 0; j < fan_out; ++j) {
      double* zj = z + j * batch;
      const double bj = layer.bias[j];
      for (std::size_t b = 0; b < batch; ++b) zj[b] = bj;
      const auto w = layer.weights.row(j);
      for (std::size_t k = 0; k < fan_in; ++k) {
        const double wk = w[k];
        const double* pk = prev + k * batch;
        for (std::size_t b = 0; b < batch; ++b) zj[b] += wk * pk[b];
      }
      double* aj = a + j * batch;
      if (identity) {
        for (std::size_t b = 0; b < batch; ++b) aj[b] = zj[b];
      } else {
        for (std::size_t b = 0; b < batch; ++b) aj[b] = zj[b] >= 0 ? zj[b] : alpha * zj[b];
      }
    }
  }
}

void BatchEngine::outputs(std::span<double> out) const {
  const std::size_t n_out = config_.output_size();
  check_size(out.size(), batch_ * n_out, "output buffer");
  const double* aL = a_.back().data();
  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t j = 0; j < n_out; ++j) out[b * n_out + j] = aL[j * batch_ + b];
}

double BatchEngine::backward(const NetworkParameters& params, std::span<const double> targets, Gradients& grads) {
  const std::size_t batch = batch_;
  const std::size_t L = config_.layer_count();
  const std::size_t n_out = config_.output_size();
  check_size(targets.size(), batch * n_out, "batch targets");
  const double alpha = config_.leaky_slope;
  const double inv = 1.0 / static_cast<double>(batch);

  double cost = 0;
  {
    const bool identity = config_.output_activation == OutputActivation::Identity;
    const double* aL = a_[L].data();
    const double* zL = z_[L].data();
    double* dL = delta_[L].data();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < n_out; ++j) {
        const std::size_t i = j * batch + b;
        const double diff = targets[b * n_out + j] - aL[i];
        cost += 0.5 * diff * diff;
        dL[i] = -diff * (identity ? 1.0 : leaky_relu_derivative(zL[i], alpha));
      }
    }
  }

  for (std::size_t l = L; l >= 1; --l) {
    const Matrix& w = params.layers[l - 1].weights;
    const std::size_t fan_in = w.cols();
    const std::size_t fan_out = w.rows();
    const double* delta = delta_[l].data();
    const double* prev = a_[l - 1].data();

    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < fan_in; ++k) transposed_[b * fan_in + k] = prev[k * batch + b];

    Matrix& gw = grads.weights[l - 1];
    auto& gb = grads.bias[l - 1];
    for (std::size_t j = 0; j < fan_out; ++j) {
      const double* dj = delta + j * batch;
      auto row = gw.row(j);
      std::fill(row.begin(), row.end(), 0.0);
      double bsum = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double d = dj[b];
        bsum += d;
        const double* ab = transposed_.data() + b * fan_in;
        for (std::size_t k = 0; k < fan_in; ++k) row[k] += d * ab[k];
      }
      for (std::size_t k = 0; k < fan_in; ++k) row[k] *= inv;
      gb[j] = bsum * inv;
    }

    if (l == 1) break;
    double* below = delta_[l - 1].data();
    const double* zb = z_[l - 1].data();
    for (std::size_t k = 0; k < fan_in; ++k) {
      double* bk = below + k * batch;
      for (std::size_t b = 0; b < batch; ++b) bk[b] = 0;
      for (std::size_t j = 0; j < fan_out; ++j) {
        const double wjk = w(j, k);
        const double* dj = delta + j * batch;
        for (std::size_t b = 0; b < batch; ++b) bk[b] += wjk * dj[b];
      }
      const double* zk = zb + k * batch;
      for (std::size_t b = 0; b < batch; ++b) bk[b] *= zk[b] > 0 ? 1.0 : alpha;
    }
  }
  return cost * inv;
}

OptimizerState OptimizerState::create(OptimizerMode mode, double learning_rate, const NetworkParameters& params) {
  if (!(learning_rate > 0)) fail(ErrorKind::Config, "learning rate must be > 0");
  OptimizerState s;
  s.mode = mode;
  s.learning_rate = learning_rate;
  if (mode == OptimizerMode::Adam) {
    s.first_moment = Gradients::zeros_like(params);
    s.second_moment = Gradients::zeros_like(params);
    s.first_moment.deltas.clear();
    s.second_moment.deltas.clear();
  }
  return s;
}

void sgd_step(NetworkParameters& params, const Gradients& grads, const OptimizerState& state) {
  const double eta = state.learning_rate;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto w = params.layers[l].weights.data();
    const auto gw = grads.weights[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * gw[i];
    auto& b = params.layers[l].bias;
    const auto& gb = grads.bias[l];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= eta * gb[i];
  }
}

namespace {

void adam_update(std::span<double> p, std::span<const double> g, std::span<double> m, std::span<double> v,
                 double b1, double b2, double step_size, double v_correction, double eps) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= step_size * m[i] / (std::sqrt(v[i] / v_correction) + eps);
  }
}

}  // namespace

void adam_step(NetworkParameters& params, const Gradients& grads, OptimizerState& state) {
  if (state.mode != OptimizerMode::Adam) fail(ErrorKind::Config, "adam_step needs an adaptive-moment state");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double m_correction = 1.0 - std::pow(state.beta1, t);
  const double v_correction = 1.0 - std::pow(state.beta2, t);
  const double step_size = state.learning_rate / m_correction;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    adam_update(params.layers[l].weights.data(), grads.weights[l].data(), state.first_moment.weights[l].data(),
                state.second_moment.weights[l].data(), state.beta1, state.beta2, step_size, v_correction,
                state.epsilon);
    adam_update(params.layers[l].bias, grads.bias[l], state.first_moment.bias[l], state.second_moment.bias[l],
                state.beta1, state.beta2, step_size, v_correction, state.epsilon);
  }
}

void optimizer_step(NetworkParameters& params, const Gradients& grads, OptimizerState& state) {
  if (state.mode == OptimizerMode::Adam)
    adam_step(params, grads, state);
  else
    sgd_step(params, grads, state);
}

}  // namespace sensoropt
