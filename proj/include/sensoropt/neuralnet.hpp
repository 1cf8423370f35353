#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sensoropt/dataset.hpp"

namespace sensoropt {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class OutputActivation : std::uint32_t { Identity = 0, LeakyRelu = 1 };

struct NetworkConfig {
  std::vector<std::size_t> layer_sizes{kNetworkInputs, 64, 64, 64, kNetworkOutputs};
  double leaky_slope = 0.3;
  OutputActivation output_activation = OutputActivation::Identity;

  static NetworkConfig surrogate(std::vector<std::size_t> hidden);

  std::size_t layer_count() const { return layer_sizes.size() - 1; }
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }

  // Any chain of at least one layer.
  void validate() const;
  // Additionally: 10 inputs, 3 outputs, at least two hidden layers.
  void validate_surrogate() const;

  // FNV-1a over the canonical byte encoding; stored in model files.
  std::uint64_t hash() const;

  bool operator==(const NetworkConfig&) const = default;
};

// Layer l maps a^{l-1} (fan_in) to a^l (fan_out); weights are fan_out x fan_in.
struct Layer {
  Matrix weights;
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

struct NetworkParameters {
  std::vector<Layer> layers;

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static NetworkParameters initialize(const NetworkConfig& config, std::uint64_t seed);
  static NetworkParameters zeros(const NetworkConfig& config);

  void check_shapes(const NetworkConfig& config) const;
  bool all_finite() const;
  double l2_norm() const;
  std::size_t parameter_count() const;

  bool operator==(const NetworkParameters&) const = default;
};

// Index l runs 0..L; a[0] is the input and z[0] is empty.
struct ForwardTrace {
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> a;

  std::span<const double> output() const& { return a.back(); }
  std::vector<double> output() && { return std::move(a.back()); }
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;
  std::vector<std::vector<double>> deltas;  // delta^l per layer, l = 1..L stored at l-1

  static Gradients zeros_like(const NetworkParameters& params);
  void set_zero();
};

inline double leaky_relu(double x, double alpha) { return x >= 0 ? x : alpha * x; }
inline double leaky_relu_derivative(double x, double alpha) { return x > 0 ? 1.0 : alpha; }

ForwardTrace forward(const NetworkParameters& params, const NetworkConfig& config,
                     std::span<const double> input);

// C = |y - a^L|^2 / 2
double quadratic_cost(std::span<const double> y, std::span<const double> output);

// delta^L = -(y - a^L) * sigma'(z^L)
std::vector<double> output_delta(const NetworkConfig& config, std::span<const double> y,
                                 const ForwardTrace& trace);

// Per-sample gradients of the quadratic cost.
Gradients backprop(const NetworkParameters& params, const NetworkConfig& config,
                   const ForwardTrace& trace, std::span<const double> y);

// Batch-mean gradient built from per-sample backprop; reference path for the
// batched engine below. `inputs` and `targets` are sample-major.
Gradients batch_backprop(const NetworkParameters& params, const NetworkConfig& config,
                         std::span<const double> inputs, std::span<const double> targets,
                         std::size_t batch);

// Batched forward/backward with preallocated buffers. Activations are stored
// feature-major (one contiguous run of `batch` values per neuron) so the inner
// loops run over the batch. Not thread-safe; use one engine per thread.
class BatchEngine {
 public:
  BatchEngine(const NetworkConfig& config, std::size_t max_batch);

  std::size_t max_batch() const noexcept { return max_batch_; }

  // `inputs` is sample-major, batch x input_size.
  void forward(const NetworkParameters& params, std::span<const double> inputs, std::size_t batch);

  // Copies the last forward's outputs, sample-major, into `out`.
  void outputs(std::span<double> out) const;

  // After forward(): writes the batch-mean gradient into `grads` and returns
  // the batch-mean quadratic cost.
  double backward(const NetworkParameters& params, std::span<const double> targets,
                  Gradients& grads);

 private:
  NetworkConfig config_;
  std::size_t max_batch_;
  std::size_t batch_ = 0;
  std::vector<std::vector<double>> z_;      // [layer][neuron * batch + b]
  std::vector<std::vector<double>> a_;
  std::vector<std::vector<double>> delta_;
  std::vector<double> transposed_;          // sample-major copy of a^{l-1}
};

enum class OptimizerMode : std::uint32_t { Sgd = 0, Adam = 1 };

struct OptimizerState {
  OptimizerMode mode = OptimizerMode::Adam;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::uint64_t step = 0;
  Gradients first_moment;
  Gradients second_moment;

  static OptimizerState create(OptimizerMode mode, double learning_rate,
                               const NetworkParameters& params);
};

// w <- w - eta dC/dw, b <- b - eta dC/db
void sgd_step(NetworkParameters& params, const Gradients& grads, const OptimizerState& state);

// Bias-corrected adaptive-moment update:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   w <- w - eta * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
void adam_step(NetworkParameters& params, const Gradients& grads, OptimizerState& state);

void optimizer_step(NetworkParameters& params, const Gradients& grads, OptimizerState& state);

// A trained surrogate: architecture, weights and the input/output scaling.
struct Model {
  NetworkConfig config;
  NetworkParameters params;
  NormalizationSpec norm;
};

// Binary container, layout in docs/model_format.md.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_model(const Model& model);
Model deserialize_model(std::span<const std::uint8_t> bytes);

}  // namespace sensoropt
