#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sensoropt/dataset.hpp"
#include "sensoropt/neuralnet.hpp"

namespace sensoropt {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 20;
  double learning_rate = 5e-4;
  std::size_t patience = 5;
  double reduction_factor = 2;
  std::uint64_t seed = 42;
  OptimizerMode optimizer = OptimizerMode::Adam;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_mse = 0;
  double val_mse = 0;
  double learning_rate = 0;  // rate in effect during the epoch
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  // epoch,train_mse,val_mse,lr
  void write_csv(const std::filesystem::path& path) const;
};

// Network-ready rows: inputs are rows x 10, targets rows x 3, sample-major.
struct EncodedSet {
  std::size_t rows = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  static EncodedSet encode(const Table& table, std::span<const std::size_t> indices,
                           const NormalizationSpec& norm);
};

// Mean squared error over all samples and outputs.
double mean_squared_error(const NetworkParameters& params, const NetworkConfig& config,
                          const EncodedSet& data);

// Halves (by `factor`) the learning rate after `patience` consecutive epochs
// without a new best validation loss. Threshold and cooldown are zero.
class PlateauSchedule {
 public:
  PlateauSchedule(double initial_rate, std::size_t patience, double factor);

  // Records one epoch's validation loss; returns the rate for the next epoch.
  double observe(double val_loss);

  double rate() const noexcept { return rate_; }
  double best() const noexcept { return best_; }
  std::size_t reductions() const noexcept { return reductions_; }

 private:
  double rate_;
  std::size_t patience_;
  double factor_;
  double best_;
  std::size_t bad_epochs_ = 0;
  std::size_t reductions_ = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
  NetworkParameters params;
  TrainHistory history;
};

// Runs exactly cfg.epochs epochs. Each epoch shuffles the training rows with a
// seed derived from (cfg.seed, epoch), steps once per batch on the batch-mean
// gradient (the last batch may be short), then evaluates validation MSE.
TrainResult train(const NetworkConfig& config, NetworkParameters initial, const EncodedSet& train_set,
                  const EncodedSet& validation_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// 1 - SS_res / SS_tot; nullopt when the actuals have zero variance.
std::optional<double> r_squared(std::span<const double> actual, std::span<const double> predicted);

struct OutputMetrics {
  double mse = 0;               // normalized units
  std::optional<double> r2;     // normalized units
};

struct EvaluationReport {
  std::array<OutputMetrics, kNetworkOutputs> outputs;
  std::size_t rows = 0;
  // Physical units, one entry per evaluated row.
  std::vector<SensorOutputs> actual;
  std::vector<SensorOutputs> predicted;

  // One CSV per output: actual,predicted.
  void write_pairs(const std::filesystem::path& directory, const std::string& prefix) const;
};

EvaluationReport evaluate(const Model& model, const Table& table, std::span<const std::size_t> rows);

}  // namespace sensoropt
