#include "sensoropt/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "sensoropt/errors.hpp"
#include "sensoropt/rng.hpp"

namespace sensoropt {

namespace {

constexpr std::size_t kEvalBatch = 256;
constexpr const char* kOutputFileNames[kNetworkOutputs] = {"signal", "snr", "output3"};

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::Config, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorKind::Config, "batch size must be >= 1");
  if (!(learning_rate > 0)) fail(ErrorKind::Config, "learning rate must be > 0");
  if (!(reduction_factor > 1)) fail(ErrorKind::Config, "reduction factor must be > 1");
  if (patience < 1) fail(ErrorKind::Config, "patience must be >= 1");
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  std::fprintf(f, "epoch,train_mse,val_mse,lr\n");
  for (const auto& e : epochs)
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.train_mse, e.val_mse, e.learning_rate);
  const bool ok = std::ferror(f) == 0;
  if (std::fclose(f) != 0 || !ok) fail(ErrorKind::Io, "write failed: " + path.string());
}

EncodedSet EncodedSet::encode(const Table& table, std::span<const std::size_t> indices,
                              const NormalizationSpec& norm) {
  EncodedSet s;
  s.rows = indices.size();
  s.inputs.reserve(s.rows * kNetworkInputs);
  s.targets.reserve(s.rows * kNetworkOutputs);
  for (std::size_t i : indices) {
    const SampleRow& r = table.at(i);
    const auto in = encode_inputs(r, norm);
    const auto out = encode_outputs(r, norm);
    s.inputs.insert(s.inputs.end(), in.begin(), in.end());
    s.targets.insert(s.targets.end(), out.begin(), out.end());
  }
  return s;
}

double mean_squared_error(const NetworkParameters& params, const NetworkConfig& config, const EncodedSet& data) {
  if (data.rows == 0) fail(ErrorKind::Config, "mean squared error of an empty set");
  const std::size_t n_in = config.input_size();
  const std::size_t n_out = config.output_size();
  BatchEngine engine(config, std::min(kEvalBatch, data.rows));
  std::vector<double> out(engine.max_batch() * n_out);
  double sum = 0;
  for (std::size_t start = 0; start < data.rows; start += engine.max_batch()) {
    const std::size_t b = std::min(engine.max_batch(), data.rows - start);
    engine.forward(params, std::span<const double>(data.inputs).subspan(start * n_in, b * n_in), b);
    engine.outputs(std::span<double>(out).first(b * n_out));
    for (std::size_t i = 0; i < b * n_out; ++i) {
      const double d = data.targets[start * n_out + i] - out[i];
      sum += d * d;
    }
  }
  return sum / static_cast<double>(data.rows * n_out);
}

PlateauSchedule::PlateauSchedule(double initial_rate, std::size_t patience, double factor)
    : rate_(initial_rate), patience_(patience), factor_(factor), best_(std::numeric_limits<double>::infinity()) {}

double PlateauSchedule::observe(double val_loss) {
  if (val_loss < best_) {
    best_ = val_loss;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ >= patience_) {
    rate_ /= factor_;
    bad_epochs_ = 0;
    ++reductions_;
  }
  return rate_;
}

TrainResult train(const NetworkConfig& config, NetworkParameters initial, const EncodedSet& train_set,
                  const EncodedSet& validation_set, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  config.validate();
  cfg.validate();
  initial.check_shapes(config);
  if (train_set.rows == 0 || validation_set.rows == 0) fail(ErrorKind::Config, "training and validation sets must be nonempty");
  const std::size_t n_in = config.input_size();
  const std::size_t n_out = config.output_size();
  if (train_set.inputs.size() != train_set.rows * n_in || train_set.targets.size() != train_set.rows * n_out ||
      validation_set.inputs.size() != validation_set.rows * n_in ||
      validation_set.targets.size() != validation_set.rows * n_out)
    fail(ErrorKind::Shape, "encoded sets do not match the network dimensions");

  TrainResult result{std::move(initial), {}};
  NetworkParameters& params = result.params;
  OptimizerState state = OptimizerState::create(cfg.optimizer, cfg.learning_rate, params);
  PlateauSchedule schedule(cfg.learning_rate, cfg.patience, cfg.reduction_factor);
  Gradients grads = Gradients::zeros_like(params);

  const std::size_t batch_size = std::min(cfg.batch_size, train_set.rows);
  BatchEngine engine(config, batch_size);
  std::vector<std::size_t> order(train_set.rows);
  std::vector<double> batch_in(batch_size * n_in);
  std::vector<double> batch_out(batch_size * n_out);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    state.learning_rate = schedule.rate();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(cfg.seed, epoch));
    fisher_yates(std::span<std::size_t>(order), rng);

    double cost_sum = 0;  // sum over samples of the quadratic cost
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
      const std::size_t b = std::min(batch_size, order.size() - start);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t row = order[start + i];
        std::copy_n(train_set.inputs.begin() + static_cast<std::ptrdiff_t>(row * n_in), n_in,
                    batch_in.begin() + static_cast<std::ptrdiff_t>(i * n_in));
        std::copy_n(train_set.targets.begin() + static_cast<std::ptrdiff_t>(row * n_out), n_out,
                    batch_out.begin() + static_cast<std::ptrdiff_t>(i * n_out));
      }
      engine.forward(params, std::span<const double>(batch_in).first(b * n_in), b);
      const double cost = engine.backward(params, std::span<const double>(batch_out).first(b * n_out), grads);
      if (!std::isfinite(cost)) throw TrainingDiverged(epoch, batch_index, params.l2_norm());
      cost_sum += cost * static_cast<double>(b);
      optimizer_step(params, grads, state);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = state.learning_rate;
    // Quadratic cost is half the squared error summed over outputs.
    rec.train_mse = 2.0 * cost_sum / static_cast<double>(train_set.rows * n_out);
    rec.val_mse = mean_squared_error(params, config, validation_set);
    if (!std::isfinite(rec.val_mse)) throw TrainingDiverged(epoch, batch_index, params.l2_norm());
    result.history.epochs.push_back(rec);
    schedule.observe(rec.val_mse);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

std::optional<double> r_squared(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) fail(ErrorKind::Shape, "r_squared: length mismatch");
  if (actual.empty()) fail(ErrorKind::Shape, "r_squared: empty input");
  const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
  double ss_tot = 0;
  double ss_res = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  }
  if (ss_tot == 0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

EvaluationReport evaluate(const Model& model, const Table& table, std::span<const std::size_t> rows) {
  if (rows.empty()) fail(ErrorKind::Config, "evaluate needs at least one row");
  const EncodedSet data = EncodedSet::encode(table, rows, model.norm);
  const std::size_t n_in = model.config.input_size();
  const std::size_t n_out = model.config.output_size();
  if (n_out != kNetworkOutputs || n_in != kNetworkInputs) fail(ErrorKind::Shape, "model is not a 10-3 surrogate");

  std::vector<double> predicted(data.rows * n_out);
  BatchEngine engine(model.config, std::min(kEvalBatch, data.rows));
  for (std::size_t start = 0; start < data.rows; start += engine.max_batch()) {
    const std::size_t b = std::min(engine.max_batch(), data.rows - start);
    engine.forward(model.params, std::span<const double>(data.inputs).subspan(start * n_in, b * n_in), b);
    engine.outputs(std::span<double>(predicted).subspan(start * n_out, b * n_out));
  }

  EvaluationReport report;
  report.rows = data.rows;
  std::vector<double> a(data.rows);
  std::vector<double> p(data.rows);
  for (std::size_t j = 0; j < n_out; ++j) {
    double se = 0;
    for (std::size_t i = 0; i < data.rows; ++i) {
      a[i] = data.targets[i * n_out + j];
      p[i] = predicted[i * n_out + j];
      se += (a[i] - p[i]) * (a[i] - p[i]);
    }
    report.outputs[j].mse = se / static_cast<double>(data.rows);
    report.outputs[j].r2 = r_squared(a, p);
  }
  report.actual.reserve(data.rows);
  report.predicted.reserve(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i) {
    const SampleRow& r = table[rows[i]];
    report.actual.push_back({r.signal, r.snr, r.output3});
    report.predicted.push_back(
        decode_outputs(std::span<const double, kNetworkOutputs>(predicted.data() + i * n_out, kNetworkOutputs), model.norm));
  }
  return report;
}

void EvaluationReport::write_pairs(const std::filesystem::path& directory, const std::string& prefix) const {
  for (std::size_t j = 0; j < kNetworkOutputs; ++j) {
    const auto path = directory / (prefix + kOutputFileNames[j] + ".csv");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    std::fprintf(f, "actual,predicted\n");
    for (std::size_t i = 0; i < actual.size(); ++i) {
      const auto pick = [j](const SensorOutputs& o) { return j == 0 ? o.signal : j == 1 ? o.snr : o.output3; };
      std::fprintf(f, "%.17g,%.17g\n", pick(actual[i]), pick(predicted[i]));
    }
    const bool ok = std::ferror(f) == 0;
    if (std::fclose(f) != 0 || !ok) fail(ErrorKind::Io, "write failed: " + path.string());
  }
}

}  // namespace sensoropt
