#include "sensoropt/sensoropt.h"

#include <cmath>
#include <limits>
#include <new>
#include <string>

#include "sensoropt/curves.hpp"
#include "sensoropt/errors.hpp"
#include "sensoropt/optimizer.hpp"
#include "sensoropt/sensor.hpp"
#include "sensoropt/training.hpp"

using namespace sensoropt;

struct sensoropt_oracle {
  SensorGroundTruth truth;
};

struct sensoropt_table {
  Table rows;
};

struct sensoropt_model {
  Model model;
};

struct sensoropt_history {
  TrainHistory history;
};

struct sensoropt_sweep {
  SweepResult result;
};

namespace {

thread_local std::string g_last_error;

class InvalidArgument : public std::exception {
 public:
  explicit InvalidArgument(const char* what) : what_(what) {}
  const char* what() const noexcept override { return what_; }

 private:
  const char* what_;
};

class NotFound : public std::exception {
 public:
  explicit NotFound(const char* what) : what_(what) {}
  const char* what() const noexcept override { return what_; }

 private:
  const char* what_;
};

sensoropt_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return SENSOROPT_ERR_CONFIG;
    case ErrorKind::Domain: return SENSOROPT_ERR_DOMAIN;
    case ErrorKind::Range: return SENSOROPT_ERR_RANGE;
    case ErrorKind::Shape: return SENSOROPT_ERR_SHAPE;
    case ErrorKind::Parse: return SENSOROPT_ERR_PARSE;
    case ErrorKind::Load: return SENSOROPT_ERR_LOAD;
    case ErrorKind::Io: return SENSOROPT_ERR_IO;
    case ErrorKind::Fit: return SENSOROPT_ERR_FIT;
    case ErrorKind::Overflow: return SENSOROPT_ERR_OVERFLOW;
    case ErrorKind::Diverged: return SENSOROPT_ERR_DIVERGED;
  }
  return SENSOROPT_ERR_INTERNAL;
}

sensoropt_status report(sensoropt_status status, const char* message) {
  g_last_error = message;
  return status;
}

template <typename F>
sensoropt_status guarded(F&& body) noexcept {
  try {
    body();
    return SENSOROPT_OK;
  } catch (const Error& e) {
    return report(status_of(e.kind()), e.what());
  } catch (const InvalidArgument& e) {
    return report(SENSOROPT_ERR_INVALID_ARGUMENT, e.what());
  } catch (const NotFound& e) {
    return report(SENSOROPT_ERR_NOT_FOUND, e.what());
  } catch (const std::bad_alloc&) {
    return report(SENSOROPT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return report(SENSOROPT_ERR_INTERNAL, e.what());
  } catch (...) {
    return report(SENSOROPT_ERR_INTERNAL, "unknown error");
  }
}

template <typename T>
void require(T* ptr, const char* what) {
  if (ptr == nullptr) throw InvalidArgument(what);
}

Settings to_settings(const sensoropt_settings& s) { return {s.input1, s.input2, s.input3, s.input4, s.input6}; }
sensoropt_settings from_settings(const Settings& s) { return {s.input1, s.input2, s.input3, s.input4, s.input6}; }

sensoropt_candidate to_candidate(const CandidateScore& c) {
  sensoropt_candidate out{};
  out.settings = from_settings(c.settings);
  out.criteria[0] = c.criteria.ideal_mae;
  out.criteria[1] = c.criteria.prominence.value_or(std::numeric_limits<double>::quiet_NaN());
  out.criteria[2] = c.criteria.line_mae;
  out.criteria[3] = c.criteria.output3_mean;
  out.prominence_defined = c.criteria.prominence.has_value() ? 1 : 0;
  for (std::size_t k = 0; k < kCriteriaCount; ++k) out.ranks[k] = c.ranks[k];
  return out;
}

InterpolationSpec to_interpolation(const sensoropt_interpolation& spec) {
  InterpolationSpec s;
  for (std::size_t i = 0; i < kSettingCount; ++i) s.axes[i] = AxisSpec::arithmetic(spec.min[i], spec.max[i], spec.step[i]);
  s.row_budget = spec.row_budget;
  return s;
}

}  // namespace

extern "C" {

const char* sensoropt_version(void) { return SENSOROPT_VERSION_STRING; }

const char* sensoropt_last_error(void) { return g_last_error.c_str(); }

const char* sensoropt_status_string(sensoropt_status status) {
  switch (status) {
    case SENSOROPT_OK: return "ok";
    case SENSOROPT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SENSOROPT_ERR_CONFIG: return "configuration error";
    case SENSOROPT_ERR_DOMAIN: return "domain error";
    case SENSOROPT_ERR_RANGE: return "range error";
    case SENSOROPT_ERR_SHAPE: return "shape error";
    case SENSOROPT_ERR_PARSE: return "parse error";
    case SENSOROPT_ERR_LOAD: return "load error";
    case SENSOROPT_ERR_IO: return "I/O error";
    case SENSOROPT_ERR_FIT: return "fit error";
    case SENSOROPT_ERR_OVERFLOW: return "overflow";
    case SENSOROPT_ERR_DIVERGED: return "training diverged";
    case SENSOROPT_ERR_NOT_FOUND: return "not found";
    case SENSOROPT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

sensoropt_status sensoropt_oracle_create(uint64_t seed, double noise_db, sensoropt_oracle** out) {
  return guarded([&] {
    require(out, "out is null");
    SensorGroundTruth t;
    t.seed = seed;
    t.noise_db = noise_db;
    t.validate();
    *out = new sensoropt_oracle{t};
  });
}

sensoropt_status sensoropt_oracle_load(const char* path, sensoropt_oracle** out) {
  return guarded([&] {
    require(path, "path is null");
    require(out, "out is null");
    *out = new sensoropt_oracle{SensorGroundTruth::load(path)};
  });
}

sensoropt_status sensoropt_oracle_save(const sensoropt_oracle* oracle, const char* path) {
  return guarded([&] {
    require(oracle, "oracle is null");
    require(path, "path is null");
    oracle->truth.save(path);
  });
}

sensoropt_status sensoropt_oracle_set_seed(sensoropt_oracle* oracle, uint64_t seed) {
  return guarded([&] {
    require(oracle, "oracle is null");
    oracle->truth.seed = seed;
  });
}

sensoropt_status sensoropt_oracle_set_noise(sensoropt_oracle* oracle, double noise_db) {
  return guarded([&] {
    require(oracle, "oracle is null");
    SensorGroundTruth t = oracle->truth;
    t.noise_db = noise_db;
    t.validate();
    oracle->truth = t;
  });
}

sensoropt_status sensoropt_oracle_simulate(const sensoropt_oracle* oracle, const sensoropt_settings* settings,
                                           int32_t input5, int32_t category, double* signal, double* snr,
                                           double* output3) {
  return guarded([&] {
    require(oracle, "oracle is null");
    require(settings, "settings is null");
    const auto o = simulate(oracle->truth, to_settings(*settings), input5, category);
    if (signal) *signal = o.signal;
    if (snr) *snr = o.snr;
    if (output3) *output3 = o.output3;
  });
}

sensoropt_status sensoropt_oracle_dip_depth(const sensoropt_oracle* oracle, const sensoropt_settings* settings,
                                            double* depth_db) {
  return guarded([&] {
    require(oracle, "oracle is null");
    require(settings, "settings is null");
    require(depth_db, "depth_db is null");
    *depth_db = dip_depth(oracle->truth, to_settings(*settings));
  });
}

void sensoropt_oracle_free(sensoropt_oracle* oracle) { delete oracle; }

sensoropt_status sensoropt_grid_combination_count(double scale, uint64_t* out) {
  return guarded([&] {
    require(out, "out is null");
    *out = GridSpec::scaled(scale).combination_count();
  });
}

sensoropt_status sensoropt_count_experiments(uint64_t resolution, uint64_t n_inputs, uint64_t* out) {
  return guarded([&] {
    require(out, "out is null");
    *out = count_experiments(resolution, n_inputs);
  });
}

sensoropt_status sensoropt_table_generate(const sensoropt_oracle* oracle, double scale, sensoropt_table** out) {
  return guarded([&] {
    require(oracle, "oracle is null");
    require(out, "out is null");
    *out = new sensoropt_table{generate_dataset(oracle->truth, GridSpec::scaled(scale))};
  });
}

sensoropt_status sensoropt_table_read_csv(const char* path, sensoropt_table** out) {
  return guarded([&] {
    require(path, "path is null");
    require(out, "out is null");
    *out = new sensoropt_table{read_csv(path)};
  });
}

sensoropt_status sensoropt_table_write_csv(const sensoropt_table* table, const char* path) {
  return guarded([&] {
    require(table, "table is null");
    require(path, "path is null");
    write_csv(table->rows, path);
  });
}

size_t sensoropt_table_row_count(const sensoropt_table* table) { return table ? table->rows.size() : 0; }

sensoropt_status sensoropt_table_get_row(const sensoropt_table* table, size_t index, sensoropt_row* out) {
  return guarded([&] {
    require(table, "table is null");
    require(out, "out is null");
    if (index >= table->rows.size()) fail(ErrorKind::Domain, "row index out of range");
    const SampleRow& r = table->rows[index];
    *out = {r.input1, r.input2, r.input3, r.input4, r.input5, r.input6, r.category, r.signal, r.snr, r.output3};
  });
}

void sensoropt_table_free(sensoropt_table* table) { delete table; }

sensoropt_status sensoropt_split_sizes(size_t n_rows, uint64_t seed, size_t* train, size_t* validation,
                                       size_t* test) {
  return guarded([&] {
    const SplitAssignment s = split(n_rows, seed);
    if (train) *train = s.train.size();
    if (validation) *validation = s.validation.size();
    if (test) *test = s.test.size();
  });
}

void sensoropt_train_options_init(sensoropt_train_options* options) {
  if (options == nullptr) return;
  const TrainConfig t;
  *options = {};
  options->epochs = static_cast<uint32_t>(t.epochs);
  options->batch_size = static_cast<uint32_t>(t.batch_size);
  options->learning_rate = t.learning_rate;
  options->patience = static_cast<uint32_t>(t.patience);
  options->reduction_factor = t.reduction_factor;
  options->seed = t.seed;
  options->optimizer = SENSOROPT_OPTIMIZER_ADAM;
  options->hidden_count = 3;
  options->hidden[0] = options->hidden[1] = options->hidden[2] = 64;
  options->leaky_slope = 0.3;
  options->leaky_output = 0;
}

sensoropt_status sensoropt_train(const sensoropt_table* table, const sensoropt_train_options* options,
                                 sensoropt_epoch_callback on_epoch, void* user, sensoropt_model** model,
                                 sensoropt_history** history) {
  return guarded([&] {
    require(table, "table is null");
    require(options, "options is null");
    if (options->hidden_count > SENSOROPT_MAX_HIDDEN_LAYERS) throw InvalidArgument("too many hidden layers");
    if (options->optimizer != SENSOROPT_OPTIMIZER_SGD && options->optimizer != SENSOROPT_OPTIMIZER_ADAM)
      throw InvalidArgument("unknown optimizer");

    NetworkConfig config = NetworkConfig::surrogate(
        std::vector<std::size_t>(options->hidden, options->hidden + options->hidden_count));
    config.leaky_slope = options->leaky_slope;
    config.output_activation = options->leaky_output ? OutputActivation::LeakyRelu : OutputActivation::Identity;
    config.validate_surrogate();

    TrainConfig cfg;
    cfg.epochs = options->epochs;
    cfg.batch_size = options->batch_size;
    cfg.learning_rate = options->learning_rate;
    cfg.patience = options->patience;
    cfg.reduction_factor = options->reduction_factor;
    cfg.seed = options->seed;
    cfg.optimizer = static_cast<OptimizerMode>(options->optimizer);
    cfg.validate();

    const SplitAssignment parts = split(table->rows.size(), cfg.seed);
    const NormalizationSpec norm = NormalizationSpec::fit(table->rows, parts.train);
    const EncodedSet train_set = EncodedSet::encode(table->rows, parts.train, norm);
    const EncodedSet val_set = EncodedSet::encode(table->rows, parts.validation, norm);

    EpochCallback cb;
    if (on_epoch) {
      cb = [on_epoch, user](const EpochRecord& r) {
        const sensoropt_epoch e{static_cast<uint32_t>(r.epoch), r.train_mse, r.val_mse, r.learning_rate};
        on_epoch(&e, user);
      };
    }
    TrainResult result =
        train(config, NetworkParameters::initialize(config, cfg.seed), train_set, val_set, cfg, cb);
    if (model) *model = new sensoropt_model{Model{config, std::move(result.params), norm}};
    if (history) *history = new sensoropt_history{std::move(result.history)};
  });
}

size_t sensoropt_history_length(const sensoropt_history* history) {
  return history ? history->history.epochs.size() : 0;
}

sensoropt_status sensoropt_history_get(const sensoropt_history* history, size_t index, sensoropt_epoch* out) {
  return guarded([&] {
    require(history, "history is null");
    require(out, "out is null");
    if (index >= history->history.epochs.size()) fail(ErrorKind::Domain, "epoch index out of range");
    const EpochRecord& r = history->history.epochs[index];
    *out = {static_cast<uint32_t>(r.epoch), r.train_mse, r.val_mse, r.learning_rate};
  });
}

sensoropt_status sensoropt_history_write_csv(const sensoropt_history* history, const char* path) {
  return guarded([&] {
    require(history, "history is null");
    require(path, "path is null");
    history->history.write_csv(path);
  });
}

void sensoropt_history_free(sensoropt_history* history) { delete history; }

sensoropt_status sensoropt_model_load(const char* path, sensoropt_model** out) {
  return guarded([&] {
    require(path, "path is null");
    require(out, "out is null");
    Model m = load_model(path);
    try {
      m.config.validate_surrogate();
    } catch (const Error& e) {
      fail(ErrorKind::Load, std::string("not a sensor surrogate: ") + e.what());
    }
    *out = new sensoropt_model{std::move(m)};
  });
}

sensoropt_status sensoropt_model_save(const sensoropt_model* model, const char* path) {
  return guarded([&] {
    require(model, "model is null");
    require(path, "path is null");
    save_model(model->model, path);
  });
}

sensoropt_status sensoropt_model_predict_normalized(const sensoropt_model* model, const double* inputs, size_t n,
                                                    double* outputs) {
  return guarded([&] {
    require(model, "model is null");
    if (n == 0) return;
    require(inputs, "inputs is null");
    require(outputs, "outputs is null");
    const Model& m = model->model;
    constexpr std::size_t kChunk = 256;
    BatchEngine engine(m.config, std::min(kChunk, n));
    for (std::size_t start = 0; start < n; start += engine.max_batch()) {
      const std::size_t b = std::min(engine.max_batch(), n - start);
      const std::span<const double> in(inputs + start * kNetworkInputs, b * kNetworkInputs);
      for (double x : in)
        if (!std::isfinite(x)) fail(ErrorKind::Domain, "non-finite network input");
      engine.forward(m.params, in, b);
      engine.outputs(std::span<double>(outputs + start * kNetworkOutputs, b * kNetworkOutputs));
    }
  });
}

sensoropt_status sensoropt_model_predict(const sensoropt_model* model, const sensoropt_settings* settings,
                                         int32_t input5, int32_t category, double* signal, double* snr,
                                         double* output3) {
  return guarded([&] {
    require(model, "model is null");
    require(settings, "settings is null");
    const Model& m = model->model;
    const auto in = encode_inputs(to_settings(*settings), input5, category, m.norm);
    const ForwardTrace trace = forward(m.params, m.config, in);
    const auto o = decode_outputs(std::span<const double, kNetworkOutputs>(trace.output().data(), kNetworkOutputs), m.norm);
    if (signal) *signal = o.signal;
    if (snr) *snr = o.snr;
    if (output3) *output3 = o.output3;
  });
}

sensoropt_status sensoropt_model_write_curve_csv(const sensoropt_model* model, const sensoropt_settings* settings,
                                                 const char* path) {
  return guarded([&] {
    require(model, "model is null");
    require(settings, "settings is null");
    require(path, "path is null");
    CurvePredictor predictor(model->model);
    write_curve_csv(predictor.predict(to_settings(*settings)), path);
  });
}

void sensoropt_model_free(sensoropt_model* model) { delete model; }

sensoropt_status sensoropt_evaluate(const sensoropt_model* model, const sensoropt_table* table, uint64_t split_seed,
                                    sensoropt_partition partition, const char* pairs_directory,
                                    const char* pairs_prefix, sensoropt_metrics* out) {
  return guarded([&] {
    require(model, "model is null");
    require(table, "table is null");
    require(out, "out is null");
    std::vector<std::size_t> rows;
    switch (partition) {
      case SENSOROPT_PARTITION_TRAIN:
      case SENSOROPT_PARTITION_VALIDATION:
      case SENSOROPT_PARTITION_TEST:
        rows = split(table->rows.size(), split_seed).rows(static_cast<Partition>(partition));
        break;
      case SENSOROPT_PARTITION_ALL:
        rows.resize(table->rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        break;
      default: throw InvalidArgument("unknown partition");
    }
    const EvaluationReport rep = evaluate(model->model, table->rows, rows);
    out->rows = rep.rows;
    for (std::size_t j = 0; j < kNetworkOutputs; ++j) {
      out->mse[j] = rep.outputs[j].mse;
      out->r2_defined[j] = rep.outputs[j].r2.has_value() ? 1 : 0;
      out->r2[j] = rep.outputs[j].r2.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    if (pairs_directory) rep.write_pairs(pairs_directory, pairs_prefix ? pairs_prefix : "");
  });
}

void sensoropt_interpolation_init(sensoropt_interpolation* spec) {
  if (spec == nullptr) return;
  const auto lo = table1_minimums();
  const auto hi = table1_maximums();
  const double steps[kSettingCount] = {11.5, 4, 12.5, 100, 100};
  for (std::size_t i = 0; i < kSettingCount; ++i) {
    spec->min[i] = lo[i];
    spec->max[i] = hi[i];
    spec->step[i] = steps[i];
  }
  spec->row_budget = InterpolationSpec::kDefaultRowBudget;
}

sensoropt_status sensoropt_interpolation_count(const sensoropt_interpolation* spec, uint64_t* out) {
  return guarded([&] {
    require(spec, "spec is null");
    require(out, "out is null");
    *out = to_interpolation(*spec).combination_count();
  });
}

sensoropt_status sensoropt_sweep_run(const sensoropt_model* model, const sensoropt_interpolation* spec,
                                     uint32_t threads, sensoropt_progress_callback progress, void* user,
                                     sensoropt_sweep** out) {
  return guarded([&] {
    require(model, "model is null");
    require(spec, "spec is null");
    require(out, "out is null");
    const InterpolatedGrid grid(to_interpolation(*spec));
    SweepProgress cb;
    if (progress) cb = [progress, user](std::uint64_t done, std::uint64_t total) { progress(done, total, user); };
    *out = new sensoropt_sweep{sweep(model->model, grid, threads, cb)};
  });
}

size_t sensoropt_sweep_candidate_count(const sensoropt_sweep* s) { return s ? s->result.candidates.size() : 0; }

sensoropt_status sensoropt_sweep_get_candidate(const sensoropt_sweep* s, size_t index, sensoropt_candidate* out) {
  return guarded([&] {
    require(s, "sweep is null");
    require(out, "out is null");
    if (index >= s->result.candidates.size()) fail(ErrorKind::Domain, "candidate index out of range");
    *out = to_candidate(s->result.candidates[index]);
  });
}

sensoropt_status sensoropt_sweep_select(const sensoropt_sweep* s, uint32_t subset, sensoropt_selection* out) {
  return guarded([&] {
    require(s, "sweep is null");
    require(out, "out is null");
    if (subset == 0 || (subset & ~SENSOROPT_CRITERIA_ALL) != 0) throw InvalidArgument("bad criteria subset");
    const auto sel = select(s->result.candidates, CriteriaSubset{static_cast<std::uint8_t>(subset)});
    if (!sel) throw NotFound("no candidate is ranked on every criterion of the subset");
    out->index = sel->index;
    out->candidate = to_candidate(s->result.candidates[sel->index]);
    out->depth = sel->depth;
    out->subset = subset;
  });
}

sensoropt_status sensoropt_sweep_write_report(const sensoropt_sweep* s, const char* path) {
  return guarded([&] {
    require(s, "sweep is null");
    require(path, "path is null");
    const std::pair<std::string, std::optional<SelectionResult>> selections[] = {
        {"full", select(s->result.candidates, CriteriaSubset::all())},
        {"no_c4", select(s->result.candidates, CriteriaSubset::without_output3())},
    };
    write_sweep_report(s->result, selections, path);
  });
}

void sensoropt_sweep_free(sensoropt_sweep* s) { delete s; }

}  // extern "C"
