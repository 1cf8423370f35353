// sensoropt command-line driver. Talks to the library only through the C API.

#include <sensoropt/sensoropt.h>

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Carries a library status up to main() so it can pick the exit code.
struct Failure : std::runtime_error {
  Failure(sensoropt_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  sensoropt_status status;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(sensoropt_status s, const std::string& context) {
  if (s != SENSOROPT_OK)
    throw Failure(s, context + ": " + sensoropt_status_string(s) + ": " + sensoropt_last_error());
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Oracle = Handle<sensoropt_oracle, sensoropt_oracle_free>;
using TableHandle = Handle<sensoropt_table, sensoropt_table_free>;
using ModelHandle = Handle<sensoropt_model, sensoropt_model_free>;
using HistoryHandle = Handle<sensoropt_history, sensoropt_history_free>;
using SweepHandle = Handle<sensoropt_sweep, sensoropt_sweep_free>;

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Failure(SENSOROPT_ERR_IO, "cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    char hex[3];
    std::snprintf(hex, sizeof hex, "%02x", md[i]);
    os << hex;
  }
  return os.str();
}

// Resolved run configuration. Precedence: command-line flag, then --config
// file, then built-in default.
struct RunConfig {
  std::string subcommand;
  fs::path out = "reports";
  fs::path data;
  fs::path model;
  fs::path oracle;
  uint64_t seed = 42;
  double scale = 1.0;
  double noise_db = 0.0;
  uint32_t threads = 1;
  bool quiet = false;
  sensoropt_train_options train{};
  sensoropt_interpolation interpolation{};
  std::vector<int> criteria;  // extra custom selection, 1-based criterion ids

  ordered_json to_json() const {
    ordered_json j;
    j["subcommand"] = subcommand;
    j["out"] = out.string();
    j["data"] = data.string();
    j["model"] = model.string();
    j["oracle"] = oracle.string();
    j["seed"] = seed;
    j["scale"] = scale;
    j["noise_db"] = noise_db;
    j["threads"] = threads;
    ordered_json t;
    t["epochs"] = train.epochs;
    t["batch_size"] = train.batch_size;
    t["learning_rate"] = train.learning_rate;
    t["patience"] = train.patience;
    t["reduction_factor"] = train.reduction_factor;
    t["optimizer"] = train.optimizer == SENSOROPT_OPTIMIZER_SGD ? "sgd" : "adam";
    t["hidden"] = std::vector<uint32_t>(train.hidden, train.hidden + train.hidden_count);
    t["leaky_slope"] = train.leaky_slope;
    t["leaky_output"] = train.leaky_output != 0;
    j["train"] = t;
    ordered_json in;
    in["min"] = std::vector<double>(interpolation.min, interpolation.min + 5);
    in["max"] = std::vector<double>(interpolation.max, interpolation.max + 5);
    in["step"] = std::vector<double>(interpolation.step, interpolation.step + 5);
    in["row_budget"] = interpolation.row_budget;
    j["interpolation"] = in;
    j["criteria"] = criteria;
    return j;
  }
};

void apply_config_file(RunConfig& rc, const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    is >> j;
    if (j.contains("out")) rc.out = j["out"].get<std::string>();
    if (j.contains("data")) rc.data = j["data"].get<std::string>();
    if (j.contains("model")) rc.model = j["model"].get<std::string>();
    if (j.contains("oracle")) rc.oracle = j["oracle"].get<std::string>();
    if (j.contains("seed")) rc.seed = j["seed"].get<uint64_t>();
    if (j.contains("scale")) rc.scale = j["scale"].get<double>();
    if (j.contains("noise_db")) rc.noise_db = j["noise_db"].get<double>();
    if (j.contains("threads")) rc.threads = j["threads"].get<uint32_t>();
    if (j.contains("criteria")) rc.criteria = j["criteria"].get<std::vector<int>>();
    if (j.contains("train")) {
      const auto& t = j["train"];
      if (t.contains("epochs")) rc.train.epochs = t["epochs"].get<uint32_t>();
      if (t.contains("batch_size")) rc.train.batch_size = t["batch_size"].get<uint32_t>();
      if (t.contains("learning_rate")) rc.train.learning_rate = t["learning_rate"].get<double>();
      if (t.contains("patience")) rc.train.patience = t["patience"].get<uint32_t>();
      if (t.contains("reduction_factor")) rc.train.reduction_factor = t["reduction_factor"].get<double>();
      if (t.contains("optimizer")) {
        const auto name = t["optimizer"].get<std::string>();
        if (name == "sgd")
          rc.train.optimizer = SENSOROPT_OPTIMIZER_SGD;
        else if (name == "adam")
          rc.train.optimizer = SENSOROPT_OPTIMIZER_ADAM;
        else
          throw UsageError("train.optimizer must be 'sgd' or 'adam'");
      }
      if (t.contains("hidden")) {
        const auto hidden = t["hidden"].get<std::vector<uint32_t>>();
        if (hidden.size() > SENSOROPT_MAX_HIDDEN_LAYERS) throw UsageError("too many hidden layers");
        rc.train.hidden_count = static_cast<uint32_t>(hidden.size());
        std::copy(hidden.begin(), hidden.end(), rc.train.hidden);
      }
      if (t.contains("leaky_slope")) rc.train.leaky_slope = t["leaky_slope"].get<double>();
      if (t.contains("leaky_output")) rc.train.leaky_output = t["leaky_output"].get<bool>() ? 1 : 0;
    }
    if (j.contains("interpolation")) {
      const auto& in = j["interpolation"];
      auto read5 = [&](const char* key, double* dst) {
        if (!in.contains(key)) return;
        const auto v = in[key].get<std::vector<double>>();
        if (v.size() != 5) throw UsageError(std::string("interpolation.") + key + " needs 5 values");
        std::copy(v.begin(), v.end(), dst);
      };
      read5("min", rc.interpolation.min);
      read5("max", rc.interpolation.max);
      read5("step", rc.interpolation.step);
      if (in.contains("row_budget")) rc.interpolation.row_budget = in["row_budget"].get<uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

void write_manifest(const RunConfig& rc, const std::vector<fs::path>& inputs) {
  ordered_json m;
  m["tool"] = "sensoropt";
  m["version"] = sensoropt_version();
  m["config"] = rc.to_json();
  ordered_json digests = ordered_json::object();
  for (const auto& p : inputs) digests[p.string()] = sha256_file(p);
  m["inputs"] = digests;
  const fs::path path = rc.out / ("manifest_" + rc.subcommand + ".json");
  std::ofstream os(path);
  if (!os) throw Failure(SENSOROPT_ERR_IO, "cannot write " + path.string());
  os << m.dump(2) << '\n';
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure(SENSOROPT_ERR_IO, "cannot create " + dir.string() + ": " + ec.message());
}

fs::path default_under(const fs::path& given, const fs::path& out, const char* name) {
  return given.empty() ? out / name : given;
}

void load_oracle(const RunConfig& rc, Oracle& oracle) {
  if (rc.oracle.empty()) {
    check(sensoropt_oracle_create(rc.seed, rc.noise_db, oracle.out()), "oracle");
  } else {
    check(sensoropt_oracle_load(rc.oracle.c_str(), oracle.out()), "oracle " + rc.oracle.string());
  }
}

int run_generate(RunConfig& rc) {
  ensure_out_dir(rc.out);
  Oracle oracle;
  load_oracle(rc, oracle);
  check(sensoropt_oracle_set_seed(oracle.get(), rc.seed), "oracle");
  check(sensoropt_oracle_set_noise(oracle.get(), rc.noise_db), "oracle");
  TableHandle table;
  check(sensoropt_table_generate(oracle.get(), rc.scale, table.out()), "generate");
  const fs::path data = rc.out / "dataset.csv";
  const fs::path oracle_path = rc.out / "oracle.json";
  check(sensoropt_table_write_csv(table.get(), data.c_str()), "write " + data.string());
  check(sensoropt_oracle_save(oracle.get(), oracle_path.c_str()), "write " + oracle_path.string());
  std::vector<fs::path> inputs;
  if (!rc.oracle.empty()) inputs.push_back(rc.oracle);
  rc.data = data;
  write_manifest(rc, inputs);
  std::cout << "wrote " << sensoropt_table_row_count(table.get()) << " rows to " << data.string() << "\n";
  return kExitOk;
}

void print_epoch(const sensoropt_epoch* e, void* user) {
  if (*static_cast<bool*>(user)) return;
  std::fprintf(stderr, "epoch %3u  train_mse %.4e  val_mse %.4e  lr %.3e\n", e->epoch, e->train_mse, e->val_mse,
               e->learning_rate);
}

int run_train(RunConfig& rc) {
  ensure_out_dir(rc.out);
  rc.data = default_under(rc.data, rc.out, "dataset.csv");
  TableHandle table;
  check(sensoropt_table_read_csv(rc.data.c_str(), table.out()), "read " + rc.data.string());
  rc.train.seed = rc.seed;
  ModelHandle model;
  HistoryHandle history;
  check(sensoropt_train(table.get(), &rc.train, print_epoch, &rc.quiet, model.out(), history.out()), "train");
  const fs::path model_path = rc.out / "model.bin";
  const fs::path history_path = rc.out / "history.csv";
  check(sensoropt_model_save(model.get(), model_path.c_str()), "write " + model_path.string());
  check(sensoropt_history_write_csv(history.get(), history_path.c_str()), "write " + history_path.string());
  write_manifest(rc, {rc.data});
  sensoropt_epoch last{};
  check(sensoropt_history_get(history.get(), sensoropt_history_length(history.get()) - 1, &last), "history");
  std::printf("final train_mse %.6e  val_mse %.6e  (%u epochs)\n", last.train_mse, last.val_mse, last.epoch);
  return kExitOk;
}

ordered_json metrics_json(const sensoropt_metrics& m) {
  static const char* names[3] = {"signal", "snr", "output3"};
  ordered_json j;
  j["rows"] = m.rows;
  for (int k = 0; k < 3; ++k) {
    ordered_json o;
    o["mse"] = m.mse[k];
    if (m.r2_defined[k])
      o["r2"] = m.r2[k];
    else
      o["r2"] = "undefined (zero-variance actuals)";
    j[names[k]] = o;
  }
  return j;
}

int run_evaluate(RunConfig& rc) {
  ensure_out_dir(rc.out);
  rc.data = default_under(rc.data, rc.out, "dataset.csv");
  rc.model = default_under(rc.model, rc.out, "model.bin");
  TableHandle table;
  check(sensoropt_table_read_csv(rc.data.c_str(), table.out()), "read " + rc.data.string());
  ModelHandle model;
  check(sensoropt_model_load(rc.model.c_str(), model.out()), "load " + rc.model.string());

  sensoropt_metrics test{};
  sensoropt_metrics validation{};
  sensoropt_metrics train{};
  const std::string out_dir = rc.out.string();
  check(sensoropt_evaluate(model.get(), table.get(), rc.seed, SENSOROPT_PARTITION_TEST, out_dir.c_str(),
                           "pred_vs_actual_", &test),
        "evaluate test");
  check(sensoropt_evaluate(model.get(), table.get(), rc.seed, SENSOROPT_PARTITION_VALIDATION, nullptr, nullptr,
                           &validation),
        "evaluate validation");
  check(sensoropt_evaluate(model.get(), table.get(), rc.seed, SENSOROPT_PARTITION_TRAIN, nullptr, nullptr, &train),
        "evaluate train");

  ordered_json report;
  report["split_seed"] = rc.seed;
  report["test"] = metrics_json(test);
  report["validation"] = metrics_json(validation);
  report["train"] = metrics_json(train);
  const fs::path path = rc.out / "metrics.json";
  std::ofstream os(path);
  if (!os) throw Failure(SENSOROPT_ERR_IO, "cannot write " + path.string());
  os << report.dump(2) << '\n';
  write_manifest(rc, {rc.data, rc.model});

  static const char* names[3] = {"signal", "snr", "output3"};
  for (int k = 0; k < 3; ++k) {
    std::printf("test %-8s mse %.4e  r2 ", names[k], test.mse[k]);
    if (test.r2_defined[k])
      std::printf("%.6f\n", test.r2[k]);
    else
      std::printf("undefined\n");
  }
  return kExitOk;
}

struct CurveRow {
  double signal, snr, ideal, line;
};

std::vector<CurveRow> read_curve_csv(const fs::path& path) {
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  std::vector<CurveRow> rows;
  while (std::getline(is, line)) {
    CurveRow r{};
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r.signal, &r.snr, &r.ideal, &r.line) == 4) rows.push_back(r);
  }
  return rows;
}

// Minimal static plot: log10(signal) on x, SNR on y, one polyline per series.
void write_curve_svg(const fs::path& csv, const fs::path& svg, const std::string& title) {
  const auto rows = read_curve_csv(csv);
  if (rows.empty()) return;
  constexpr double W = 640, H = 400, M = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& r : rows) {
    const double x = std::log10(r.signal);
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    for (double y : {r.snr, r.ideal, r.line}) {
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto px = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto py = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };
  std::ofstream os(svg);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << M << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" << title << "</text>\n";
  os << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(std::ceil(x0)); d <= static_cast<int>(std::floor(x1)); ++d) {
    os << "<text x=\"" << px(d) << "\" y=\"" << H - M + 16 << "\" font-size=\"11\" text-anchor=\"middle\">1e" << d
       << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" font-size=\"12\" text-anchor=\"middle\">Signal [AU]</text>\n";
  os << "<text x=\"12\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 " << H / 2
     << ")\" text-anchor=\"middle\">SNR [dB]</text>\n";
  const struct {
    double CurveRow::*field;
    const char* color;
  } series[] = {{&CurveRow::snr, "blue"}, {&CurveRow::ideal, "green"}, {&CurveRow::line, "orange"}};
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : rows) os << px(std::log10(r.signal)) << ',' << py(r.*s.field) << ' ';
    os << "\"/>\n";
  }
  os << "</svg>\n";
}

ordered_json candidate_json(const sensoropt_candidate& c) {
  ordered_json j;
  j["input1"] = c.settings.input1;
  j["input2"] = c.settings.input2;
  j["input3"] = c.settings.input3;
  j["input4"] = c.settings.input4;
  j["input6"] = c.settings.input6;
  j["c1_ideal_mae_db"] = c.criteria[0];
  if (c.prominence_defined)
    j["c2_prominence_db"] = c.criteria[1];
  else
    j["c2_prominence_db"] = nullptr;
  j["c3_line_mae_db"] = c.criteria[2];
  j["c4_output3"] = c.criteria[3];
  j["ranks"] = std::vector<int32_t>(c.ranks, c.ranks + 4);
  return j;
}

void progress_bar(uint64_t done, uint64_t total, void* user) {
  if (*static_cast<bool*>(user)) return;
  if (done == total || done % 4096 < 64) std::fprintf(stderr, "\rsweep %llu / %llu", static_cast<unsigned long long>(done), static_cast<unsigned long long>(total));
  if (done == total) std::fprintf(stderr, "\n");
}

int run_optimize(RunConfig& rc) {
  ensure_out_dir(rc.out);
  rc.model = default_under(rc.model, rc.out, "model.bin");
  ModelHandle model;
  check(sensoropt_model_load(rc.model.c_str(), model.out()), "load " + rc.model.string());
  std::optional<Oracle> oracle;
  if (!rc.oracle.empty()) {
    oracle.emplace();
    check(sensoropt_oracle_load(rc.oracle.c_str(), oracle->out()), "oracle " + rc.oracle.string());
  }

  SweepHandle sweep;
  check(sensoropt_sweep_run(model.get(), &rc.interpolation, rc.threads, progress_bar, &rc.quiet, sweep.out()),
        "sweep");
  const size_t n = sensoropt_sweep_candidate_count(sweep.get());

  struct Named {
    const char* name;
    uint32_t subset;
  };
  std::vector<Named> runs = {{"full", SENSOROPT_CRITERIA_ALL},
                             {"no_c4", SENSOROPT_CRITERIA_ALL & ~SENSOROPT_CRITERION_OUTPUT3}};
  if (!rc.criteria.empty()) {
    uint32_t mask = 0;
    for (int c : rc.criteria) {
      if (c < 1 || c > 4) throw UsageError("criteria ids must be 1..4");
      mask |= 1u << (c - 1);
    }
    runs.push_back({"custom", mask});
  }

  std::vector<double> true_depths;
  if (oracle) {
    true_depths.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      sensoropt_candidate c{};
      check(sensoropt_sweep_get_candidate(sweep.get(), i, &c), "candidate");
      double d = 0;
      check(sensoropt_oracle_dip_depth(oracle->get(), &c.settings, &d), "oracle");
      true_depths.push_back(d);
    }
  }

  ordered_json summary;
  summary["candidates"] = n;
  ordered_json selections = ordered_json::array();
  for (const auto& run : runs) {
    sensoropt_selection sel{};
    const auto status = sensoropt_sweep_select(sweep.get(), run.subset, &sel);
    ordered_json j;
    j["name"] = run.name;
    std::vector<int> ids;
    for (int k = 0; k < 4; ++k)
      if (run.subset & (1u << k)) ids.push_back(k + 1);
    j["criteria"] = ids;
    if (status == SENSOROPT_ERR_NOT_FOUND) {
      j["selected"] = nullptr;
      selections.push_back(j);
      continue;
    }
    check(status, "select");
    j["depth_k"] = sel.depth;
    j["selected"] = candidate_json(sel.candidate);
    if (oracle) {
      const double depth = true_depths[sel.index];
      const auto below = std::count_if(true_depths.begin(), true_depths.end(), [&](double d) { return d < depth; });
      j["true_dip_depth_db"] = depth;
      j["true_dip_depth_percentile"] = static_cast<double>(below) / static_cast<double>(n);
    }
    const fs::path csv = rc.out / (std::string("curve_") + run.name + ".csv");
    check(sensoropt_model_write_curve_csv(model.get(), &sel.candidate.settings, csv.c_str()),
          "write " + csv.string());
    write_curve_svg(csv, rc.out / (std::string("curve_") + run.name + ".svg"),
                    std::string("Signal vs SNR, criteria set: ") + run.name);
    selections.push_back(j);
    std::printf("%-6s K=%zu  (%g, %g, %g, %g, %g)  c1 %.4f  c2 %s  c3 %.4f  c4 %.4f\n", run.name, sel.depth,
                sel.candidate.settings.input1, sel.candidate.settings.input2, sel.candidate.settings.input3,
                sel.candidate.settings.input4, sel.candidate.settings.input6, sel.candidate.criteria[0],
                sel.candidate.prominence_defined ? std::to_string(sel.candidate.criteria[1]).c_str() : "n/a",
                sel.candidate.criteria[2], sel.candidate.criteria[3]);
  }
  summary["selections"] = selections;

  const fs::path report = rc.out / "sweep_report.csv";
  check(sensoropt_sweep_write_report(sweep.get(), report.c_str()), "write " + report.string());
  const fs::path summary_path = rc.out / "selection_summary.json";
  std::ofstream os(summary_path);
  if (!os) throw Failure(SENSOROPT_ERR_IO, "cannot write " + summary_path.string());
  os << summary.dump(2) << '\n';

  std::vector<fs::path> inputs{rc.model};
  if (!rc.oracle.empty()) inputs.push_back(rc.oracle);
  write_manifest(rc, inputs);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  sensoropt_train_options_init(&rc.train);
  sensoropt_interpolation_init(&rc.interpolation);

  CLI::App app{"Neural surrogate training and settings optimization for a multivariate sensor"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sensoropt_version()));

  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<double> scale;
  std::optional<std::string> out;
  std::optional<std::string> data, model, oracle;
  std::optional<double> noise;
  std::optional<uint32_t> epochs, batch, threads;
  std::optional<double> lr;
  std::optional<std::string> optimizer;
  std::optional<std::vector<uint32_t>> hidden;
  std::optional<std::vector<int>> criteria;
  std::optional<uint64_t> row_budget;
  bool quiet = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "seed for the oracle, split, initialization and shuffling");
    sub->add_option("--out", out, "reports directory (all outputs go here)");
    sub->add_option("--scale", scale, "grid scale in [0, 1]; 1 = full 3125 combinations, 0.2 = 2 values per input")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_flag("--quiet", quiet, "suppress progress output");
  };

  auto* gen = app.add_subcommand("generate", "generate the synthetic dataset and oracle config");
  common(gen);
  gen->add_option("--oracle", oracle, "oracle coefficient file (JSON)");
  gen->add_option("--noise", noise, "Gaussian SNR noise in dB (default 0)");

  auto* tr = app.add_subcommand("train", "train the surrogate network");
  common(tr);
  tr->add_option("--data", data, "dataset CSV (default <out>/dataset.csv)");
  tr->add_option("--epochs", epochs, "epochs (default 100)");
  tr->add_option("--batch-size", batch, "batch size (default 20)");
  tr->add_option("--lr", lr, "initial learning rate (default 0.0005)");
  tr->add_option("--optimizer", optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
  tr->add_option("--hidden", hidden, "hidden layer widths (default 64,64,64)")->delimiter(',');

  auto* ev = app.add_subcommand("evaluate", "metrics and predicted-vs-actual exports on the test split");
  common(ev);
  ev->add_option("--data", data, "dataset CSV (default <out>/dataset.csv)");
  ev->add_option("--model", model, "model file (default <out>/model.bin)");

  auto* op = app.add_subcommand("optimize", "sweep interpolated settings and select the best combination");
  common(op);
  op->add_option("--model", model, "model file (default <out>/model.bin)");
  op->add_option("--oracle", oracle, "oracle file for a ground-truth cross-check of the selections");
  op->add_option("--threads", threads, "sweep worker threads (default 1)");
  op->add_option("--criteria", criteria, "extra selection over these criteria ids (1-4)")->delimiter(',');
  op->add_option("--row-budget", row_budget, "maximum interpolated rows (combinations x 200)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (auto* sub : {gen, tr, ev, op})
      if (sub->parsed()) rc.subcommand = sub->get_name();
    if (!config_path.empty()) apply_config_file(rc, config_path);
    if (seed) rc.seed = *seed;
    if (scale) rc.scale = *scale;
    if (out) rc.out = *out;
    if (data) rc.data = *data;
    if (model) rc.model = *model;
    if (oracle) rc.oracle = *oracle;
    if (noise) rc.noise_db = *noise;
    if (threads) rc.threads = *threads;
    if (epochs) rc.train.epochs = *epochs;
    if (batch) rc.train.batch_size = *batch;
    if (lr) rc.train.learning_rate = *lr;
    if (optimizer) rc.train.optimizer = *optimizer == "sgd" ? SENSOROPT_OPTIMIZER_SGD : SENSOROPT_OPTIMIZER_ADAM;
    if (hidden) {
      if (hidden->size() > SENSOROPT_MAX_HIDDEN_LAYERS) throw UsageError("too many hidden layers");
      rc.train.hidden_count = static_cast<uint32_t>(hidden->size());
      std::copy(hidden->begin(), hidden->end(), rc.train.hidden);
    }
    if (criteria) rc.criteria = *criteria;
    if (row_budget) rc.interpolation.row_budget = *row_budget;
    rc.quiet = quiet;

    if (gen->parsed()) return run_generate(rc);
    if (tr->parsed()) return run_train(rc);
    if (ev->parsed()) return run_evaluate(rc);
    if (op->parsed()) return run_optimize(rc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.status == SENSOROPT_ERR_CONFIG || e.status == SENSOROPT_ERR_INVALID_ARGUMENT ? kExitUsage
                                                                                          : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
