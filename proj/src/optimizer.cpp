#include "sensoropt/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include "sensoropt/errors.hpp"

namespace sensoropt {

namespace {

constexpr const char* kSettingNames[kSettingCount] = {"input1", "input2", "input3", "input4", "input6"};
constexpr std::uint64_t kSweepChunk = 64;

}  // namespace

std::uint64_t count_experiments(std::uint64_t resolution, std::uint64_t n_inputs) {
  if (resolution < 1 || n_inputs < 1) fail(ErrorKind::Domain, "resolution and input count must be >= 1");
  std::uint64_t n = 1;
  for (std::uint64_t i = 0; i < n_inputs; ++i) {
    if (n > std::numeric_limits<std::uint64_t>::max() / resolution)
      fail(ErrorKind::Overflow, std::to_string(resolution) + "^" + std::to_string(n_inputs) + " overflows 64 bits");
    n *= resolution;
  }
  return n;
}

AxisSpec AxisSpec::arithmetic(double min, double max, double step) {
  if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step))
    fail(ErrorKind::Config, "axis bounds must be finite");
  if (!(step > 0)) fail(ErrorKind::Config, "axis step must be > 0");
  if (max < min) fail(ErrorKind::Config, "axis max must be >= min");
  const double span = (max - min) / step;
  const auto count = static_cast<std::uint64_t>(std::floor(span * (1 + 1e-9) + 1e-9)) + 1;
  if (count > 100'000'000) fail(ErrorKind::Config, "axis has too many values");
  AxisSpec a;
  a.values.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) a.values.push_back(std::min(max, min + static_cast<double>(i) * step));
  return a;
}

InterpolationSpec InterpolationSpec::defaults() {
  const auto lo = table1_minimums();
  const auto hi = table1_maximums();
  const std::array<double, kSettingCount> steps{11.5, 4, 12.5, 100, 100};
  InterpolationSpec s;
  for (std::size_t i = 0; i < kSettingCount; ++i) s.axes[i] = AxisSpec::arithmetic(lo[i], hi[i], steps[i]);
  return s;
}

InterpolationSpec InterpolationSpec::from_grid(const GridSpec& grid) {
  grid.validate();
  InterpolationSpec s;
  for (std::size_t i = 0; i < kSettingCount; ++i) s.axes[i].values = grid.values[i];
  return s;
}

std::uint64_t InterpolationSpec::combination_count() const {
  std::uint64_t n = 1;
  for (const auto& a : axes) {
    if (a.values.empty()) return 0;
    if (n > std::numeric_limits<std::uint64_t>::max() / a.values.size())
      fail(ErrorKind::Overflow, "interpolated combination count overflows");
    n *= a.values.size();
  }
  return n;
}

std::uint64_t InterpolationSpec::row_count() const {
  const std::uint64_t n = combination_count();
  if (n > std::numeric_limits<std::uint64_t>::max() / kRowsPerCombination)
    fail(ErrorKind::Overflow, "interpolated row count overflows");
  return n * kRowsPerCombination;
}

void InterpolationSpec::validate() const {
  const auto lo = table1_minimums();
  const auto hi = table1_maximums();
  for (std::size_t i = 0; i < kSettingCount; ++i) {
    const auto& v = axes[i].values;
    const std::string name = kSettingNames[i];
    if (v.empty()) fail(ErrorKind::Config, name + ": axis has no values");
    if (!std::is_sorted(v.begin(), v.end())) fail(ErrorKind::Config, name + ": axis values must be nondecreasing");
    if (v.front() < lo[i] || v.back() > hi[i])
      fail(ErrorKind::Config, name + ": axis leaves the setting range [" + std::to_string(lo[i]) + ", " +
                                  std::to_string(hi[i]) + "]");
  }
  if (row_count() > row_budget)
    fail(ErrorKind::Config, "sweep of " + std::to_string(row_count()) + " rows exceeds the budget of " +
                                std::to_string(row_budget) + " rows");
}

InterpolatedGrid::InterpolatedGrid(InterpolationSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  size_ = spec_.combination_count();
}

Settings InterpolatedGrid::at(std::uint64_t index) const {
  if (index >= size_) fail(ErrorKind::Domain, "grid index out of range");
  std::array<double, kSettingCount> v{};
  for (std::size_t i = kSettingCount; i-- > 0;) {
    const auto& axis = spec_.axes[i].values;
    v[i] = axis[index % axis.size()];
    index /= axis.size();
  }
  return Settings::from_values(v);
}

CurvePredictor::CurvePredictor(const Model& model)
    : model_(&model),
      engine_(model.config, kRowsPerCombination),
      inputs_(kRowsPerCombination * kNetworkInputs),
      outputs_(kRowsPerCombination * kNetworkOutputs) {
  model.config.validate_surrogate();
}

Curve CurvePredictor::predict(const Settings& settings) {
  std::size_t row = 0;
  for (int input5 = kInput5Min; input5 <= kInput5Max; ++input5) {
    for (int cat = 0; cat < static_cast<int>(kCategories); ++cat, ++row) {
      const auto in = encode_inputs(settings, input5, cat, model_->norm);
      std::copy(in.begin(), in.end(), inputs_.begin() + static_cast<std::ptrdiff_t>(row * kNetworkInputs));
    }
  }
  engine_.forward(model_->params, inputs_, kRowsPerCombination);
  engine_.outputs(outputs_);
  std::vector<CurvePoint> points(kRowsPerCombination);
  for (std::size_t i = 0; i < kRowsPerCombination; ++i) {
    const auto o = decode_outputs(
        std::span<const double, kNetworkOutputs>(outputs_.data() + i * kNetworkOutputs, kNetworkOutputs), model_->norm);
    points[i] = {o.signal, o.snr, o.output3};
  }
  return Curve::assemble(settings, std::move(points));
}

std::vector<Curve> predict_curves(const Model& model, std::span<const Settings> grid) {
  CurvePredictor predictor(model);
  std::vector<Curve> out;
  out.reserve(grid.size());
  for (const auto& s : grid) out.push_back(predictor.predict(s));
  return out;
}

namespace {

bool criteria_less(const CriteriaValues& a, const CriteriaValues& b) {
  const auto key = [](const CriteriaValues& c) {
    return std::make_tuple(c.ideal_mae, c.prominence.has_value(), c.prominence.value_or(0.0), c.line_mae,
                           c.output3_mean);
  };
  return key(a) < key(b);
}

}  // namespace

std::vector<CandidateScore> rank_candidates(std::span<const Candidate> candidates, CriteriaSubset subset) {
  std::vector<CandidateScore> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates)
    out.push_back({c.settings, c.criteria, {kNotRanked, kNotRanked, kNotRanked, kNotRanked}});
  std::sort(out.begin(), out.end(), [](const CandidateScore& a, const CandidateScore& b) {
    if (a.settings != b.settings) return a.settings < b.settings;
    return criteria_less(a.criteria, b.criteria);
  });

  std::vector<std::pair<double, std::size_t>> column;
  column.reserve(out.size());
  for (std::size_t k = 0; k < kCriteriaCount; ++k) {
    if (!subset.contains(k)) continue;
    column.clear();
    for (std::size_t i = 0; i < out.size(); ++i)
      if (const auto v = out[i].criteria.get(k)) column.emplace_back(*v, i);
    std::sort(column.begin(), column.end());
    int rank = -1;
    for (std::size_t i = 0; i < column.size(); ++i) {
      if (i == 0 || column[i].first != column[i - 1].first) ++rank;
      out[column[i].second].ranks[k] = rank;
    }
  }
  return out;
}

std::optional<SelectionResult> select(std::span<const CandidateScore> ranked, CriteriaSubset subset) {
  if (subset.empty()) fail(ErrorKind::Config, "criteria subset is empty");
  std::optional<std::size_t> best;
  std::size_t best_depth = 0;
  long long best_sum = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    std::size_t depth = 0;
    long long sum = 0;
    bool eligible = true;
    for (std::size_t k = 0; k < kCriteriaCount; ++k) {
      if (!subset.contains(k)) continue;
      const int r = ranked[i].ranks[k];
      if (r < 0) {
        eligible = false;
        break;
      }
      depth = std::max(depth, static_cast<std::size_t>(r) + 1);
      sum += r;
    }
    if (!eligible) continue;
    const bool better = !best || depth < best_depth || (depth == best_depth && sum < best_sum) ||
                        (depth == best_depth && sum == best_sum && ranked[i].settings < ranked[*best].settings);
    if (better) {
      best = i;
      best_depth = depth;
      best_sum = sum;
    }
  }
  if (!best) return std::nullopt;
  return SelectionResult{*best, ranked[*best].settings, ranked[*best].criteria, best_depth, subset};
}

SweepResult sweep(const Model& model, const InterpolatedGrid& grid, unsigned threads, const SweepProgress& progress) {
  model.config.validate_surrogate();
  const std::uint64_t total = grid.size();
  std::vector<Candidate> scored(total);
  const std::uint64_t chunks = (total + kSweepChunk - 1) / kSweepChunk;
  const unsigned workers = static_cast<unsigned>(std::clamp<std::uint64_t>(threads == 0 ? 1 : threads, 1, std::max<std::uint64_t>(chunks, 1)));

  std::atomic<std::uint64_t> next{0};
  std::atomic<std::uint64_t> done{0};
  std::mutex progress_mutex;
  std::mutex error_mutex;
  std::exception_ptr error;

  auto work = [&] {
    try {
      CurvePredictor predictor(model);
      while (true) {
        const std::uint64_t chunk = next.fetch_add(1);
        if (chunk >= chunks) break;
        {
          std::lock_guard lock(error_mutex);
          if (error) break;
        }
        const std::uint64_t begin = chunk * kSweepChunk;
        const std::uint64_t end = std::min(total, begin + kSweepChunk);
        for (std::uint64_t i = begin; i < end; ++i) {
          const Settings s = grid.at(i);
          scored[i] = {s, criteria(predictor.predict(s))};
        }
        const std::uint64_t finished = done.fetch_add(end - begin) + (end - begin);
        if (progress) {
          std::lock_guard lock(progress_mutex);
          progress(finished, total);
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  SweepResult result;
  result.candidates = rank_candidates(scored, CriteriaSubset::all());
  return result;
}

void write_sweep_report(const SweepResult& result,
                        std::span<const std::pair<std::string, std::optional<SelectionResult>>> selections,
                        const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  std::fprintf(f, "input1,input2,input3,input4,input6,c1,c2,c3,c4,rank1,rank2,rank3,rank4");
  for (const auto& [name, _] : selections) std::fprintf(f, ",selected_%s", name.c_str());
  std::fprintf(f, "\n");
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const auto& c = result.candidates[i];
    const auto& v = c.criteria;
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,", c.settings.input1, c.settings.input2, c.settings.input3,
                 c.settings.input4, c.settings.input6, v.ideal_mae);
    if (v.prominence)
      std::fprintf(f, "%.17g,", *v.prominence);
    else
      std::fprintf(f, "nan,");
    std::fprintf(f, "%.17g,%.17g,%d,%d,%d,%d", v.line_mae, v.output3_mean, c.ranks[0], c.ranks[1], c.ranks[2],
                 c.ranks[3]);
    for (const auto& [_, sel] : selections) std::fprintf(f, ",%d", sel && sel->index == i ? 1 : 0);
    std::fprintf(f, "\n");
  }
  const bool ok = std::ferror(f) == 0;
  if (std::fclose(f) != 0 || !ok) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace sensoropt
