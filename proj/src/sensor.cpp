#include "sensoropt/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "sensoropt/errors.hpp"
#include "sensoropt/rng.hpp"

namespace sensoropt {

namespace {

constexpr std::array<std::array<double, 5>, kSettingCount> kTable1 = {{
    {418, 441, 464, 478, 510},
    {112, 120, 128, 136, 144},
    {400, 425, 450, 475, 500},
    {2850, 3050, 3250, 3450, 3650},
    {3200, 3400, 3600, 3600, 4000},
}};

constexpr const char* kSettingNames[kSettingCount] = {"input1", "input2", "input3", "input4", "input6"};

std::uint64_t bits_of(double x) {
  std::uint64_t b = 0;
  std::memcpy(&b, &x, sizeof b);
  return b;
}

// Standard normal draw that is a pure function of the sample coordinates.
double noise_draw(std::uint64_t seed, const Settings& s, int input5, int category) {
  std::uint64_t h = splitmix64(seed);
  for (double v : s.values()) h = splitmix64(h ^ bits_of(v));
  h = splitmix64(h ^ static_cast<std::uint64_t>(input5));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(category) << 32));
  const double u1 = 1.0 - unit_real(h);  // (0, 1]
  const double u2 = unit_real(splitmix64(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void check_sample(int input5, int category) {
  if (input5 < kInput5Min || input5 > kInput5Max)
    fail(ErrorKind::Domain, "input5 must be in [0, 49], got " + std::to_string(input5));
  if (category < 0 || category >= static_cast<int>(kCategories))
    fail(ErrorKind::Domain, "category must be in [0, 3], got " + std::to_string(category));
}

}  // namespace

GridSpec GridSpec::table1() {
  GridSpec spec;
  for (std::size_t i = 0; i < kSettingCount; ++i) spec.values[i].assign(kTable1[i].begin(), kTable1[i].end());
  return spec;
}

GridSpec GridSpec::scaled(double scale) {
  if (!(scale >= 0.0 && scale <= 1.0)) fail(ErrorKind::Config, "scale must be in [0, 1]");
  const std::size_t n = 1 + static_cast<std::size_t>(std::ceil(scale * 4.0 - 1e-12));
  GridSpec spec;
  for (std::size_t i = 0; i < kSettingCount; ++i) {
    if (n == 1) {
      spec.values[i] = {kTable1[i][0]};
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const auto idx = static_cast<std::size_t>(std::lround(static_cast<double>(k) * 4.0 / static_cast<double>(n - 1)));
      spec.values[i].push_back(kTable1[i][idx]);
    }
  }
  return spec;
}

void GridSpec::validate() const {
  for (std::size_t i = 0; i < kSettingCount; ++i) {
    const auto& v = values[i];
    if (v.empty()) fail(ErrorKind::Config, std::string(kSettingNames[i]) + ": no values");
    if (!std::is_sorted(v.begin(), v.end()))
      fail(ErrorKind::Config, std::string(kSettingNames[i]) + ": values must be nondecreasing");
    for (double x : v)
      if (!std::isfinite(x)) fail(ErrorKind::Config, std::string(kSettingNames[i]) + ": non-finite value");
  }
}

std::size_t GridSpec::combination_count() const {
  std::size_t n = 1;
  for (const auto& v : values) n *= v.size();
  return n;
}

std::vector<Settings> enumerate_grid(const GridSpec& spec) {
  spec.validate();
  std::vector<Settings> out;
  out.reserve(spec.combination_count());
  for (double a : spec.values[0])
    for (double b : spec.values[1])
      for (double c : spec.values[2])
        for (double d : spec.values[3])
          for (double e : spec.values[4]) out.push_back({a, b, c, d, e});
  return out;
}

std::array<double, kSettingCount> table1_minimums() {
  std::array<double, kSettingCount> out{};
  for (std::size_t i = 0; i < kSettingCount; ++i) out[i] = kTable1[i].front();
  return out;
}

std::array<double, kSettingCount> table1_maximums() {
  std::array<double, kSettingCount> out{};
  for (std::size_t i = 0; i < kSettingCount; ++i) out[i] = kTable1[i].back();
  return out;
}

std::array<double, kSettingCount> normalized_settings(const Settings& s) {
  const auto v = s.values();
  std::array<double, kSettingCount> u{};
  for (std::size_t i = 0; i < kSettingCount; ++i)
    u[i] = (v[i] - kTable1[i].front()) / (kTable1[i].back() - kTable1[i].front());
  return u;
}

void SensorGroundTruth::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0) || !std::isfinite(x)) fail(ErrorKind::Config, std::string(name) + " must be positive");
  };
  positive(gain_log10_per_step, "gain_log10_per_step");
  positive(dip_width_log10, "dip_width_log10");
  positive(output3_base, "output3_base");
  for (double g : category_gain) positive(g, "category_gain");
  if (!(noise_db >= 0)) fail(ErrorKind::Config, "noise_db must be >= 0");
  if (!(dip_depth_db >= 0)) fail(ErrorKind::Config, "dip_depth_db must be >= 0");
  if (std::abs(gain_span) >= 2.0) fail(ErrorKind::Config, "gain_span must be in (-2, 2)");
}

double dip_depth(const SensorGroundTruth& t, const Settings& s) {
  const auto u = normalized_settings(s);
  const double d3 = u[2] - t.depth_input3_optimum;
  const double d4 = u[3] - t.depth_input4_optimum;
  return t.dip_depth_db *
         (t.depth_floor + t.depth_input2 * u[1] + t.depth_input3_curvature * d3 * d3 +
          t.depth_input4_curvature * d4 * d4);
}

double dip_center_log10(const SensorGroundTruth& t, const Settings& s) {
  const auto u = normalized_settings(s);
  return t.dip_center_log10 + t.dip_center_span_log10 * (u[0] - 0.5);
}

double signal_log10(const SensorGroundTruth& t, const Settings& s, int input5, int category) {
  check_sample(input5, category);
  const auto u = normalized_settings(s);
  const auto c = static_cast<std::size_t>(category);
  const double offset = t.offset_log10 + t.offset_span_log10 * (u[4] - 0.5) + t.category_offset_log10[c];
  const double gain = t.gain_log10_per_step * t.category_gain[c] * (1.0 + t.gain_span * (u[0] - 0.5));
  return offset + gain * static_cast<double>(input5);
}

SensorOutputs simulate(const SensorGroundTruth& t, const Settings& s, int input5, int category) {
  const double log_signal = signal_log10(t, s, input5, category);
  const auto u = normalized_settings(s);

  SensorOutputs out;
  out.signal = std::pow(10.0, log_signal);
  const double x = (log_signal - dip_center_log10(t, s)) / t.dip_width_log10;
  out.snr = 5.0 * log_signal - dip_depth(t, s) * std::exp(-0.5 * x * x);
  if (t.noise_db > 0) out.snr += t.noise_db * noise_draw(t.seed, s, input5, category);
  out.output3 = t.output3_base + t.output3_input1_sq * u[0] * u[0] + t.output3_input6 * u[4] +
                t.output3_cross * u[0] * u[4] +
                t.output3_input5 * static_cast<double>(input5) / kInput5Max +
                t.output3_category * static_cast<double>(category) / (kCategories - 1);
  return out;
}

Table generate_dataset(const SensorGroundTruth& truth, const GridSpec& spec) {
  truth.validate();
  const auto combos = enumerate_grid(spec);
  Table table;
  table.reserve(combos.size() * kRowsPerCombination);
  for (const auto& s : combos) {
    for (int input5 = kInput5Min; input5 <= kInput5Max; ++input5) {
      for (int cat = 0; cat < static_cast<int>(kCategories); ++cat) {
        const auto o = simulate(truth, s, input5, cat);
        table.push_back({s.input1, s.input2, s.input3, s.input4, input5, s.input6, cat, o.signal, o.snr, o.output3});
      }
    }
  }
  return table;
}

// Config file: one flat JSON object, every field optional on load.
#define SENSOROPT_TRUTH_FIELDS(X)                                                             \
  X(noise_db) X(offset_log10) X(offset_span_log10) X(category_offset_log10)                   \
  X(gain_log10_per_step) X(gain_span) X(category_gain) X(dip_center_log10)                    \
  X(dip_center_span_log10) X(dip_width_log10) X(dip_depth_db) X(depth_floor) X(depth_input2)  \
  X(depth_input3_curvature) X(depth_input3_optimum) X(depth_input4_curvature)                 \
  X(depth_input4_optimum) X(output3_base) X(output3_input1_sq) X(output3_input6)              \
  X(output3_cross) X(output3_input5) X(output3_category)

void SensorGroundTruth::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
#define X(name) j[#name] = name;
  SENSOROPT_TRUTH_FIELDS(X)
#undef X
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

SensorGroundTruth SensorGroundTruth::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Config, path.string() + ": expected a JSON object");
  SensorGroundTruth t;
  try {
    if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
#define X(name) \
  if (j.contains(#name)) j.at(#name).get_to(t.name);
    SENSOROPT_TRUTH_FIELDS(X)
#undef X
    for (const auto& [key, _] : j.items()) {
      bool known = key == "seed";
#define X(name) known = known || key == #name;
      SENSOROPT_TRUTH_FIELDS(X)
#undef X
      if (!known) fail(ErrorKind::Config, path.string() + ": unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
  t.validate();
  return t;
}

}  // namespace sensoropt
