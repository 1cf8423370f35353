#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sensoropt/dataset.hpp"
#include "sensoropt/types.hpp"

namespace sensoropt {

// Allowed values per setting, in Settings field order. The raw lists are
// kept as given: Input6 repeats 3600 and the enumeration keeps the repeat.
struct GridSpec {
  std::array<std::vector<double>, kSettingCount> values;

  static GridSpec table1();

  // Uniform shrink used by CI runs: keeps 1 + ceil(scale * 4) of the five
  // values per input, spread evenly over the list. scale 1 is table1(),
  // scale 0 keeps only the first value.
  static GridSpec scaled(double scale);

  void validate() const;
  std::size_t combination_count() const;
  std::size_t row_count() const { return combination_count() * kRowsPerCombination; }
};

std::vector<Settings> enumerate_grid(const GridSpec& spec);

// Per-input [min, max] of the settings, used to normalize settings
// inside the oracle and to bound interpolation.
std::array<double, kSettingCount> table1_minimums();
std::array<double, kSettingCount> table1_maximums();

// Analytic stand-in for the physical sensor.
//
//   log10 Signal = offset(s, cat) + gain(s, cat) * input5
//   SNR          = 5 log10 Signal - depth(s) * exp(-(log10 Signal - center(s))^2 / (2 width^2)) + noise
//   Output3      = smooth positive polynomial in the normalized settings
//
// Settings enter through u_i = (x_i - min_i) / (max_i - min_i) with the
// Setting extents. Dip depth depends on Input2-4, Output3 on Input1/Input6,
// so the two objectives can be traded off.
struct SensorGroundTruth {
  std::uint64_t seed = 0;
  double noise_db = 0;  // standard deviation of additive Gaussian SNR noise

  double offset_log10 = 0.3;
  double offset_span_log10 = 0.3;  // swing of the offset across the Input6 range
  std::array<double, kCategories> category_offset_log10{0.0, 0.05, 0.10, 0.15};
  double gain_log10_per_step = 0.095;
  double gain_span = 0.1;  // relative gain swing across the Input1 range
  std::array<double, kCategories> category_gain{1.0, 0.97, 0.94, 0.91};

  double dip_center_log10 = 3.78;
  double dip_center_span_log10 = 0.08;
  double dip_width_log10 = 0.15;
  double dip_depth_db = 5.0;
  double depth_floor = 0.55;
  double depth_input2 = 0.6;
  double depth_input3_curvature = 1.2;
  double depth_input3_optimum = 0.6;
  double depth_input4_curvature = 0.8;
  double depth_input4_optimum = 0.35;

  double output3_base = 2.2;
  double output3_input1_sq = 0.8;
  double output3_input6 = 0.5;
  double output3_cross = 0.2;
  double output3_input5 = 0.1;
  double output3_category = 0.05;

  void validate() const;

  void save(const std::filesystem::path& path) const;
  static SensorGroundTruth load(const std::filesystem::path& path);
};

std::array<double, kSettingCount> normalized_settings(const Settings& s);

double dip_depth(const SensorGroundTruth& truth, const Settings& s);
double dip_center_log10(const SensorGroundTruth& truth, const Settings& s);
double signal_log10(const SensorGroundTruth& truth, const Settings& s, int input5, int category);

SensorOutputs simulate(const SensorGroundTruth& truth, const Settings& s, int input5, int category);

// Rows are combination-major, then input5, then category.
Table generate_dataset(const SensorGroundTruth& truth, const GridSpec& spec);

}  // namespace sensoropt
