#pragma once

#include <array>
#include <compare>
#include <cstddef>

namespace sensoropt {

inline constexpr std::size_t kSettingCount = 5;   // Input1-4 and Input6
inline constexpr std::size_t kNumericInputs = 6;  // Input1-6
inline constexpr std::size_t kCategories = 4;
inline constexpr int kInput5Min = 0;
inline constexpr int kInput5Max = 49;
inline constexpr std::size_t kInput5Steps = kInput5Max - kInput5Min + 1;
inline constexpr std::size_t kRowsPerCombination = kInput5Steps * kCategories;  // 200
inline constexpr std::size_t kNetworkInputs = kNumericInputs + kCategories;     // 10
inline constexpr std::size_t kNetworkOutputs = 3;

// One choice of (Input1, Input2, Input3, Input4, Input6). Compares
// lexicographically in that field order.
struct Settings {
  double input1 = 0;
  double input2 = 0;
  double input3 = 0;
  double input4 = 0;
  double input6 = 0;

  auto operator<=>(const Settings&) const = default;

  std::array<double, kSettingCount> values() const { return {input1, input2, input3, input4, input6}; }
  static Settings from_values(const std::array<double, kSettingCount>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
};

struct SensorOutputs {
  double signal = 0;   // AU
  double snr = 0;      // dB
  double output3 = 0;  // dimensionless
};

struct SampleRow {
  double input1 = 0;
  double input2 = 0;
  double input3 = 0;
  double input4 = 0;
  int input5 = 0;
  double input6 = 0;
  int category = 0;
  double signal = 0;
  double snr = 0;
  double output3 = 0;

  bool operator==(const SampleRow&) const = default;

  Settings settings() const { return {input1, input2, input3, input4, input6}; }
};

}  // namespace sensoropt
