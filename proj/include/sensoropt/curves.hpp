#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sensoropt/types.hpp"

namespace sensoropt {

inline constexpr double kFitUpperBound = 2e3;  // AU
inline constexpr double kDipWindowLow = 3e3;   // AU
inline constexpr double kDipWindowHigh = 1e4;  // AU

struct CurvePoint {
  double signal = 0;  // AU
  double snr = 0;     // dB
  double output3 = 0;
};

// Signal vs SNR curve for one settings combination, sorted by signal.
struct Curve {
  Settings settings;
  std::vector<CurvePoint> points;

  // Sorts by signal; throws Domain if any signal is not strictly positive.
  static Curve assemble(const Settings& settings, std::vector<CurvePoint> points);
};

struct FittedLine {
  double slope = 0;      // dB per decade of signal
  double intercept = 0;  // dB at signal = 1
  double upper_bound = kFitUpperBound;

  double operator()(double signal) const;
};

struct DipWindow {
  double low = kDipWindowLow;
  double high = kDipWindowHigh;
};

// 10 log10(sqrt(signal)) = 5 log10(signal)
double ideal_snr(double signal);

// Least squares of snr on log10(signal) over points with signal < upper_bound.
FittedLine fit_line(const Curve& curve, double upper_bound = kFitUpperBound);

// Largest drop of the curve below the line over in-window points, floored at
// 0. nullopt when no point lies in the window.
std::optional<double> prominence(const Curve& curve, const FittedLine& line, DipWindow window = {});

double mean_absolute_error(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kCriteriaCount = 4;

struct CriteriaValues {
  double ideal_mae = 0;               // criterion 1, dB
  std::optional<double> prominence;   // criterion 2, dB
  double line_mae = 0;                // criterion 3, dB
  double output3_mean = 0;            // criterion 4

  // Criterion value by 0-based index; nullopt only for an unscorable prominence.
  std::optional<double> get(std::size_t criterion) const;
};

CriteriaValues criteria(const Curve& curve);

// signal,snr_pred,snr_ideal,snr_line
void write_curve_csv(const Curve& curve, const std::filesystem::path& path);

}  // namespace sensoropt
