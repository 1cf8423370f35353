#include "sensoropt/curves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sensoropt/errors.hpp"

namespace sensoropt {

Curve Curve::assemble(const Settings& settings, std::vector<CurvePoint> points) {
  for (const auto& p : points)
    if (!(p.signal > 0) || !std::isfinite(p.signal)) fail(ErrorKind::Domain, "curve signal must be positive and finite");
  std::stable_sort(points.begin(), points.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.signal < b.signal; });
  return {settings, std::move(points)};
}

double FittedLine::operator()(double signal) const { return intercept + slope * std::log10(signal); }

double ideal_snr(double signal) {
  if (!(signal > 0)) fail(ErrorKind::Domain, "ideal_snr needs signal > 0");
  return 10.0 * std::log10(std::sqrt(signal));
}

FittedLine fit_line(const Curve& curve, double upper_bound) {
  std::size_t n = 0;
  double sx = 0;
  double sy = 0;
  for (const auto& p : curve.points) {
    if (p.signal >= upper_bound) continue;
    ++n;
    sx += std::log10(p.signal);
    sy += p.snr;
  }
  if (n < 2) fail(ErrorKind::Fit, "line fit needs at least 2 points below " + std::to_string(upper_bound) + " AU");
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0;
  double sxy = 0;
  for (const auto& p : curve.points) {
    if (p.signal >= upper_bound) continue;
    const double dx = std::log10(p.signal) - mx;
    sxx += dx * dx;
    sxy += dx * (p.snr - my);
  }
  if (!(sxx > 0)) fail(ErrorKind::Fit, "line fit needs at least 2 distinct signals");
  FittedLine line;
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  line.upper_bound = upper_bound;
  return line;
}

std::optional<double> prominence(const Curve& curve, const FittedLine& line, DipWindow window) {
  std::optional<double> best;
  for (const auto& p : curve.points) {
    if (p.signal < window.low || p.signal > window.high) continue;
    const double drop = line(p.signal) - p.snr;
    best = std::max(best.value_or(0.0), drop);
  }
  return best;
}

double mean_absolute_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::Shape, "mean_absolute_error: length mismatch");
  if (a.empty()) fail(ErrorKind::Shape, "mean_absolute_error: empty series");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

std::optional<double> CriteriaValues::get(std::size_t criterion) const {
  switch (criterion) {
    case 0: return ideal_mae;
    case 1: return prominence;
    case 2: return line_mae;
    case 3: return output3_mean;
    default: fail(ErrorKind::Domain, "criterion index must be 0..3");
  }
}

CriteriaValues criteria(const Curve& curve) {
  if (curve.points.empty()) fail(ErrorKind::Domain, "criteria of an empty curve");
  const std::size_t n = curve.points.size();
  std::vector<double> snr(n);
  std::vector<double> ideal(n);
  std::vector<double> fitted(n);
  const FittedLine line = fit_line(curve);
  double o3 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = curve.points[i];
    snr[i] = p.snr;
    ideal[i] = ideal_snr(p.signal);
    fitted[i] = line(p.signal);
    o3 += p.output3;
  }
  CriteriaValues c;
  c.ideal_mae = mean_absolute_error(ideal, snr);
  c.prominence = prominence(curve, line);
  c.line_mae = mean_absolute_error(fitted, snr);
  c.output3_mean = o3 / static_cast<double>(n);
  return c;
}

void write_curve_csv(const Curve& curve, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  const FittedLine line = fit_line(curve);
  std::fprintf(f, "signal,snr_pred,snr_ideal,snr_line\n");
  for (const auto& p : curve.points)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", p.signal, p.snr, ideal_snr(p.signal), line(p.signal));
  const bool ok = std::ferror(f) == 0;
  if (std::fclose(f) != 0 || !ok) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace sensoropt
