#include "sensoropt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <string_view>

#include "sensoropt/errors.hpp"
#include "sensoropt/rng.hpp"

namespace sensoropt {

namespace {

constexpr const char* kInputNames[kNumericInputs] = {"input1", "input2", "input3", "input4", "input5", "input6"};
constexpr const char* kOutputNames[kNetworkOutputs] = {"signal", "snr", "output3"};
constexpr std::string_view kCsvHeader = "input1,input2,input3,input4,input5,input6,category,signal,snr,output3";

std::array<double, kNumericInputs> numeric_inputs(const SampleRow& r) {
  return {r.input1, r.input2, r.input3, r.input4, static_cast<double>(r.input5), r.input6};
}

}  // namespace

double signal_to_log(double signal, double log_base) {
  if (!(signal > 0)) fail(ErrorKind::Domain, "signal must be > 0 for the log transform");
  if (log_base == 10) return std::log10(signal);
  return std::log(signal) / std::log(log_base);
}

double log_to_signal(double value, double log_base) { return std::pow(log_base, value); }

NormalizationSpec NormalizationSpec::fit(const Table& table, std::span<const std::size_t> rows) {
  if (rows.empty()) fail(ErrorKind::Config, "cannot fit normalization on zero rows");
  NormalizationSpec n;
  n.input_max.fill(-INFINITY);
  n.output_max.fill(-INFINITY);
  for (std::size_t i : rows) {
    const SampleRow& r = table.at(i);
    const auto in = numeric_inputs(r);
    for (std::size_t k = 0; k < kNumericInputs; ++k) n.input_max[k] = std::max(n.input_max[k], in[k]);
    n.output_max[0] = std::max(n.output_max[0], signal_to_log(r.signal, n.log_base));
    n.output_max[1] = std::max(n.output_max[1], r.snr);
    n.output_max[2] = std::max(n.output_max[2], r.output3);
  }
  n.validate();
  return n;
}

NormalizationSpec NormalizationSpec::fit(const Table& table) {
  std::vector<std::size_t> all(table.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit(table, all);
}

void NormalizationSpec::validate() const {
  for (std::size_t k = 0; k < kNumericInputs; ++k)
    if (!(input_max[k] > 0) || !std::isfinite(input_max[k]))
      fail(ErrorKind::Config, std::string("normalization maximum of ") + kInputNames[k] + " must be positive");
  for (std::size_t k = 0; k < kNetworkOutputs; ++k)
    if (!(output_max[k] > 0) || !std::isfinite(output_max[k]))
      fail(ErrorKind::Config, std::string("normalization maximum of ") + kOutputNames[k] + " must be positive");
  if (!(log_base > 1) || !std::isfinite(log_base)) fail(ErrorKind::Config, "log base must be > 1");
}

std::array<double, kNetworkInputs> encode_inputs(const Settings& s, int input5, int category,
                                                 const NormalizationSpec& norm) {
  if (category < 0 || category >= static_cast<int>(kCategories))
    fail(ErrorKind::Domain, "category must be in [0, 3], got " + std::to_string(category));
  const std::array<double, kNumericInputs> in{s.input1, s.input2, s.input3, s.input4,
                                              static_cast<double>(input5), s.input6};
  std::array<double, kNetworkInputs> out{};
  for (std::size_t k = 0; k < kNumericInputs; ++k) {
    if (!(in[k] >= 0 && in[k] <= norm.input_max[k]))
      fail(ErrorKind::Range, std::string(kInputNames[k]) + " = " + std::to_string(in[k]) +
                                 " outside normalization range [0, " + std::to_string(norm.input_max[k]) + "]");
    out[k] = in[k] / norm.input_max[k];
  }
  out[kNumericInputs + static_cast<std::size_t>(category)] = 1.0;
  return out;
}

std::array<double, kNetworkInputs> encode_inputs(const SampleRow& row, const NormalizationSpec& norm) {
  return encode_inputs(row.settings(), row.input5, row.category, norm);
}

std::array<double, kNetworkOutputs> encode_outputs(const SensorOutputs& o, const NormalizationSpec& norm) {
  return {signal_to_log(o.signal, norm.log_base) / norm.output_max[0], o.snr / norm.output_max[1],
          o.output3 / norm.output_max[2]};
}

std::array<double, kNetworkOutputs> encode_outputs(const SampleRow& row, const NormalizationSpec& norm) {
  return encode_outputs(SensorOutputs{row.signal, row.snr, row.output3}, norm);
}

SensorOutputs decode_outputs(std::span<const double, kNetworkOutputs> v, const NormalizationSpec& norm) {
  return {log_to_signal(v[0] * norm.output_max[0], norm.log_base), v[1] * norm.output_max[1],
          v[2] * norm.output_max[2]};
}

const std::vector<std::size_t>& SplitAssignment::rows(Partition p) const {
  switch (p) {
    case Partition::Train: return train;
    case Partition::Validation: return validation;
    case Partition::Test: return test;
  }
  return test;
}

SplitAssignment split(std::size_t n_rows, std::uint64_t seed) {
  if (n_rows < 10) fail(ErrorKind::Config, "split needs at least 10 rows, got " + std::to_string(n_rows));
  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed, 0x5b1u));
  fisher_yates(std::span<std::size_t>(order), rng);

  const std::size_t n_train = n_rows * 81 / 100;
  const std::size_t n_val = n_rows * 9 / 100;

  SplitAssignment s;
  s.seed = seed;
  s.labels.assign(n_rows, Partition::Test);
  for (std::size_t i = 0; i < n_rows; ++i) {
    const Partition p = i < n_train ? Partition::Train : i < n_train + n_val ? Partition::Validation : Partition::Test;
    s.labels[order[i]] = p;
  }
  s.train.reserve(n_train);
  s.validation.reserve(n_val);
  s.test.reserve(n_rows - n_train - n_val);
  for (std::size_t i = 0; i < n_rows; ++i) {
    switch (s.labels[i]) {
      case Partition::Train: s.train.push_back(i); break;
      case Partition::Validation: s.validation.push_back(i); break;
      case Partition::Test: s.test.push_back(i); break;
    }
  }
  return s;
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* name) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError(line, std::string("bad value for ") + name + ": '" + std::string(text) + "'");
  return value;
}

}  // namespace

Table read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw ParseError(1, path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError(1, path.string() + ": unexpected header '" + line + "'");

  Table table;
  std::size_t line_no = 1;
  std::array<std::string_view, 10> fields;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    const std::string_view sv(line);
    while (true) {
      const std::size_t comma = sv.find(',', start);
      const auto field = sv.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (count < fields.size()) fields[count] = field;
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (count != fields.size())
      throw ParseError(line_no, "expected 10 columns, found " + std::to_string(count));
    SampleRow r;
    r.input1 = parse_field<double>(fields[0], line_no, "input1");
    r.input2 = parse_field<double>(fields[1], line_no, "input2");
    r.input3 = parse_field<double>(fields[2], line_no, "input3");
    r.input4 = parse_field<double>(fields[3], line_no, "input4");
    r.input5 = parse_field<int>(fields[4], line_no, "input5");
    r.input6 = parse_field<double>(fields[5], line_no, "input6");
    r.category = parse_field<int>(fields[6], line_no, "category");
    r.signal = parse_field<double>(fields[7], line_no, "signal");
    r.snr = parse_field<double>(fields[8], line_no, "snr");
    r.output3 = parse_field<double>(fields[9], line_no, "output3");
    if (r.category < 0 || r.category >= static_cast<int>(kCategories))
      throw ParseError(line_no, "category must be in [0, 3]");
    if (!(r.signal > 0)) throw ParseError(line_no, "signal must be > 0");
    table.push_back(r);
  }
  return table;
}

void write_csv(const Table& table, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  std::fprintf(f, "%s\n", kCsvHeader.data());
  for (const SampleRow& r : table) {
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%d,%.17g,%d,%.17g,%.17g,%.17g\n", r.input1, r.input2, r.input3,
                 r.input4, r.input5, r.input6, r.category, r.signal, r.snr, r.output3);
  }
  const bool ok = std::ferror(f) == 0;
  if (std::fclose(f) != 0 || !ok) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace sensoropt
