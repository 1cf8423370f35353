#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sensoropt/types.hpp"

namespace sensoropt {

using Table = std::vector<SampleRow>;

// Max-normalization of the network inputs and outputs. The signal output is
// log-transformed before its maximum is taken.
struct NormalizationSpec {
  std::array<double, kNumericInputs> input_max{};
  std::array<double, kNetworkOutputs> output_max{};
  double log_base = 10;

  // Maxima over the given rows of `table`.
  static NormalizationSpec fit(const Table& table, std::span<const std::size_t> rows);
  static NormalizationSpec fit(const Table& table);

  void validate() const;
  bool operator==(const NormalizationSpec&) const = default;
};

double signal_to_log(double signal, double log_base);
double log_to_signal(double value, double log_base);

std::array<double, kNetworkInputs> encode_inputs(const SampleRow& row, const NormalizationSpec& norm);
std::array<double, kNetworkInputs> encode_inputs(const Settings& s, int input5, int category,
                                                 const NormalizationSpec& norm);
std::array<double, kNetworkOutputs> encode_outputs(const SampleRow& row, const NormalizationSpec& norm);
std::array<double, kNetworkOutputs> encode_outputs(const SensorOutputs& out, const NormalizationSpec& norm);
SensorOutputs decode_outputs(std::span<const double, kNetworkOutputs> v, const NormalizationSpec& norm);

enum class Partition : std::uint8_t { Train = 0, Validation = 1, Test = 2 };

struct SplitAssignment {
  std::uint64_t seed = 0;
  static constexpr double kTrainFraction = 0.81;
  static constexpr double kValidationFraction = 0.09;
  static constexpr double kTestFraction = 0.10;

  std::vector<Partition> labels;  // per row
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;

  const std::vector<std::size_t>& rows(Partition p) const;
};

// Seeded shuffle of row indices, then prefix assignment with sizes
// floor(0.81 n) / floor(0.09 n) / remainder. Index lists come back sorted.
SplitAssignment split(std::size_t n_rows, std::uint64_t seed);

// Header: input1,input2,input3,input4,input5,input6,category,signal,snr,output3
Table read_csv(const std::filesystem::path& path);
void write_csv(const Table& table, const std::filesystem::path& path);

}  // namespace sensoropt
