#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sensoropt/curves.hpp"
#include "sensoropt/neuralnet.hpp"
#include "sensoropt/sensor.hpp"

namespace sensoropt {

// resolution^n_inputs; throws Overflow instead of wrapping.
std::uint64_t count_experiments(std::uint64_t resolution, std::uint64_t n_inputs);

// Values one setting takes in a sweep.
struct AxisSpec {
  std::vector<double> values;

  // min, min + step, ... up to max (inclusive, with 1e-9 relative slack).
  static AxisSpec arithmetic(double min, double max, double step);
};

struct InterpolationSpec {
  static constexpr std::uint64_t kDefaultRowBudget = 15'000'000;

  std::array<AxisSpec, kSettingCount> axes;
  std::uint64_t row_budget = kDefaultRowBudget;

  // Setting extents with steps 11.5, 4, 12.5, 100, 100: 9^5 = 59049 combinations.
  static InterpolationSpec defaults();
  static InterpolationSpec from_grid(const GridSpec& grid);

  std::uint64_t combination_count() const;
  std::uint64_t row_count() const;

  // Nonempty sorted axes within the setting extents and within the row budget.
  void validate() const;
};

// Lexicographic cartesian product of the axes, addressed by index so it can be
// streamed or split into chunks without materializing.
class InterpolatedGrid {
 public:
  explicit InterpolatedGrid(InterpolationSpec spec);

  std::uint64_t size() const noexcept { return size_; }
  Settings at(std::uint64_t index) const;
  const InterpolationSpec& spec() const noexcept { return spec_; }

 private:
  InterpolationSpec spec_;
  std::uint64_t size_ = 0;
};

// Predicts the 200-point curve of one combination (input5 0..49 x 4
// categories) in a single batched forward pass. One per thread.
class CurvePredictor {
 public:
  explicit CurvePredictor(const Model& model);

  Curve predict(const Settings& settings);

 private:
  const Model* model_;
  BatchEngine engine_;
  std::vector<double> inputs_;
  std::vector<double> outputs_;
};

std::vector<Curve> predict_curves(const Model& model, std::span<const Settings> grid);

// Bit i selects criterion i+1.
struct CriteriaSubset {
  std::uint8_t mask = 0b1111;

  static constexpr CriteriaSubset all() { return {0b1111}; }
  static constexpr CriteriaSubset without_output3() { return {0b0111}; }
  static constexpr CriteriaSubset only(std::size_t criterion) {
    return {static_cast<std::uint8_t>(1u << criterion)};
  }
  bool contains(std::size_t criterion) const { return (mask >> criterion) & 1u; }
  bool empty() const { return (mask & 0b1111) == 0; }
};

inline constexpr int kNotRanked = -1;

struct CandidateScore {
  Settings settings;
  CriteriaValues criteria;
  std::array<int, kCriteriaCount> ranks{kNotRanked, kNotRanked, kNotRanked, kNotRanked};
};

struct Candidate {
  Settings settings;
  CriteriaValues criteria;
};

// Dense ascending ranks for each criterion in `subset`; unscorable values and
// criteria outside the subset get kNotRanked. Output is in lexicographic
// settings order.
std::vector<CandidateScore> rank_candidates(std::span<const Candidate> candidates,
                                            CriteriaSubset subset = CriteriaSubset::all());

struct SelectionResult {
  std::size_t index = 0;  // into the ranked list
  Settings settings;
  CriteriaValues criteria;
  std::size_t depth = 0;  // smallest K whose top-K intersection is nonempty
  CriteriaSubset subset;
};

// Smallest K >= 1 such that some candidate has rank < K on every criterion
// of the subset; among those, least rank sum, then lexicographic settings.
// nullopt when no candidate is ranked on every subset criterion.
std::optional<SelectionResult> select(std::span<const CandidateScore> ranked, CriteriaSubset subset);

struct SweepResult {
  std::vector<CandidateScore> candidates;  // ranked on all four criteria
};

using SweepProgress = std::function<void(std::uint64_t done, std::uint64_t total)>;

// Streams the grid through the surrogate, keeping only the criteria per
// combination. Chunks are split across `threads` workers and merged in grid
// order, so the result does not depend on the thread count.
SweepResult sweep(const Model& model, const InterpolatedGrid& grid, unsigned threads = 1,
                  const SweepProgress& progress = {});

// input1..input6, c1..c4, rank1..rank4, then one 0/1 column per selection.
void write_sweep_report(const SweepResult& result,
                        std::span<const std::pair<std::string, std::optional<SelectionResult>>> selections,
                        const std::filesystem::path& path);

}  // namespace sensoropt
