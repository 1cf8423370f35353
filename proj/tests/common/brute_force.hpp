#pragma once

// Straightforward reference implementations of ranking and rank-intersection
// selection used to cross-check the optimizer.

#include <sensoropt/optimizer.hpp>

#include <algorithm>
#include <optional>
#include <random>
#include <set>
#include <vector>

namespace sensoropt::reference {

// Dense rank: number of distinct scorable values strictly below this one.
inline std::array<int, kCriteriaCount> dense_ranks(std::span<const Candidate> all, const Candidate& c,
                                                   CriteriaSubset subset) {
  std::array<int, kCriteriaCount> ranks{kNotRanked, kNotRanked, kNotRanked, kNotRanked};
  for (std::size_t k = 0; k < kCriteriaCount; ++k) {
    if (!subset.contains(k)) continue;
    const auto mine = c.criteria.get(k);
    if (!mine) continue;
    std::set<double> below;
    for (const auto& o : all) {
      const auto v = o.criteria.get(k);
      if (v && *v < *mine) below.insert(*v);
    }
    ranks[k] = static_cast<int>(below.size());
  }
  return ranks;
}

struct Choice {
  Settings settings;
  std::size_t depth = 0;
};

// Grows K from 1 until some candidate sits in every top-K prefix, then takes
// the least rank sum and finally the lexicographically smallest settings.
inline std::optional<Choice> brute_select(std::span<const Candidate> all, CriteriaSubset subset) {
  std::vector<std::array<int, kCriteriaCount>> ranks;
  for (const auto& c : all) ranks.push_back(dense_ranks(all, c, subset));
  for (std::size_t K = 1; K <= all.size(); ++K) {
    std::optional<std::size_t> best;
    long long best_sum = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      bool inside = true;
      long long sum = 0;
      for (std::size_t k = 0; k < kCriteriaCount; ++k) {
        if (!subset.contains(k)) continue;
        if (ranks[i][k] < 0 || static_cast<std::size_t>(ranks[i][k]) >= K) inside = false;
        sum += ranks[i][k];
      }
      if (!inside) continue;
      if (!best || sum < best_sum || (sum == best_sum && all[i].settings < all[*best].settings)) {
        best = i;
        best_sum = sum;
      }
    }
    if (best) return Choice{all[*best].settings, K};
  }
  return std::nullopt;
}

// Random candidate set with deliberately coarse values so ties are common.
// Settings are distinct; about one in eight prominences is unscorable.
inline std::vector<Candidate> random_candidates(std::mt19937_64& rng, std::size_t n) {
  std::vector<Candidate> out;
  std::set<Settings> used;
  while (out.size() < n) {
    Candidate c;
    c.settings = {static_cast<double>(rng() % 7), static_cast<double>(rng() % 7), static_cast<double>(rng() % 7),
                  static_cast<double>(rng() % 7), static_cast<double>(rng() % 7)};
    if (!used.insert(c.settings).second) continue;
    c.criteria.ideal_mae = static_cast<double>(rng() % 12) / 4;
    if (rng() % 8 != 0) c.criteria.prominence = static_cast<double>(rng() % 12) / 4;
    c.criteria.line_mae = static_cast<double>(rng() % 12) / 4;
    c.criteria.output3_mean = 2 + static_cast<double>(rng() % 12) / 4;
    out.push_back(c);
  }
  return out;
}

inline CriteriaSubset random_subset(std::mt19937_64& rng) {
  return CriteriaSubset{static_cast<std::uint8_t>(1 + rng() % 15)};
}

}  // namespace sensoropt::reference
