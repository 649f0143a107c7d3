#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "streamalloc/model.hpp"

namespace streamalloc {

struct SubsetSumResult {
    std::vector<int> chosen;  // ascending user indices
    Rational total{0};
    std::int64_t cell_updates = 0;
};

/// Maximizes sum_{i in S} p_i subject to sum <= capacity over S within pool.
/// Dynamic program over the integer numerators with capacity floor(capacity * Z).
SubsetSumResult subset_sum(std::span<const int> pool, std::span<const GridProb> weights, const Rational& capacity);

struct ConcMinSolution {
    RateVector rates;
    double cost = 0.0;
    std::optional<int> fractional_user;  // the user whose rate lies strictly inside (0, p)
    std::int64_t dp_cell_updates = 0;
};

/// Exact minimizer of sum_i V_i((p_i - alpha_i)^+) s.t. sum alpha_i <= c, 0 <= alpha_i <= p_i,
/// by the extreme-point search over one fractional user and two subset sums per candidate.
/// Optimal whenever every V_i satisfies V_i(p_i) = V * p_i for a shared V.
ConcMinSolution conc_min(std::span<const UserProfile> users, const Rational& c);

/// Optimal total cost of the rate program; the lower bound for every ergodic policy.
double benchmark_cost(std::span<const UserProfile> users, const Rational& c);

inline constexpr int kBruteForceMaxUsers = 12;

/// Exhaustive search over every extreme point with at most one fractional user.
ConcMinSolution brute_force_alpha(std::span<const UserProfile> users, const Rational& c);

/// Maps the quality-degradation program onto the rate program and solves it.
/// `degradation` holds W_i, each anchored at the headroom q_i - p_i.
/// Returns the normalized service rates p_i + beta_i.
RateVector reduce_quality_degradation(std::span<const UserProfile> users, std::span<const CostFunction> degradation,
                                      int m, int b);

/// "num/den" rendering of an exact fraction.
std::string format_rational(const Rational& r);

}  // namespace streamalloc
