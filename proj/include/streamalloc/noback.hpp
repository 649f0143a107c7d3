#pragma once

#include <functional>
#include <string>
#include <vector>

#include "streamalloc/model.hpp"

namespace streamalloc {

/// Distribution of an unknown consumption rate on its support [lo, hi].
/// The CDF must be strictly increasing there, with an evaluable inverse.
struct RateDistribution {
    enum class Kind { Uniform, Generic };

    Kind kind = Kind::Uniform;
    double lo = 0.0;
    double hi = 1.0;
    double shape = 0.0;  // density slope for linear_density
    std::function<double(double)> cdf;
    std::function<double(double)> quantile;

    static RateDistribution uniform(double lo, double hi);
    /// Density proportional to 1 + slope * (x - lo) / (hi - lo) on [lo, hi], slope > -1.
    static RateDistribution linear_density(double lo, double hi, double slope);

    double mean() const;
};

struct NobackUser {
    double weight = 1.0;
    RateDistribution dist;
};

struct NobackInstance {
    std::vector<NobackUser> users;
    Rational capacity{1};
};

struct NobackSolution {
    std::vector<double> alpha;  // in input order
    double lambda = 0.0;        // multiplier consistent with every user's KKT condition
    int threshold = 0;          // 1-based l in weight order; n + 1 when no index passed the search
    std::vector<std::string> warnings;
    long long operations = 0;   // inner-loop work, for complexity checks
};

inline constexpr double kBisectionTol = 1e-9;
inline constexpr int kBisectionMaxIter = 200;

/// Optimal rates for linear costs w_i x under distributional knowledge of p_i.
/// Throws std::domain_error on a non-increasing CDF and NumericalError on a failed lambda solve.
NobackSolution noback_solve(const NobackInstance& instance);

/// Closed-form lambda for uniform users whose weight rank is >= l (1-based, weights ascending).
/// `order` lists user indices sorted by weight.
double lambda_uniform(const NobackInstance& instance, const std::vector<int>& order, int l);

/// lambda in (0, w_l] solving sum_{rank >= l} G^{-1}(1 - lambda / w_i) = c by bisection.
double lambda_bisect(const NobackInstance& instance, const std::vector<int>& order, int l,
                     double tol = kBisectionTol);

/// Users sorted by ascending weight (stable).
std::vector<int> weight_order(const NobackInstance& instance);

/// E[w (p - alpha)^+] for one user.
double expected_user_cost(const NobackUser& user, double alpha);

/// Sum of expected_user_cost; alpha in input order.
double expected_cost(const NobackInstance& instance, const std::vector<double>& alpha);

/// Largest KKT violation of a solution: interior stationarity, zero-rate thresholds,
/// and threshold monotonicity in weight.
struct KktReport {
    double interior_residual = 0.0;
    double zero_rate_violation = 0.0;
    bool monotone = true;
};

KktReport kkt_check(const NobackInstance& instance, const NobackSolution& solution);

}  // namespace streamalloc
