#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/rational.hpp>

namespace streamalloc {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r)
{
    return boost::rational_cast<double>(r);
}

/// Raised when an iterative solve fails to converge or to bracket its root.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A probability z/Z on the consumption grid. All values in one system share Z.
class GridProb {
public:
    GridProb() = default;
    GridProb(std::int64_t z, std::int64_t Z);

    std::int64_t z() const { return z_; }
    std::int64_t Z() const { return Z_; }
    Rational value() const { return Rational(z_, Z_); }
    double to_double() const { return static_cast<double>(z_) / static_cast<double>(Z_); }

    friend bool operator==(const GridProb&, const GridProb&) = default;

private:
    std::int64_t z_ = 0;
    std::int64_t Z_ = 1;
};

/// Nearest grid point z/Z to an exact rational in [0, 1]; ties round up.
GridProb nearest_grid_point(const Rational& x, std::int64_t Z);

/// V(x) = p^theta * x^(1 - theta).
struct PowerLaw {
    double theta = 0.5;
};

/// V(x) = slope * x.
struct Linear {
    double slope = 1.0;
};

/// Linear interpolation through (x, V) breakpoints; (0, 0) is implied.
struct TablePiecewise {
    std::vector<std::pair<double, double>> breakpoints;
};

using CostKind = std::variant<PowerLaw, Linear, TablePiecewise>;

struct CostFunction {
    CostKind kind;
    GridProb anchor;  // the p at which V(p) = V * p is checked

    std::string describe() const;
};

CostFunction power_law(double theta, GridProb anchor);
CostFunction linear_cost(double slope, GridProb anchor);

/// V(x) for x in [0, p]. Throws std::domain_error outside that range.
double eval_cost(const CostFunction& cost, const GridProb& p, double x);

/// V(x) for any x in [0, 1]; used for empirical pause frequencies, which may exceed p by noise.
double extended_cost(const CostFunction& cost, const GridProb& p, double x);

struct CostReport {
    bool ok = true;
    std::string failure;  // empty when ok
    double at = 0.0;      // abscissa of the first violation
};

inline constexpr double kConcavityEps = 1e-9;

/// Samples [0, p] uniformly and checks V(0) = 0, monotonicity and midpoint concavity.
CostReport validate_cost(const CostFunction& cost, const GridProb& p, int grid_points);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

struct UserProfile {
    int id = 0;
    GridProb p;
    CostFunction cost;
    double weight = 1.0;              // noback only
    std::optional<Interval> support;  // noback only
    std::optional<GridProb> q_full;   // quality degradation only
};

/// Throws std::invalid_argument unless every user shares the same Z. Returns that Z.
std::int64_t common_denominator(std::span<const UserProfile> users);

struct SystemConfig {
    int n = 1;
    int m = 1;
    int b = 1;
    int slots_per_epoch = 1;
    std::vector<double> h_on;  // n*m row-major, ON probability of channel j for user i
    std::uint64_t seed = 0;
    std::int64_t horizon = 1;

    /// Uniform ON probability h for every (i, j). Throws std::invalid_argument on bad input.
    static SystemConfig uniform(int n, int m, double h, std::uint64_t seed, std::int64_t horizon);

    Rational capacity() const { return Rational(m, b); }
    double h(int i, int j) const { return h_on[static_cast<std::size_t>(i) * m + j]; }
    void validate() const;
};

struct RateVector {
    std::vector<Rational> alpha;

    Rational total() const;
    std::vector<double> as_doubles() const;
};

/// Checks 0 <= alpha_i <= p_i and sum <= capacity; returns an empty string when valid.
std::string check_rates(const RateVector& rates, std::span<const UserProfile> users, const Rational& capacity);

/// Sum_i V_i(p_i - alpha_i) accumulated in user order.
double total_cost(std::span<const UserProfile> users, const RateVector& rates);

}  // namespace streamalloc
