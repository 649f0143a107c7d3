#include "streamalloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace streamalloc {

GridProb::GridProb(std::int64_t z, std::int64_t Z) : z_(z), Z_(Z)
{
    if (Z <= 0) throw std::invalid_argument("grid denominator must be positive");
    if (z < 0 || z > Z) throw std::invalid_argument("grid numerator must lie in [0, Z]");
}

GridProb nearest_grid_point(const Rational& x, std::int64_t Z)
{
    if (x < 0 || x > 1) throw std::domain_error("grid rounding needs a value in [0, 1]");
    // floor(x*Z + 1/2) rounds half up
    const Rational scaled = x * Z + Rational(1, 2);
    const std::int64_t z = scaled.numerator() / scaled.denominator();
    return GridProb(std::min(z, Z), Z);
}

CostFunction power_law(double theta, GridProb anchor)
{
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("power-law theta must lie in (0, 1)");
    return CostFunction{PowerLaw{theta}, anchor};
}

CostFunction linear_cost(double slope, GridProb anchor)
{
    if (!(slope > 0.0)) throw std::invalid_argument("linear slope must be positive");
    return CostFunction{Linear{slope}, anchor};
}

namespace {

struct Evaluator {
    double p;
    double x;

    double operator()(const PowerLaw& f) const
    {
        if (x == 0.0) return 0.0;
        return std::pow(p, f.theta) * std::pow(x, 1.0 - f.theta);
    }
    double operator()(const Linear& f) const { return f.slope * x; }
    double operator()(const TablePiecewise& f) const
    {
        double x0 = 0.0;
        double v0 = 0.0;
        for (const auto& [x1, v1] : f.breakpoints) {
            if (x <= x1) {
                if (x1 == x0) return v1;
                return v0 + (v1 - v0) * (x - x0) / (x1 - x0);
            }
            x0 = x1;
            v0 = v1;
        }
        return v0;
    }
};

}  // namespace

std::string CostFunction::describe() const
{
    std::ostringstream os;
    std::visit(
        [&os](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PowerLaw>)
                os << "power_law(" << f.theta << ")";
            else if constexpr (std::is_same_v<T, Linear>)
                os << "linear(" << f.slope << ")";
            else
                os << "table(" << f.breakpoints.size() << " points)";
        },
        kind);
    return os.str();
}

double eval_cost(const CostFunction& cost, const GridProb& p, double x)
{
    const double pd = p.to_double();
    // tolerate round-off from rational -> double conversion at the upper end
    if (!(x >= 0.0) || x > pd + 1e-12) {
        std::ostringstream os;
        os << "cost argument " << x << " outside [0, " << pd << "]";
        throw std::domain_error(os.str());
    }
    return std::visit(Evaluator{pd, std::min(x, pd)}, cost.kind);
}

double extended_cost(const CostFunction& cost, const GridProb& p, double x)
{
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("pause frequency outside [0, 1]");
    return std::visit(Evaluator{p.to_double(), x}, cost.kind);
}

CostReport validate_cost(const CostFunction& cost, const GridProb& p, int grid_points)
{
    if (grid_points < 3) throw std::invalid_argument("validate_cost needs at least 3 grid points");
    const double pd = p.to_double();
    std::vector<double> xs(grid_points);
    std::vector<double> vs(grid_points);
    for (int k = 0; k < grid_points; ++k) {
        xs[k] = pd * k / (grid_points - 1);
        vs[k] = eval_cost(cost, p, xs[k]);
    }
    if (vs[0] != 0.0) return {false, "V(0) != 0", 0.0};
    for (int k = 1; k < grid_points; ++k)
        if (vs[k] < vs[k - 1] - kConcavityEps) return {false, "not non-decreasing", xs[k]};
    // midpoint of (x_{k-1}, x_{k+1}) is x_k on a uniform grid
    for (int k = 1; k + 1 < grid_points; ++k)
        if (vs[k] < 0.5 * (vs[k - 1] + vs[k + 1]) - kConcavityEps) return {false, "not midpoint-concave", xs[k]};
    return {};
}

std::int64_t common_denominator(std::span<const UserProfile> users)
{
    if (users.empty()) return 1;
    const std::int64_t Z = users.front().p.Z();
    for (const auto& u : users)
        if (u.p.Z() != Z) throw std::invalid_argument("all consumption rates must share one grid denominator");
    return Z;
}

SystemConfig SystemConfig::uniform(int n, int m, double h, std::uint64_t seed, std::int64_t horizon)
{
    SystemConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.h_on.assign(static_cast<std::size_t>(std::max(n, 0)) * std::max(m, 0), h);
    cfg.seed = seed;
    cfg.horizon = horizon;
    cfg.validate();
    return cfg;
}

void SystemConfig::validate() const
{
    if (n < 1) throw std::invalid_argument("need at least one user");
    if (m < 1) throw std::invalid_argument("need at least one channel");
    if (b < 1) throw std::invalid_argument("frame multiplier b must be positive");
    if (slots_per_epoch < 1) throw std::invalid_argument("slots per epoch must be positive");
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    if (h_on.size() != static_cast<std::size_t>(n) * m) throw std::invalid_argument("h_on must hold n*m entries");
    for (double h : h_on)
        if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("channel ON probabilities must lie in (0, 1]");
}

Rational RateVector::total() const
{
    Rational s(0);
    for (const auto& a : alpha) s += a;
    return s;
}

std::vector<double> RateVector::as_doubles() const
{
    std::vector<double> out;
    out.reserve(alpha.size());
    for (const auto& a : alpha) out.push_back(to_double(a));
    return out;
}

std::string check_rates(const RateVector& rates, std::span<const UserProfile> users, const Rational& capacity)
{
    if (rates.alpha.size() != users.size()) return "rate vector length differs from user count";
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (rates.alpha[i] < 0) return "negative rate for user " + std::to_string(i);
        if (rates.alpha[i] > users[i].p.value()) return "rate above consumption for user " + std::to_string(i);
    }
    if (rates.total() > capacity) return "rates exceed capacity";
    return {};
}

double total_cost(std::span<const UserProfile> users, const RateVector& rates)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const Rational pause = users[i].p.value() - rates.alpha[i];
        sum += eval_cost(users[i].cost, users[i].p, pause > 0 ? to_double(pause) : 0.0);
    }
    return sum;
}

}  // namespace streamalloc
