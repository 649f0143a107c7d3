#include "streamalloc/noback.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace streamalloc {

RateDistribution RateDistribution::uniform(double lo, double hi)
{
    if (!(0.0 <= lo && lo < hi && hi <= 1.0)) throw std::invalid_argument("uniform support must satisfy 0 <= a < b <= 1");
    RateDistribution d;
    d.kind = Kind::Uniform;
    d.lo = lo;
    d.hi = hi;
    d.cdf = [lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); };
    d.quantile = [lo, hi](double u) { return lo + std::clamp(u, 0.0, 1.0) * (hi - lo); };
    return d;
}

RateDistribution RateDistribution::linear_density(double lo, double hi, double slope)
{
    if (!(0.0 <= lo && lo < hi && hi <= 1.0)) throw std::invalid_argument("support must satisfy 0 <= a < b <= 1");
    if (!(slope > -1.0)) throw std::invalid_argument("linear density slope must exceed -1");
    RateDistribution d;
    d.kind = Kind::Generic;
    d.lo = lo;
    d.hi = hi;
    d.shape = slope;
    const double norm = 1.0 + slope / 2.0;
    d.cdf = [lo, hi, slope, norm](double x) {
        const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
        return (t + slope * t * t / 2.0) / norm;
    };
    d.quantile = [lo, hi, slope, norm](double u) {
        u = std::clamp(u, 0.0, 1.0);
        double t = u;
        if (std::abs(slope) > 1e-12) t = (-1.0 + std::sqrt(1.0 + 2.0 * slope * u * norm)) / slope;
        return lo + std::clamp(t, 0.0, 1.0) * (hi - lo);
    };
    return d;
}

double RateDistribution::mean() const
{
    if (kind == Kind::Uniform) return 0.5 * (lo + hi);
    // E[p] = lo + integral of the survival function
    const int steps = 4000;
    const double h = (hi - lo) / steps;
    double s = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double wgt = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        s += wgt * (1.0 - cdf(lo + k * h));
    }
    return lo + s * h / 3.0;
}

std::vector<int> weight_order(const NobackInstance& instance)
{
    std::vector<int> order(instance.users.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return instance.users[a].weight < instance.users[b].weight; });
    return order;
}

namespace {

void validate(const NobackInstance& inst)
{
    if (inst.users.empty()) throw std::invalid_argument("noback needs at least one user");
    if (inst.capacity <= 0) throw std::domain_error("capacity must be positive");
    for (const auto& u : inst.users) {
        if (!(u.weight > 0.0)) throw std::invalid_argument("weights must be positive");
        const auto& d = u.dist;
        if (!(0.0 <= d.lo && d.lo < d.hi && d.hi <= 1.0)) throw std::invalid_argument("support must satisfy 0 <= a < b <= 1");
        if (!d.cdf || !d.quantile) throw std::invalid_argument("distribution needs cdf and quantile");
        constexpr int kSamples = 64;
        double prev = d.cdf(d.lo);
        for (int k = 1; k <= kSamples; ++k) {
            const double v = d.cdf(d.lo + (d.hi - d.lo) * k / kSamples);
            if (!(v > prev)) throw std::domain_error("CDF is not strictly increasing on its support");
            prev = v;
        }
    }
}

// sum over weight ranks >= l (1-based) of G_i^{-1}(1 - lambda / w_i)
double rate_sum(const NobackInstance& inst, const std::vector<int>& order, const std::vector<double>& w, int l,
                double lambda, long long* ops)
{
    double s = 0.0;
    for (std::size_t r = static_cast<std::size_t>(l - 1); r < order.size(); ++r) {
        const int i = order[r];
        s += inst.users[i].dist.quantile(1.0 - lambda / w[i]);
    }
    if (ops) *ops += static_cast<long long>(order.size()) - (l - 1);
    return s;
}

double lambda_bisect_impl(const NobackInstance& inst, const std::vector<int>& order, const std::vector<double>& w,
                          int l, double tol, long long* ops)
{
    const double c = to_double(inst.capacity);
    const double top = w[order[l - 1]];
    const double f_top = rate_sum(inst, order, w, l, top, ops) - c;
    if (std::abs(f_top) <= tol) return top;
    if (f_top > 0.0) throw NumericalError("lambda bracket failure: rate sum at w_l still exceeds capacity");
    double lo = 0.0;
    double f_lo = rate_sum(inst, order, w, l, lo, ops) - c;
    if (std::abs(f_lo) <= tol) return lo;
    if (f_lo < 0.0) throw NumericalError("lambda bracket failure: rate sum at 0 is below capacity");
    double hi = top;
    for (int it = 0; it < kBisectionMaxIter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = rate_sum(inst, order, w, l, mid, ops) - c;
        if (std::abs(f) <= tol) return mid;
        if (f > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 0.0) break;
    }
    throw NumericalError("lambda bisection did not reach the capacity tolerance");
}

double lambda_uniform_impl(const NobackInstance& inst, const std::vector<int>& order, const std::vector<double>& w,
                           int l, long long* ops)
{
    double num = -to_double(inst.capacity);
    double den = 0.0;
    for (std::size_t r = static_cast<std::size_t>(l - 1); r < order.size(); ++r) {
        const auto& d = inst.users[order[r]].dist;
        if (d.kind != RateDistribution::Kind::Uniform) throw std::invalid_argument("closed-form lambda needs uniform users");
        num += d.hi;
        den += (d.hi - d.lo) / w[order[r]];
    }
    if (ops) *ops += static_cast<long long>(order.size()) - (l - 1);
    return num / den;
}

std::vector<double> raw_weights(const NobackInstance& inst)
{
    std::vector<double> w;
    w.reserve(inst.users.size());
    for (const auto& u : inst.users) w.push_back(u.weight);
    return w;
}

}  // namespace

double lambda_uniform(const NobackInstance& instance, const std::vector<int>& order, int l)
{
    if (l < 1 || l > static_cast<int>(order.size())) throw std::invalid_argument("threshold index out of range");
    return lambda_uniform_impl(instance, order, raw_weights(instance), l, nullptr);
}

double lambda_bisect(const NobackInstance& instance, const std::vector<int>& order, int l, double tol)
{
    if (l < 1 || l > static_cast<int>(order.size())) throw std::invalid_argument("threshold index out of range");
    return lambda_bisect_impl(instance, order, raw_weights(instance), l, tol, nullptr);
}

NobackSolution noback_solve(const NobackInstance& instance)
{
    validate(instance);
    const int n = static_cast<int>(instance.users.size());
    const double c = to_double(instance.capacity);
    NobackSolution sol;
    sol.alpha.assign(n, 0.0);

    double sum_hi = 0.0;
    for (const auto& u : instance.users) sum_hi += u.dist.hi;
    if (sum_hi <= c) {
        for (int i = 0; i < n; ++i) sol.alpha[i] = instance.users[i].dist.hi;
        return sol;
    }

    const std::vector<int> order = weight_order(instance);
    std::vector<double> w = raw_weights(instance);
    bool perturbed = false;
    for (int r = 1; r < n; ++r) {
        if (w[order[r]] <= w[order[r - 1]]) {
            w[order[r]] = w[order[r - 1]] + 1e-12 * (order[r] + 1);
            perturbed = true;
        }
    }
    if (perturbed) sol.warnings.emplace_back("duplicate weights perturbed by index-scaled 1e-12");

    auto weight_at = [&](int rank) { return rank == 0 ? 0.0 : w[order[rank - 1]]; };

    int l = 1;
    for (; l <= n; ++l)
        if (rate_sum(instance, order, w, l, weight_at(l), &sol.operations) <= c) break;
    sol.threshold = l;

    if (l > n) {
        // even the heaviest user alone at zero marginal saturates c: it takes everything
        sol.alpha[order[n - 1]] = c;
        sol.lambda = weight_at(n);
        return sol;
    }

    const bool all_uniform = std::all_of(instance.users.begin(), instance.users.end(), [](const NobackUser& u) {
        return u.dist.kind == RateDistribution::Kind::Uniform;
    });
    const double w_prev = weight_at(l - 1);
    double lambda = 0.0;
    bool interior;
    if (all_uniform) {
        lambda = lambda_uniform_impl(instance, order, w, l, &sol.operations);
        interior = lambda > w_prev;
    } else {
        interior = l == 1 || rate_sum(instance, order, w, l, w_prev, &sol.operations) > c;
        if (interior) lambda = lambda_bisect_impl(instance, order, w, l, kBisectionTol, &sol.operations);
    }

    if (interior) {
        for (int r = l; r <= n; ++r) {
            const int i = order[r - 1];
            sol.alpha[i] = instance.users[i].dist.quantile(1.0 - lambda / w[i]);
        }
        sol.lambda = lambda;
    } else {
        double used = 0.0;
        for (int r = l; r <= n; ++r) {
            const int i = order[r - 1];
            sol.alpha[i] = instance.users[i].dist.quantile(1.0 - w_prev / w[i]);
            used += sol.alpha[i];
        }
        sol.alpha[order[l - 2]] = std::max(c - used, 0.0);
        sol.lambda = w_prev;
    }
    return sol;
}

double expected_user_cost(const NobackUser& user, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::domain_error("rate must lie in [0, 1]");
    const auto& d = user.dist;
    if (alpha >= d.hi) return 0.0;
    if (d.kind == RateDistribution::Kind::Uniform) {
        if (alpha <= d.lo) return user.weight * (0.5 * (d.lo + d.hi) - alpha);
        return user.weight * (d.hi - alpha) * (d.hi - alpha) / (2.0 * (d.hi - d.lo));
    }
    // E[(p - alpha)^+] = integral_alpha^hi (1 - G(x)) dx
    const double start = std::max(alpha, d.lo);
    const int steps = 4000;
    const double h = (d.hi - start) / steps;
    double s = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double wgt = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        s += wgt * (1.0 - d.cdf(start + k * h));
    }
    return user.weight * ((start - alpha) + s * h / 3.0);
}

double expected_cost(const NobackInstance& instance, const std::vector<double>& alpha)
{
    if (alpha.size() != instance.users.size()) throw std::invalid_argument("one rate per user required");
    double s = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) s += expected_user_cost(instance.users[i], alpha[i]);
    return s;
}

KktReport kkt_check(const NobackInstance& instance, const NobackSolution& solution)
{
    KktReport rep;
    const auto& us = instance.users;
    const double lam = solution.lambda;
    for (std::size_t i = 0; i < us.size(); ++i) {
        const double a = solution.alpha[i];
        const auto& d = us[i].dist;
        const double w = us[i].weight;
        if (a <= 0.0) {
            rep.zero_rate_violation = std::max(rep.zero_rate_violation, w - lam);
        } else if (a < d.lo) {
            rep.interior_residual = std::max(rep.interior_residual, std::abs(lam - w));
        } else if (a < d.hi) {
            rep.interior_residual = std::max(rep.interior_residual, std::abs(lam - w * (1.0 - d.cdf(a))));
        }
        for (std::size_t j = 0; j < us.size(); ++j)
            if (a <= 0.0 && us[j].weight < w && solution.alpha[j] > 0.0) rep.monotone = false;
    }
    return rep;
}

}  // namespace streamalloc
