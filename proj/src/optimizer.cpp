#include "streamalloc/optimizer.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace streamalloc {

namespace {

std::int64_t floor_scaled(const Rational& x, std::int64_t Z)
{
    const Rational s = x * Z;
    std::int64_t q = s.numerator() / s.denominator();
    if (s.numerator() % s.denominator() != 0 && s.numerator() < 0) --q;
    return q;
}

std::optional<int> strictly_fractional(std::span<const UserProfile> users, const RateVector& rates)
{
    std::optional<int> k;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const auto& a = rates.alpha[i];
        if (a > 0 && a < users[i].p.value()) {
            if (k) throw std::logic_error("more than one fractional user in an extreme point");
            k = static_cast<int>(i);
        }
    }
    return k;
}

}  // namespace

std::string format_rational(const Rational& r)
{
    std::ostringstream os;
    os << r.numerator() << '/' << r.denominator();
    return os.str();
}

SubsetSumResult subset_sum(std::span<const int> pool, std::span<const GridProb> weights, const Rational& capacity)
{
    SubsetSumResult out;
    if (capacity <= 0 || pool.empty()) return out;
    const std::int64_t Z = weights.empty() ? 1 : weights.front().Z();
    std::int64_t total_z = 0;
    for (int i : pool) {
        if (weights[i].Z() != Z) throw std::invalid_argument("subset_sum weights must share one denominator");
        total_z += weights[i].z();
    }
    const std::int64_t cap = std::min(floor_scaled(capacity, Z), total_z);
    const std::size_t width = static_cast<std::size_t>(cap) + 1;
    const std::size_t items = pool.size();

    // reach[k][s]: some subset of the first k pool items sums to s
    std::vector<std::uint8_t> reach((items + 1) * width, 0);
    reach[0] = 1;
    for (std::size_t k = 1; k <= items; ++k) {
        const std::int64_t wz = weights[pool[k - 1]].z();
        const std::uint8_t* prev = &reach[(k - 1) * width];
        std::uint8_t* cur = &reach[k * width];
        for (std::int64_t s = 0; s <= cap; ++s) {
            cur[s] = prev[s] || (s >= wz && prev[s - wz]);
        }
        out.cell_updates += cap + 1;
    }

    std::int64_t best = cap;
    while (!reach[items * width + best]) --best;

    // backtrack; excluding the current item wins whenever it keeps the sum reachable
    std::int64_t s = best;
    for (std::size_t k = items; k >= 1; --k) {
        if (reach[(k - 1) * width + s]) continue;
        out.chosen.push_back(pool[k - 1]);
        s -= weights[pool[k - 1]].z();
    }
    std::sort(out.chosen.begin(), out.chosen.end());
    out.total = Rational(best, Z);
    return out;
}

ConcMinSolution conc_min(std::span<const UserProfile> users, const Rational& c)
{
    if (c <= 0) throw std::domain_error("capacity must be positive");
    common_denominator(users);
    const int n = static_cast<int>(users.size());

    ConcMinSolution sol;
    sol.rates.alpha.assign(n, Rational(0));
    Rational sum_p(0);
    for (const auto& u : users) sum_p += u.p.value();

    if (sum_p <= c) {
        for (int i = 0; i < n; ++i) sol.rates.alpha[i] = users[i].p.value();
        sol.cost = total_cost(users, sol.rates);
        return sol;
    }
    if (n == 1) {
        sol.rates.alpha[0] = std::min(users[0].p.value(), c);
        sol.cost = total_cost(users, sol.rates);
        sol.fractional_user = strictly_fractional(users, sol.rates);
        return sol;
    }

    std::vector<GridProb> weights;
    weights.reserve(n);
    for (const auto& u : users) weights.push_back(u.p);

    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<int> others;
    others.reserve(n - 1);
    for (int k = 0; k < n; ++k) {
        others.clear();
        for (int i = 0; i < n; ++i)
            if (i != k) others.push_back(i);
        const Rational p_k = users[k].p.value();
        const Rational others_total = sum_p - p_k;

        // L: serve L_k fully, user k takes what is left of c
        const SubsetSumResult left = subset_sum(others, weights, c);
        // R: starve R_k, user k takes what the rest leave of c
        const SubsetSumResult right = subset_sum(others, weights, sum_p - c);
        sol.dp_cell_updates += left.cell_updates + right.cell_updates;

        std::optional<RateVector> l_rates;
        const Rational l_alpha_k = c - left.total;
        if (l_alpha_k >= 0 && l_alpha_k <= p_k) {
            RateVector r{std::vector<Rational>(n, Rational(0))};
            for (int i : left.chosen) r.alpha[i] = users[i].p.value();
            r.alpha[k] = l_alpha_k;
            l_rates = std::move(r);
        }
        std::optional<RateVector> r_rates;
        const Rational r_alpha_k = c - others_total + right.total;
        if (r_alpha_k >= 0 && r_alpha_k <= p_k) {
            RateVector r{std::vector<Rational>(n, Rational(0))};
            for (int i : others) r.alpha[i] = users[i].p.value();
            for (int i : right.chosen) r.alpha[i] = 0;
            r.alpha[k] = r_alpha_k;
            r_rates = std::move(r);
        }
        if (!l_rates && !r_rates) continue;

        const double l_cost = l_rates ? total_cost(users, *l_rates) : std::numeric_limits<double>::infinity();
        const double r_cost = r_rates ? total_cost(users, *r_rates) : std::numeric_limits<double>::infinity();
        const bool take_left = l_cost <= r_cost;
        const double j_k = take_left ? l_cost : r_cost;
        if (j_k < best_cost) {
            best_cost = j_k;
            sol.rates = take_left ? *l_rates : *r_rates;
        }
    }
    if (!(best_cost < std::numeric_limits<double>::infinity()))
        throw std::logic_error("no feasible extreme point found for an overloaded instance");
    sol.cost = best_cost;
    sol.fractional_user = strictly_fractional(users, sol.rates);
    return sol;
}

double benchmark_cost(std::span<const UserProfile> users, const Rational& c)
{
    return conc_min(users, c).cost;
}

ConcMinSolution brute_force_alpha(std::span<const UserProfile> users, const Rational& c)
{
    const int n = static_cast<int>(users.size());
    if (n > kBruteForceMaxUsers) throw std::invalid_argument("brute force refuses more than 12 users");
    if (c <= 0) throw std::domain_error("capacity must be positive");

    ConcMinSolution sol;
    Rational sum_p(0);
    for (const auto& u : users) sum_p += u.p.value();
    if (sum_p <= c) {
        for (const auto& u : users) sol.rates.alpha.push_back(u.p.value());
        sol.cost = total_cost(users, sol.rates);
        return sol;
    }

    double best = std::numeric_limits<double>::infinity();
    RateVector trial{std::vector<Rational>(n, Rational(0))};
    for (int k = 0; k < n; ++k) {
        const std::uint32_t masks = 1u << (n - 1);
        for (std::uint32_t mask = 0; mask < masks; ++mask) {
            Rational served(0);
            int bit = 0;
            for (int i = 0; i < n; ++i) {
                if (i == k) continue;
                const bool full = (mask >> bit++) & 1u;
                trial.alpha[i] = full ? users[i].p.value() : Rational(0);
                served += trial.alpha[i];
            }
            const Rational a_k = c - served;
            if (a_k < 0 || a_k > users[k].p.value()) continue;
            trial.alpha[k] = a_k;
            const double cost = total_cost(users, trial);
            if (cost < best) {
                best = cost;
                sol.rates = trial;
            }
        }
    }
    sol.cost = best;
    sol.fractional_user = strictly_fractional(users, sol.rates);
    return sol;
}

RateVector reduce_quality_degradation(std::span<const UserProfile> users, std::span<const CostFunction> degradation,
                                      int m, int b)
{
    if (degradation.size() != users.size()) throw std::invalid_argument("one degradation cost per user required");
    if (m < 1 || b < 1) throw std::invalid_argument("m and b must be positive");
    const std::int64_t Z = common_denominator(users);
    const Rational capacity(m, b);

    Rational sum_p(0);
    for (const auto& u : users) sum_p += u.p.value();
    if (sum_p > capacity)
        throw std::domain_error("quality-degradation reduction needs an underloaded system (sum p * b <= m)");

    std::vector<UserProfile> surrogate;
    surrogate.reserve(users.size());
    Rational headroom_total(0);
    for (std::size_t i = 0; i < users.size(); ++i) {
        const auto& u = users[i];
        if (!u.q_full) throw std::invalid_argument("quality degradation needs q_full for every user");
        if (u.q_full->Z() != Z) throw std::invalid_argument("q_full must share the consumption grid");
        if (u.q_full->z() < u.p.z()) throw std::domain_error("q_full must not be below p");
        UserProfile s;
        s.id = u.id;
        s.p = GridProb(u.q_full->z() - u.p.z(), Z);
        s.cost = degradation[i];
        headroom_total += s.p.value();
        surrogate.push_back(std::move(s));
    }

    const Rational spare = capacity - sum_p;
    RateVector beta;
    if (headroom_total <= spare) {
        for (const auto& s : surrogate) beta.alpha.push_back(s.p.value());
    } else if (spare == Rational(0)) {
        beta.alpha.assign(users.size(), Rational(0));
    } else {
        beta = conc_min(surrogate, spare).rates;
    }

    RateVector out;
    out.alpha.reserve(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) out.alpha.push_back(users[i].p.value() + beta.alpha[i]);
    return out;
}

}  // namespace streamalloc
