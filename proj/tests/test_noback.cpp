#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "streamalloc/experiments.hpp"
#include "streamalloc/noback.hpp"
#include "oracles.hpp"

using namespace streamalloc;

namespace {

NobackInstance two_users()
{
    NobackInstance inst;
    inst.users.push_back({1.0, RateDistribution::uniform(0.2, 0.6)});
    inst.users.push_back({2.0, RateDistribution::uniform(0.2, 0.6)});
    inst.capacity = Rational(1, 2);
    return inst;
}

}  // namespace

TEST_CASE("two-user example")
{
    const NobackSolution s = noback_solve(two_users());
    CHECK(s.threshold == 2);
    CHECK(s.lambda == doctest::Approx(1.0));  // boundary user's weight
    CHECK(std::abs(s.alpha[0] - 0.1) <= 1e-12);
    CHECK(std::abs(s.alpha[1] - 0.4) <= 1e-12);
    CHECK(s.warnings.empty());
    CHECK(lambda_uniform(two_users(), weight_order(two_users()), 2) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("single user binds the capacity")
{
    NobackInstance inst;
    inst.users.push_back({1.0, RateDistribution::uniform(0.0, 1.0)});
    inst.capacity = Rational(1, 2);
    const NobackSolution s = noback_solve(inst);
    CHECK(s.alpha[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.lambda == doctest::Approx(0.5));

    inst.capacity = Rational(1, 4);
    CHECK(lambda_uniform(inst, {0}, 1) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("resource-rich instances get their upper support")
{
    NobackInstance inst = two_users();
    inst.capacity = Rational(6, 5);
    const NobackSolution s = noback_solve(inst);
    CHECK(s.alpha == std::vector<double>{0.6, 0.6});
}

TEST_CASE("closed-form lambda")
{
    NobackInstance inst = two_users();
    inst.capacity = Rational(6, 5);  // c = sum b
    CHECK(lambda_uniform(inst, weight_order(inst), 1) == doctest::Approx(0.0));
    CHECK_THROWS_AS(lambda_uniform(inst, weight_order(inst), 0), std::invalid_argument);
    CHECK_THROWS_AS(lambda_uniform(inst, weight_order(inst), 3), std::invalid_argument);
}

TEST_CASE("bisection matches the closed form")
{
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const NobackInstance inst = random_noback_instance(2 + trial % 8, 0.2, rng);
        const auto order = weight_order(inst);
        double sum_hi = 0.0;
        for (const auto& u : inst.users) sum_hi += u.dist.hi;
        if (sum_hi <= to_double(inst.capacity)) continue;
        const double exact = lambda_uniform(inst, order, 1);
        if (!(exact > 0.0 && exact <= inst.users[order[0]].weight)) continue;
        CHECK(lambda_bisect(inst, order, 1) == doctest::Approx(exact).epsilon(1e-7));
    }
}

TEST_CASE("bisection returns the bracket endpoint")
{
    // at lambda = w_1 = 1 the rates are G^{-1}(0) = 0.2 and G^{-1}(1/2) = 0.4
    NobackInstance inst = two_users();
    inst.capacity = Rational(3, 5);
    CHECK(lambda_bisect(inst, weight_order(inst), 1) == 1.0);
}

TEST_CASE("truncated-linear CDFs satisfy the KKT system")
{
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        NobackInstance inst;
        const int n = 2 + trial % 6;
        for (int i = 0; i < n; ++i) {
            const double a = 0.5 * uniform01(rng);
            const double b = std::min(1.0, a + 0.2 + 0.3 * uniform01(rng));
            const double slope = -0.8 + 2.8 * uniform01(rng);
            inst.users.push_back({1.0 + 4.0 * uniform01(rng), RateDistribution::linear_density(a, b, slope)});
        }
        inst.capacity = Rational(n, 4);
        const NobackSolution s = noback_solve(inst);
        const KktReport k = kkt_check(inst, s);
        CHECK(k.interior_residual <= 1e-8);
        CHECK(k.zero_rate_violation <= 1e-8);
        CHECK(k.monotone);
        double total = 0.0;
        for (double a : s.alpha) total += a;
        CHECK(total == doctest::Approx(to_double(inst.capacity)).epsilon(1e-8));
    }
}

TEST_CASE("expected_cost examples")
{
    const NobackUser u{1.0, RateDistribution::uniform(0.2, 0.6)};
    CHECK(expected_user_cost(u, 0.6) == 0.0);
    CHECK(expected_user_cost(u, 0.0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(expected_user_cost(u, 0.4) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK_THROWS_AS(expected_user_cost(u, 1.5), std::domain_error);
    CHECK_THROWS_AS(expected_cost(two_users(), {0.1}), std::invalid_argument);
}

TEST_CASE("expected_cost agrees with midpoint quadrature")
{
    const std::vector<RateDistribution> dists{RateDistribution::uniform(0.2, 0.6),
                                              RateDistribution::linear_density(0.1, 0.9, 1.5),
                                              RateDistribution::linear_density(0.3, 0.7, -0.5)};
    for (const auto& d : dists) {
        const NobackUser u{2.5, d};
        for (double alpha : {0.0, 0.25, 0.35, 0.5, 0.65, 0.95}) {
            // integral of (p - alpha)^+ dG(p) over a fine grid of the support
            const int steps = 200000;
            const double h = (d.hi - d.lo) / steps;
            double s = 0.0;
            for (int k = 0; k < steps; ++k) {
                const double x0 = d.lo + k * h;
                const double mass = d.cdf(x0 + h) - d.cdf(x0);
                s += mass * std::max(x0 + 0.5 * h - alpha, 0.0);
            }
            CHECK(expected_user_cost(u, alpha) == doctest::Approx(2.5 * s).epsilon(1e-6));
        }
    }
}

TEST_CASE("noback is never beaten by projected subgradient descent")
{
    Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 10;
        const NobackInstance inst = random_noback_instance(n, 0.3, rng);
        const NobackSolution s = noback_solve(inst);
        double total = 0.0;
        for (std::size_t i = 0; i < s.alpha.size(); ++i) {
            CHECK(s.alpha[i] >= 0.0);
            CHECK(s.alpha[i] <= inst.users[i].dist.hi + 1e-15);
            total += s.alpha[i];
        }
        CHECK(total <= to_double(inst.capacity) + 1e-12);
        const KktReport k = kkt_check(inst, s);
        CHECK(k.interior_residual <= 1e-8);
        CHECK(k.monotone);
        CHECK(expected_cost(inst, s.alpha) <= oracles::noback_subgradient(inst) + 1e-6);
    }
}

TEST_CASE("operation count grows quadratically")
{
    Rng rng(5);
    std::vector<double> ops;
    for (int n : {10, 100, 1000}) {
        const NobackSolution s = noback_solve(random_noback_instance(n, 0.2, rng));
        ops.push_back(static_cast<double>(s.operations));
        CHECK(s.operations <= 2LL * n * n);
    }
    CHECK(ops[2] / ops[1] <= 100.0 * 1.5);
}

TEST_CASE("duplicate weights are perturbed with a warning")
{
    NobackInstance inst = two_users();
    inst.users[1].weight = 1.0;
    const NobackSolution s = noback_solve(inst);
    REQUIRE(s.warnings.size() == 1);
    double total = s.alpha[0] + s.alpha[1];
    CHECK(total == doctest::Approx(0.5));
}

TEST_CASE("flat CDFs are rejected")
{
    NobackInstance inst = two_users();
    inst.users[0].dist.kind = RateDistribution::Kind::Generic;
    inst.users[0].dist.cdf = [](double x) { return x < 0.4 ? 0.0 : 1.0; };
    CHECK_THROWS_AS(noback_solve(inst), std::domain_error);
}
