#include <doctest.h>

#include <cmath>

#include "streamalloc/optimizer.hpp"
#include "streamalloc/simulator.hpp"

using namespace streamalloc;

namespace {

std::vector<UserProfile> users_with(const std::vector<std::int64_t>& z, std::int64_t Z)
{
    std::vector<UserProfile> us;
    for (std::size_t i = 0; i < z.size(); ++i) {
        UserProfile u;
        u.id = static_cast<int>(i);
        u.p = GridProb(z[i], Z);
        u.cost = power_law(0.5, u.p);
        us.push_back(u);
    }
    return us;
}

std::vector<ConsumptionProcess> iid_of(const std::vector<UserProfile>& us)
{
    std::vector<ConsumptionProcess> c;
    for (const auto& u : us) c.push_back(ConsumptionProcess::iid(u.p));
    return c;
}

}  // namespace

TEST_CASE("buffer step examples")
{
    CHECK(step_buffer(0, 0, 1).paused);
    CHECK(step_buffer(0, 0, 1).next == 0);
    CHECK_FALSE(step_buffer(0, 1, 1).paused);
    CHECK(step_buffer(0, 1, 1).next == 0);
    CHECK(step_buffer(2, 0, 1).next == 1);
    CHECK(step_buffer(0, 1, 0).next == 1);
    CHECK_FALSE(step_buffer(0, 0, 0).paused);
    CHECK(step_buffer(3, 2, 0).next == 5);
    CHECK_THROWS_AS(step_buffer(-1, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(step_buffer(0, 0, 2), std::invalid_argument);
}

TEST_CASE("channel sampling")
{
    Rng rng(3);
    const auto on = sample_channels(SystemConfig::uniform(3, 2, 1.0, 0, 1), rng);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) CHECK(on.on(i, j));
    const auto cfg = SystemConfig::uniform(10, 10, 0.3, 0, 1);
    int count = 0;
    for (int t = 0; t < 2000; ++t) {
        const auto H = sample_channels(cfg, rng);
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) count += H.on(i, j);
    }
    CHECK(std::abs(count / 200000.0 - 0.3) < 0.005);
}

TEST_CASE("pause frequency of a static allocation is p - alpha")
{
    const auto us = users_with({10}, 20);
    const auto cfg = SystemConfig::uniform(1, 1, 1.0, 0, 100000);
    for (const auto& a : {Rational(1, 10), Rational(3, 10), Rational(9, 20)}) {
        const SimTrace tr = run_sim(StaticAllocate{RateVector{{a}}}, cfg, us, iid_of(us), 100000, 77);
        CHECK(std::abs(tr.pause_frequency()[0] - (0.5 - to_double(a))) < 0.01);
        CHECK(tr.pauses[0] <= tr.consumed[0]);
    }
}

TEST_CASE("over-served users stop pausing")
{
    const auto us = users_with({10}, 20);
    const auto cfg = SystemConfig::uniform(1, 1, 1.0, 0, 100000);
    const SimTrace tr = run_sim(StaticAllocate{RateVector{{Rational(3, 5)}}}, cfg, us, iid_of(us), 100000, 5);
    CHECK(tr.pause_frequency()[0] < 0.001);
}

TEST_CASE("runs are reproducible from the seed")
{
    const auto us = users_with({8, 12, 16, 10}, 20);
    const auto cfg = SystemConfig::uniform(4, 2, 0.6, 0, 5000);
    const auto alpha = conc_min(us, Rational(2)).rates;
    const SimTrace a = run_sim(StaticAllocate{alpha}, cfg, us, iid_of(us), 5000, 9);
    const SimTrace b = run_sim(StaticAllocate{alpha}, cfg, us, iid_of(us), 5000, 9);
    const SimTrace c = run_sim(StaticAllocate{alpha}, cfg, us, iid_of(us), 5000, 10);
    CHECK(a.pauses == b.pauses);
    CHECK(a.served == b.served);
    CHECK(a.consumed == b.consumed);
    CHECK_FALSE(a.served == c.served);
    // consumption uses its own stream, so policies see the same frames
    const SimTrace rr = run_sim(RoundRobin{}, cfg, us, iid_of(us), 5000, 9);
    CHECK(rr.consumed == a.consumed);
}

TEST_CASE("Markov consumption keeps the mean and sets the autocorrelation")
{
    const GridProb p(3, 10);
    const double s = 0.6;
    Rng rng(12);
    ConsumptionSource src(ConsumptionProcess::markov(p, s), rng);
    const int N = 1000000;
    double sum = 0.0;
    double lag = 0.0;
    int prev = src.next(rng);
    sum += prev;
    for (int t = 1; t < N; ++t) {
        const int f = src.next(rng);
        sum += f;
        lag += f * prev;
        prev = f;
    }
    const double mean = sum / N;
    const double cov = lag / (N - 1) - mean * mean;
    CHECK(std::abs(mean - 0.3) < 0.005);
    CHECK(std::abs(cov / (0.3 * 0.7) - s) < 0.02);
    CHECK_THROWS_AS(ConsumptionProcess::markov(p, 1.0), std::invalid_argument);
}

TEST_CASE("checkpoints")
{
    CHECK(log_checkpoints(10000) == std::vector<std::int64_t>{100, 316, 1000, 3162, 10000});
    CHECK(log_checkpoints(50) == std::vector<std::int64_t>{50});

    const auto us = users_with({10, 14}, 20);
    const auto cfg = SystemConfig::uniform(2, 1, 1.0, 0, 3000);
    SimOptions opt;
    opt.checkpoints = {3000, 10, 10, 0, 500, 99999};
    const SimTrace tr = run_sim(StaticAllocate{RateVector{{Rational(1, 2), Rational(1, 2)}}}, cfg, us, iid_of(us),
                                3000, 1, opt);
    REQUIRE(tr.checkpoints.size() == 3);
    CHECK(tr.checkpoints[0].t == 10);
    CHECK(tr.checkpoints[1].t == 500);
    CHECK(tr.checkpoints[2].pauses == tr.pauses);
    CHECK(tr.checkpoints[2].cost == doctest::Approx(tr.cost(us)));
}

TEST_CASE("round robin shares channels evenly")
{
    const auto us = users_with({10, 10, 10, 10}, 20);
    const auto cfg = SystemConfig::uniform(4, 2, 1.0, 0, 1000);
    const SimTrace tr = run_sim(RoundRobin{}, cfg, us, iid_of(us), 1000, 2);
    CHECK(tr.served == std::vector<std::int64_t>{500, 500, 500, 500});
}

TEST_CASE("iFestival runs inside the simulator")
{
    const auto us = users_with({9, 12, 15, 18}, 20);
    const auto cfg = SystemConfig::uniform(4, 2, 1.0, 0, 20000);
    const SimTrace tr = run_sim(IFestivalParams{40, 2}, cfg, us, iid_of(us), 20000, 4);
    CHECK(tr.feedback_bits > 0);
    CHECK(tr.feedback_bits == tr.checkpoints.back().feedback_bits);
    CHECK_FALSE(tr.phase_log.empty());
    for (int i = 0; i < 4; ++i) CHECK(tr.pauses[i] <= tr.consumed[i]);
}

TEST_CASE("backfill never serves more than was drawn")
{
    const auto us = users_with({8, 12, 16, 10, 9, 14}, 20);
    const auto cfg = SystemConfig::uniform(6, 3, 0.5, 0, 20000);
    const auto alpha = conc_min(us, Rational(3)).rates;
    SimOptions opt;
    opt.backfill = true;
    const SimTrace with = run_sim(StaticAllocate{alpha}, cfg, us, iid_of(us), 20000, 3, opt);
    const SimTrace without = run_sim(StaticAllocate{alpha}, cfg, us, iid_of(us), 20000, 3);
    CHECK(with.backfilled > 0);
    CHECK(without.backfilled == 0);
    std::int64_t sw = 0;
    std::int64_t so = 0;
    for (int i = 0; i < 6; ++i) {
        CHECK(with.served[i] <= with.selected[i]);
        sw += with.served[i];
        so += without.served[i];
    }
    CHECK(sw > so);
}

TEST_CASE("cost summaries")
{
    const auto us = users_with({10, 10}, 20);
    CHECK(asymptotic_cost(us, std::vector<double>{0.5, 0.25}) == doctest::Approx(std::sqrt(0.5 * 0.25)));
    CHECK(asymptotic_cost(us, std::vector<double>{0.9, 0.9}) == 0.0);

    SimTrace a;
    a.epochs = 100;
    a.selected = {50, 20};
    a.served = {45, 20};
    SimTrace b = a;
    b.served = {50, 10};
    const std::vector<SimTrace> traces{a, b};
    const auto s = static_service_rates(RateVector{{Rational(1, 2), Rational(1, 5)}}, traces);
    CHECK(s[0] == doctest::Approx(0.5 - 5.0 / 200));
    CHECK(s[1] == doctest::Approx(0.2 - 10.0 / 200));

    SimTrace r1;
    r1.checkpoints = {{10, {}, 1.5, 0}, {100, {}, 1.0, 0}};
    SimTrace r2;
    r2.checkpoints = {{10, {}, 2.5, 0}, {100, {}, 1.0, 0}};
    const std::vector<SimTrace> rs{r1, r2};
    const auto reg = regret_v(rs, 1.0);
    REQUIRE(reg.size() == 2);
    CHECK(reg[0].t == 10);
    CHECK(reg[0].regret == doctest::Approx(1.0));
    CHECK(reg[0].stderr_ == doctest::Approx(0.5));
    CHECK(reg[1].regret == doctest::Approx(0.0));
}
