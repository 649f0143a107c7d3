#include <doctest.h>

#include <cmath>

#include "streamalloc/learner.hpp"
#include "streamalloc/random.hpp"

using namespace streamalloc;

namespace {

std::vector<UserProfile> grid_users(int n, std::int64_t Z)
{
    std::vector<UserProfile> us(n);
    for (int i = 0; i < n; ++i) {
        us[i].id = i;
        us[i].p = GridProb(Z / 2, Z);
        us[i].cost = power_law(0.5, us[i].p);
    }
    return us;
}

}  // namespace

TEST_CASE("exploration phases are powers of r")
{
    CHECK(is_exploration_phase(1, 2));
    CHECK(is_exploration_phase(2, 2));
    CHECK_FALSE(is_exploration_phase(3, 2));
    CHECK(is_exploration_phase(4, 2));
    CHECK_FALSE(is_exploration_phase(6, 2));
    CHECK(is_exploration_phase(1024, 2));
    CHECK(is_exploration_phase(9, 3));
    CHECK_FALSE(is_exploration_phase(6, 3));
    CHECK_THROWS_AS(is_exploration_phase(0, 2), std::invalid_argument);
}

TEST_CASE("phase plan")
{
    const PhasePlan p = PhasePlan::make(4, 2, 1, 3, 2);
    CHECK(p.block == 2);
    CHECK(p.phase_len == 8);
    CHECK(p.explore_len() == 6);
    CHECK(p.phase_of(1) == 1);
    CHECK(p.phase_of(8) == 1);
    CHECK(p.phase_of(9) == 2);
    CHECK(p.offset_of(9) == 0);
    CHECK(p.offset_of(16) == 7);
    CHECK(PhasePlan::make(5, 2, 1, 2, 2).block == 3);
    CHECK_THROWS_AS(PhasePlan::make(4, 2, 1, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(PhasePlan::make(4, 2, 1, 2, 1), std::invalid_argument);
}

TEST_CASE("minimum exploration rounds")
{
    const std::vector<GridProb> p{GridProb(9, 20), GridProb(12, 20), GridProb(15, 20), GridProb(18, 20)};
    CHECK(minimum_exploration_rounds(p, 2) == 10);  // 2 ln 2 / 0.15 = 9.24
    const std::vector<GridProb> adjacent{GridProb(9, 20), GridProb(10, 20)};
    CHECK(minimum_exploration_rounds(adjacent, 2) == 28);
    const std::vector<GridProb> same{GridProb(9, 20), GridProb(9, 20)};
    CHECK_THROWS_AS(minimum_exploration_rounds(same, 2), std::invalid_argument);
}

TEST_CASE("round-robin schedule with every channel ON")
{
    ExplorationSchedule s(4, 2, 3);
    const ChannelMatrix on(4, 2, true);
    const std::vector<std::vector<int>> expected{{0, 1}, {2, 3}, {0, 1}, {2, 3}, {0, 1}, {2, 3}};
    for (const auto& e : expected) CHECK(s.next_epoch(on) == e);
    CHECK(s.finished());
    CHECK(s.deferrals() == 0);
    CHECK(s.missing_turns() == std::vector<int>{0, 0, 0, 0});

    ExplorationSchedule single(1, 1, 2);
    const ChannelMatrix one(1, 1, true);
    CHECK(single.next_epoch(one) == std::vector<int>{0});
    CHECK(single.next_epoch(one) == std::vector<int>{0});
    CHECK(single.finished());
}

TEST_CASE("faded turns are deferred, not lost")
{
    ExplorationSchedule s(2, 1, 1);
    ChannelMatrix first(2, 1);
    first.set(1, 0, true);
    CHECK(s.next_epoch(first) == std::vector<int>{1});
    CHECK(s.deferrals() == 1);
    CHECK_FALSE(s.finished());
    CHECK(s.next_epoch(ChannelMatrix(2, 1, true)) == std::vector<int>{0});
    CHECK(s.finished());

    ExplorationSchedule dark(1, 1, 2);
    const ChannelMatrix off(1, 1, false);
    CHECK(dark.next_epoch(off).empty());
    CHECK(dark.next_epoch(off).empty());
    CHECK(dark.missing_turns() == std::vector<int>{2});
}

TEST_CASE("schedule rearranges channels to admit a later turn")
{
    // user 0 can use either channel, user 1 only channel 0
    ChannelMatrix H(2, 2);
    H.set(0, 0, true);
    H.set(0, 1, true);
    H.set(1, 0, true);
    ExplorationSchedule s(2, 2, 1);
    CHECK(s.next_epoch(H) == std::vector<int>{0, 1});
    CHECK(s.deferrals() == 0);
}

TEST_CASE("update_estimates examples")
{
    EstimatorState s = EstimatorState::initial(3, 20);
    CHECK(s.p_hat[0] == GridProb(20, 20));
    s = update_estimates(s, {{0, 0, 1, 1}, {0, 1, 1}, {}}, 20);
    CHECK(s.q == 1);
    CHECK(s.p_hat[0] == GridProb(10, 20));
    CHECK(s.p_hat[1] == GridProb(7, 20));  // 1/3 = 6.67/20
    CHECK(s.p_hat[2] == GridProb(20, 20)); // no bits yet
    s = update_estimates(s, {{0, 0, 0, 0}, {1, 1, 1}, {1}}, 20);
    CHECK(s.zero_counts == std::vector<std::int64_t>{6, 1, 0});
    CHECK(s.valid_bits == std::vector<std::int64_t>{8, 6, 1});
    CHECK(s.p_hat[0] == GridProb(15, 20));
    CHECK(s.p_hat[1] == GridProb(3, 20));  // 1/6 = 3.33/20
    CHECK(s.p_hat[2] == GridProb(0, 20));
    CHECK_THROWS_AS(update_estimates(s, {{0}}, 20), std::invalid_argument);
}

TEST_CASE("estimates concentrate on the true grid point")
{
    // 200 bits per phase, 10 phases: the rounding window is 2.25 standard deviations wide
    const int reps = 500;
    const int w = 200;
    int wrong = 0;
    Rng rng(31);
    for (int rep = 0; rep < reps; ++rep) {
        EstimatorState s = EstimatorState::initial(1, 20);
        for (int q = 0; q < 10; ++q) {
            std::vector<std::vector<std::uint8_t>> bits(1);
            for (int k = 0; k < w; ++k) bits[0].push_back(bernoulli(rng, 0.45) ? 0 : 1);
            s = update_estimates(s, bits, 20);
        }
        if (!(s.p_hat[0] == GridProb(9, 20))) ++wrong;
    }
    CHECK(static_cast<double>(wrong) / reps < 0.05);
}

TEST_CASE("iFestival feedback budget and dispatch")
{
    const int n = 4;
    const int m = 2;
    IFestival f({3, 2}, grid_users(n, 20), m);
    REQUIRE(f.plan().phase_len == 8);
    const ChannelMatrix H(n, m, true);
    Rng rng(6);
    const std::vector<std::uint8_t> grew{0, 0, 1, 1};  // users 0, 1 always consume
    for (std::int64_t t = 1; t <= 64; ++t) {
        const Allocation a = f.decide(t, H, rng);
        const std::int64_t tau = f.plan().phase_of(t);
        const bool explore = is_exploration_phase(tau, 2) && f.plan().offset_of(t) < f.plan().explore_len();
        CHECK(a.channel_user.empty() == explore);
        if (explore) CHECK(a.matched == 2);
        f.observe(t, grew);
    }
    // phases 1, 2, 4, 8 explore; each yields w bits per user
    CHECK(f.feedback_bits() == 4 * 3 * n);
    CHECK(f.estimator().q == 4);
    CHECK(f.log().size() == 4);
    CHECK(f.deferrals() == 0);
    CHECK(f.estimator().p_hat ==
          std::vector<GridProb>{GridProb(20, 20), GridProb(20, 20), GridProb(0, 20), GridProb(0, 20)});
    CHECK(f.alpha_hat().alpha == std::vector<Rational>{Rational(1), Rational(1), Rational(0), Rational(0)});
}

TEST_CASE("iFestival starts from the full-rate prior")
{
    IFestival f({2, 2}, grid_users(5, 10), 2);
    for (const auto& p : f.estimator().p_hat) CHECK(p == GridProb(10, 10));
    CHECK(f.alpha_hat().total() == Rational(2));
}
