#include "streamalloc/learner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "streamalloc/optimizer.hpp"

namespace streamalloc {

PhasePlan PhasePlan::make(int n, int m, int b, int w, int r)
{
    if (n < 1 || m < 1 || b < 1) throw std::invalid_argument("phase plan needs positive n, m, b");
    if (w < 1) throw std::invalid_argument("exploration rounds w must be positive");
    if (r < 2) throw std::invalid_argument("phase base r must be at least 2");
    PhasePlan p;
    p.w = w;
    p.r = r;
    p.block = (n * b + m - 1) / m;
    p.phase_len = static_cast<std::int64_t>(w + 1) * p.block;
    return p;
}

bool is_exploration_phase(std::int64_t tau, int r)
{
    if (tau < 1) throw std::invalid_argument("phase index starts at 1");
    while (tau % r == 0) tau /= r;
    return tau == 1;
}

int minimum_exploration_rounds(std::span<const GridProb> p, int r)
{
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            gap = std::min(gap, std::abs(to_double(p[i].value() - p[j].value())));
    if (!(gap > 0.0)) throw std::invalid_argument("exploration bound needs pairwise distinct rates");
    if (!std::isfinite(gap)) return 2;
    return std::max(2, static_cast<int>(std::floor(2.0 * std::log(r) / gap)) + 1);
}

EstimatorState EstimatorState::initial(int n, std::int64_t Z)
{
    EstimatorState s;
    s.zero_counts.assign(n, 0);
    s.valid_bits.assign(n, 0);
    s.p_hat.assign(n, GridProb(Z, Z));
    return s;
}

EstimatorState update_estimates(EstimatorState state, const std::vector<std::vector<std::uint8_t>>& bits,
                                std::int64_t Z)
{
    if (bits.size() != state.zero_counts.size()) throw std::invalid_argument("one bit vector per user required");
    for (std::size_t i = 0; i < bits.size(); ++i) {
        for (std::uint8_t b : bits[i])
            if (b == 0) ++state.zero_counts[i];
        state.valid_bits[i] += static_cast<std::int64_t>(bits[i].size());
    }
    ++state.q;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (state.valid_bits[i] == 0) continue;  // every turn deferred so far: keep the prior
        state.p_hat[i] = nearest_grid_point(Rational(state.zero_counts[i], state.valid_bits[i]), Z);
    }
    return state;
}

ExplorationSchedule::ExplorationSchedule(int n, int m, int w) : n_(n), m_(m)
{
    turns_.reserve(static_cast<std::size_t>(n) * w);
    for (int round = 0; round < w; ++round)
        for (int u = 0; u < n; ++u) turns_.push_back(u);
    done_.assign(turns_.size(), 0);
}

std::vector<int> ExplorationSchedule::next_epoch(const ChannelMatrix& H)
{
    std::vector<int> served;
    std::vector<int> owner(m_, -1);        // channel -> position in `served`
    std::vector<std::uint8_t> busy(n_, 0); // user already holds a channel this epoch
    std::vector<int> holds;                // position -> channel

    // Kuhn augmentation keeps earlier turns matched while trying to admit a later one
    std::vector<std::uint8_t> seen(m_);
    std::function<bool(int)> augment = [&](int pos) {
        const int user = served[pos];
        for (int j = 0; j < m_; ++j) {
            if (!H.on(user, j) || seen[j]) continue;
            seen[j] = 1;
            if (owner[j] < 0 || augment(owner[j])) {
                owner[j] = pos;
                holds[pos] = j;
                return true;
            }
        }
        return false;
    };

    for (std::size_t k = next_turn_; k < turns_.size() && static_cast<int>(served.size()) < m_; ++k) {
        if (done_[k]) continue;
        const int user = turns_[k];
        if (busy[user]) continue;
        served.push_back(user);
        holds.push_back(-1);
        std::fill(seen.begin(), seen.end(), 0);
        if (augment(static_cast<int>(served.size()) - 1)) {
            busy[user] = 1;
            done_[k] = 1;
        } else {
            served.pop_back();
            holds.pop_back();
            ++deferrals_;
        }
    }
    while (next_turn_ < turns_.size() && done_[next_turn_]) ++next_turn_;
    return served;
}

std::vector<int> ExplorationSchedule::missing_turns() const
{
    std::vector<int> missing(n_, 0);
    for (std::size_t k = 0; k < turns_.size(); ++k)
        if (!done_[k]) ++missing[turns_[k]];
    return missing;
}

IFestival::IFestival(IFestivalParams params, std::vector<UserProfile> users, int m)
    : params_(params), users_(std::move(users)), n_(static_cast<int>(users_.size())), m_(m)
{
    if (users_.empty()) throw std::invalid_argument("iFestival needs at least one user");
    Z_ = common_denominator(users_);
    plan_ = PhasePlan::make(n_, m_, 1, params_.w, params_.r);
    est_ = EstimatorState::initial(n_, Z_);
    pending_bits_.assign(n_, {});
    replan();
}

void IFestival::replan()
{
    std::vector<UserProfile> estimated = users_;
    for (int i = 0; i < n_; ++i) {
        estimated[i].p = est_.p_hat[i];
        estimated[i].cost.anchor = est_.p_hat[i];
    }
    alpha_hat_ = conc_min(estimated, Rational(m_)).rates;
    slot_plan_ = SlotPlan(alpha_hat_, m_);
}

Allocation IFestival::decide(std::int64_t t, const ChannelMatrix& H, Rng& rng)
{
    const std::int64_t tau = plan_.phase_of(t);
    const std::int64_t off = plan_.offset_of(t);
    served_now_.clear();
    if (is_exploration_phase(tau, params_.r) && off < plan_.explore_len()) {
        if (off == 0) {
            schedule_ = ExplorationSchedule(n_, m_, params_.w);
            for (auto& b : pending_bits_) b.clear();
        }
        Allocation a;
        a.served.assign(n_, 0);
        a.selected.assign(n_, 0);
        served_now_ = schedule_.next_epoch(H);
        for (int u : served_now_) {
            a.served[u] = 1;
            a.selected[u] = 1;
        }
        a.matched = static_cast<int>(served_now_.size());
        return a;
    }
    return allocate_channels(slot_plan_, n_, H, rng);
}

void IFestival::observe(std::int64_t t, std::span<const std::uint8_t> buffer_grew)
{
    for (int u : served_now_) pending_bits_[u].push_back(buffer_grew[u]);
    const std::int64_t tau = plan_.phase_of(t);
    if (!is_exploration_phase(tau, params_.r) || plan_.offset_of(t) != plan_.phase_len - 1) return;

    deferrals_ += schedule_.deferrals();
    for (const auto& b : pending_bits_) bits_received_ += static_cast<std::int64_t>(b.size());
    est_ = update_estimates(std::move(est_), pending_bits_, Z_);
    for (auto& b : pending_bits_) b.clear();
    replan();
    log_.push_back({tau, true, est_.p_hat, alpha_hat_, bits_received_});
}

}  // namespace streamalloc
