#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "streamalloc/allocator.hpp"
#include "streamalloc/model.hpp"
#include "streamalloc/random.hpp"

namespace streamalloc {

/// Phase layout: every phase lasts (w + 1) * ceil(n b / m) epochs; in exploration phases the
/// first w * ceil(n b / m) epochs serve users round-robin and the tail carries the feedback.
struct PhasePlan {
    int w = 2;
    int r = 2;
    int block = 1;              // ceil(n b / m)
    std::int64_t phase_len = 0; // (w + 1) * block

    static PhasePlan make(int n, int m, int b, int w, int r);

    std::int64_t explore_len() const { return static_cast<std::int64_t>(w) * block; }
    /// 1-based phase index of 1-based epoch t.
    std::int64_t phase_of(std::int64_t t) const { return (t - 1) / phase_len + 1; }
    /// 0-based offset of epoch t inside its phase.
    std::int64_t offset_of(std::int64_t t) const { return (t - 1) % phase_len; }
};

/// True iff tau is r^q for some q >= 0.
bool is_exploration_phase(std::int64_t tau, int r);

/// Smallest w with w > 2 ln r / min_{i != j} |p_i - p_j|. Throws if two rates coincide.
int minimum_exploration_rounds(std::span<const GridProb> p, int r);

struct EstimatorState {
    std::vector<std::int64_t> zero_counts;
    std::vector<std::int64_t> valid_bits;  // w * q per user unless fading deferred some turns
    int q = 0;                             // completed exploration phases
    std::vector<GridProb> p_hat;

    static EstimatorState initial(int n, std::int64_t Z);
};

/// Folds one exploration phase of feedback into the estimator. bits[i] holds user i's bits
/// (1: buffer grew, 0: a frame was consumed). p_hat = nearest grid point of zeros / bits.
EstimatorState update_estimates(EstimatorState state, const std::vector<std::vector<std::uint8_t>>& bits,
                                std::int64_t Z);

/// Round-robin service of w turns per user inside one exploration window. Each epoch at most
/// m users get one ON channel each; a turn whose user finds no free ON channel is deferred.
class ExplorationSchedule {
public:
    ExplorationSchedule() = default;
    ExplorationSchedule(int n, int m, int w);

    /// Users served this epoch, in turn order.
    std::vector<int> next_epoch(const ChannelMatrix& H);

    bool finished() const { return next_turn_ >= turns_.size(); }
    int deferrals() const { return deferrals_; }
    /// Turns never served by the time the window closed.
    std::vector<int> missing_turns() const;

private:
    int n_ = 0;
    int m_ = 0;
    std::vector<int> turns_;       // user of each turn, round-major
    std::vector<std::uint8_t> done_;
    std::size_t next_turn_ = 0;    // first turn not yet served
    int deferrals_ = 0;
};

struct IFestivalParams {
    int w = 2;
    int r = 2;
};

struct PhaseLogRecord {
    std::int64_t phase = 0;
    bool exploration = false;
    std::vector<GridProb> p_hat;
    RateVector alpha_hat;
    std::int64_t cumulative_bits = 0;
};

/// Learns {p_i} from one-bit buffer feedback collected in phases 1, r, r^2, ... and plays
/// AllocateChannels with the latest ConcMin solution in between.
class IFestival {
public:
    /// `users` supply the cost families and the grid; their p values are never read.
    IFestival(IFestivalParams params, std::vector<UserProfile> users, int m);

    /// Allocation for 1-based epoch t. Epochs must be visited in order.
    Allocation decide(std::int64_t t, const ChannelMatrix& H, Rng& rng);

    /// buffer_grew[i]: whether user i's buffer increased during epoch t.
    void observe(std::int64_t t, std::span<const std::uint8_t> buffer_grew);

    const PhasePlan& plan() const { return plan_; }
    const EstimatorState& estimator() const { return est_; }
    const RateVector& alpha_hat() const { return alpha_hat_; }
    std::int64_t feedback_bits() const { return bits_received_; }
    int deferrals() const { return deferrals_; }
    const std::vector<PhaseLogRecord>& log() const { return log_; }

private:
    void replan();

    IFestivalParams params_;
    std::vector<UserProfile> users_;
    int n_;
    int m_;
    std::int64_t Z_;
    PhasePlan plan_;
    EstimatorState est_;
    RateVector alpha_hat_;
    SlotPlan slot_plan_;
    ExplorationSchedule schedule_;
    std::vector<int> served_now_;
    std::vector<std::vector<std::uint8_t>> pending_bits_;
    std::int64_t bits_received_ = 0;
    int deferrals_ = 0;
    std::vector<PhaseLogRecord> log_;
};

}  // namespace streamalloc
