#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "streamalloc/allocator.hpp"
#include "streamalloc/learner.hpp"
#include "streamalloc/model.hpp"
#include "streamalloc/random.hpp"

namespace streamalloc {

/// Frame-consumption process F_i(t) with P(F = 1) = p.
struct ConsumptionProcess {
    enum class Kind { IID, Markov2State };

    Kind kind = Kind::IID;
    GridProb p;
    double stickiness = 0.0;  // lag-one autocorrelation of the Markov chain

    static ConsumptionProcess iid(GridProb p) { return {Kind::IID, p, 0.0}; }
    /// Two-state chain with P(0 -> 1) = (1 - s) p and P(1 -> 0) = (1 - s)(1 - p):
    /// stationary mean exactly p, autocorrelation s.
    static ConsumptionProcess markov(GridProb p, double stickiness);
};

/// Running state of one consumption process.
class ConsumptionSource {
public:
    ConsumptionSource(const ConsumptionProcess& proc, Rng& rng);
    int next(Rng& rng);

private:
    ConsumptionProcess proc_;
    double p_;
    bool state_ = false;
};

struct BufferStep {
    std::int64_t next = 0;
    bool paused = false;
};

/// X' = max(X + served - F, 0); a pause happens iff a frame is due and X + served < 1.
BufferStep step_buffer(std::int64_t X, std::int64_t served_frames, int F);

/// n x m independent Bernoulli(h_{i,j}) draws, constant within the epoch.
ChannelMatrix sample_channels(const SystemConfig& config, Rng& rng);

struct StaticAllocate {
    RateVector alpha;
};
struct RoundRobin {};
using Policy = std::variant<StaticAllocate, IFestivalParams, RoundRobin>;

struct Checkpoint {
    std::int64_t t = 0;
    std::vector<std::int64_t> pauses;
    double cost = 0.0;  // sum_i V_i(psi_i(t) / t)
    std::int64_t feedback_bits = 0;
};

struct SimTrace {
    std::int64_t epochs = 0;
    std::vector<std::int64_t> pauses;    // psi_i(T)
    std::vector<std::int64_t> consumed;  // epochs with F_i = 1
    std::vector<std::int64_t> served;    // frames delivered
    std::vector<std::int64_t> selected;  // slots drawn (allocation policies)
    std::vector<Checkpoint> checkpoints;
    std::int64_t feedback_bits = 0;
    int deferrals = 0;
    std::int64_t backfilled = 0;
    std::vector<PhaseLogRecord> phase_log;

    std::vector<double> pause_frequency() const;
    double cost(std::span<const UserProfile> users) const;
};

/// 10^2, 10^2.5, 10^3, ... up to and including T.
std::vector<std::int64_t> log_checkpoints(std::int64_t T);

struct SimOptions {
    std::vector<std::int64_t> checkpoints;  // empty: log_checkpoints(T)
    bool backfill = false;                  // hand idle channels to owed users (see Backfill)
};

/// Simulates T epochs of one replication. Channel, selection and consumption draws use
/// separate streams derived from `seed`, so policies can share channel and consumption paths.
SimTrace run_sim(const Policy& policy, const SystemConfig& config, std::span<const UserProfile> users,
                 std::span<const ConsumptionProcess> consumption, std::int64_t T, std::uint64_t seed,
                 const SimOptions& options = {});

/// Sum_i V_i(max(p_i - s_i, 0)) for ergodic service rates s_i (frames per epoch).
double asymptotic_cost(std::span<const UserProfile> users, std::span<const double> service_rates);

/// Service-rate estimate for StaticAllocate: alpha_i minus the observed rate of unmatched slots.
/// E[slots drawn] = alpha_i exactly, so only the rare matching failures carry sampling noise.
std::vector<double> static_service_rates(const RateVector& alpha, std::span<const SimTrace> traces);

/// Per-checkpoint mean of sum_i V_i(kappa_i(t)) minus the benchmark.
struct RegretPoint {
    std::int64_t t = 0;
    double regret = 0.0;
    double stderr_ = 0.0;
};

std::vector<RegretPoint> regret_v(std::span<const SimTrace> traces, double benchmark);

}  // namespace streamalloc
