#include "streamalloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace streamalloc {

ConsumptionProcess ConsumptionProcess::markov(GridProb p, double stickiness)
{
    if (!(stickiness >= 0.0 && stickiness < 1.0)) throw std::invalid_argument("stickiness must lie in [0, 1)");
    return {Kind::Markov2State, p, stickiness};
}

ConsumptionSource::ConsumptionSource(const ConsumptionProcess& proc, Rng& rng) : proc_(proc), p_(proc.p.to_double())
{
    if (proc_.kind == ConsumptionProcess::Kind::Markov2State) state_ = bernoulli(rng, p_);
}

int ConsumptionSource::next(Rng& rng)
{
    if (proc_.kind == ConsumptionProcess::Kind::IID) return bernoulli(rng, p_) ? 1 : 0;
    const double u = uniform01(rng);
    const double leave = state_ ? (1.0 - proc_.stickiness) * (1.0 - p_) : (1.0 - proc_.stickiness) * p_;
    if (u < leave) state_ = !state_;
    return state_ ? 1 : 0;
}

BufferStep step_buffer(std::int64_t X, std::int64_t served_frames, int F)
{
    if (X < 0 || served_frames < 0 || (F != 0 && F != 1)) throw std::invalid_argument("invalid buffer step input");
    const std::int64_t avail = X + served_frames;
    return {std::max<std::int64_t>(avail - F, 0), F == 1 && avail < 1};
}

ChannelMatrix sample_channels(const SystemConfig& config, Rng& rng)
{
    ChannelMatrix H(config.n, config.m);
    for (int i = 0; i < config.n; ++i)
        for (int j = 0; j < config.m; ++j) {
            const double h = config.h(i, j);
            H.set(i, j, h >= 1.0 || uniform01(rng) < h);
        }
    return H;
}

std::vector<double> SimTrace::pause_frequency() const
{
    std::vector<double> k(pauses.size());
    for (std::size_t i = 0; i < pauses.size(); ++i)
        k[i] = epochs > 0 ? static_cast<double>(pauses[i]) / static_cast<double>(epochs) : 0.0;
    return k;
}

double SimTrace::cost(std::span<const UserProfile> users) const
{
    const auto k = pause_frequency();
    double s = 0.0;
    for (std::size_t i = 0; i < users.size(); ++i) s += extended_cost(users[i].cost, users[i].p, k[i]);
    return s;
}

std::vector<std::int64_t> log_checkpoints(std::int64_t T)
{
    std::vector<std::int64_t> out;
    for (int k = 4;; ++k) {
        const auto t = static_cast<std::int64_t>(std::llround(std::pow(10.0, k / 2.0)));
        if (t >= T) break;
        out.push_back(t);
    }
    out.push_back(T);
    return out;
}

namespace {

class RoundRobinDriver {
public:
    RoundRobinDriver(int n, int m) : n_(n), m_(m) {}

    Allocation decide(const ChannelMatrix& H)
    {
        SlotList slots;
        for (int k = 0; k < m_; ++k) slots.slots.push_back((cursor_ + k) % n_);
        cursor_ = (cursor_ + m_) % n_;
        Allocation a;
        a.served.assign(n_, 0);
        a.selected.assign(n_, 0);
        for (int u : slots.slots) ++a.selected[u];
        const Matching mt = max_matching(build_bipartite(slots, H));
        for (const auto& [slot, channel] : mt.pairs) ++a.served[slots.slots[slot]];
        a.matched = static_cast<int>(mt.size());
        return a;
    }

private:
    int n_;
    int m_;
    int cursor_ = 0;
};

}  // namespace

SimTrace run_sim(const Policy& policy, const SystemConfig& config, std::span<const UserProfile> users,
                 std::span<const ConsumptionProcess> consumption, std::int64_t T, std::uint64_t seed,
                 const SimOptions& options)
{
    config.validate();
    if (config.b != 1) throw std::invalid_argument("the simulator supports b = 1 only");
    if (T < 1) throw std::invalid_argument("horizon must be positive");
    const int n = config.n;
    if (static_cast<int>(users.size()) != n || static_cast<int>(consumption.size()) != n)
        throw std::invalid_argument("need one user profile and one consumption process per user");

    Rng channel_rng(stream_seed(seed, 0));
    Rng select_rng(stream_seed(seed, 1));
    Rng consume_rng(stream_seed(seed, 2));

    std::vector<ConsumptionSource> sources;
    sources.reserve(n);
    for (const auto& c : consumption) sources.emplace_back(c, consume_rng);

    const bool fading = std::any_of(config.h_on.begin(), config.h_on.end(), [](double h) { return h < 1.0; });
    const ChannelMatrix all_on(n, config.m, true);

    std::optional<SlotPlan> static_plan;
    std::optional<IFestival> learner;
    std::optional<RoundRobinDriver> rr;
    if (const auto* s = std::get_if<StaticAllocate>(&policy)) {
        static_plan.emplace(s->alpha, config.m);
    } else if (const auto* f = std::get_if<IFestivalParams>(&policy)) {
        learner.emplace(*f, std::vector<UserProfile>(users.begin(), users.end()), config.m);
    } else {
        rr.emplace(n, config.m);
    }

    std::vector<std::int64_t> checkpoints = options.checkpoints.empty() ? log_checkpoints(T) : options.checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::remove_if(checkpoints.begin(), checkpoints.end(),
                                     [T](std::int64_t c) { return c < 1 || c > T; }),
                      checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    std::size_t next_cp = 0;

    SimTrace tr;
    tr.pauses.assign(n, 0);
    tr.consumed.assign(n, 0);
    tr.served.assign(n, 0);
    tr.selected.assign(n, 0);
    std::vector<std::int64_t> X(n, 0);
    std::vector<std::uint8_t> grew(n, 0);
    Backfill backfill(n);

    for (std::int64_t t = 1; t <= T; ++t) {
        ChannelMatrix sampled;
        if (fading) sampled = sample_channels(config, channel_rng);
        const ChannelMatrix& H = fading ? sampled : all_on;

        Allocation a;
        if (static_plan)
            a = allocate_channels(*static_plan, n, H, select_rng);
        else if (learner)
            a = learner->decide(t, H, select_rng);
        else
            a = rr->decide(H);
        if (options.backfill) backfill.apply(a, H);

        for (int i = 0; i < n; ++i) {
            const int F = sources[i].next(consume_rng);
            const BufferStep st = step_buffer(X[i], a.served[i], F);
            grew[i] = st.next > X[i] ? 1 : 0;
            X[i] = st.next;
            tr.pauses[i] += st.paused ? 1 : 0;
            tr.consumed[i] += F;
            tr.served[i] += a.served[i];
            tr.selected[i] += a.selected[i];
        }
        if (learner) learner->observe(t, grew);

        if (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
            Checkpoint cp;
            cp.t = t;
            cp.pauses = tr.pauses;
            for (int i = 0; i < n; ++i)
                cp.cost += extended_cost(users[i].cost, users[i].p,
                                         static_cast<double>(tr.pauses[i]) / static_cast<double>(t));
            cp.feedback_bits = learner ? learner->feedback_bits() : 0;
            tr.checkpoints.push_back(std::move(cp));
            ++next_cp;
        }
    }
    tr.epochs = T;
    tr.backfilled = backfill.repaid();
    if (learner) {
        tr.feedback_bits = learner->feedback_bits();
        tr.deferrals = learner->deferrals();
        tr.phase_log = learner->log();
    }
    return tr;
}

double asymptotic_cost(std::span<const UserProfile> users, std::span<const double> service_rates)
{
    if (service_rates.size() != users.size()) throw std::invalid_argument("one service rate per user required");
    double s = 0.0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const double kappa = std::max(users[i].p.to_double() - service_rates[i], 0.0);
        s += extended_cost(users[i].cost, users[i].p, std::min(kappa, 1.0));
    }
    return s;
}

std::vector<double> static_service_rates(const RateVector& alpha, std::span<const SimTrace> traces)
{
    const std::size_t n = alpha.alpha.size();
    std::vector<double> unmatched(n, 0.0);
    double epochs = 0.0;
    for (const auto& tr : traces) {
        if (tr.selected.size() != n) throw std::invalid_argument("trace user count differs from rate vector");
        for (std::size_t i = 0; i < n; ++i) unmatched[i] += static_cast<double>(tr.selected[i] - tr.served[i]);
        epochs += static_cast<double>(tr.epochs);
    }
    std::vector<double> rates(n);
    for (std::size_t i = 0; i < n; ++i) rates[i] = to_double(alpha.alpha[i]) - (epochs > 0 ? unmatched[i] / epochs : 0.0);
    return rates;
}

std::vector<RegretPoint> regret_v(std::span<const SimTrace> traces, double benchmark)
{
    std::vector<RegretPoint> out;
    if (traces.empty()) return out;
    const std::size_t cps = traces.front().checkpoints.size();
    for (std::size_t k = 0; k < cps; ++k) {
        double s = 0.0;
        double s2 = 0.0;
        for (const auto& tr : traces) {
            if (tr.checkpoints.size() != cps) throw std::invalid_argument("traces disagree on checkpoints");
            const double v = tr.checkpoints[k].cost - benchmark;
            s += v;
            s2 += v * v;
        }
        const double r = static_cast<double>(traces.size());
        const double mean = s / r;
        const double var = traces.size() > 1 ? std::max(s2 / r - mean * mean, 0.0) * r / (r - 1.0) : 0.0;
        out.push_back({traces.front().checkpoints[k].t, mean, std::sqrt(var / r)});
    }
    return out;
}

}  // namespace streamalloc
