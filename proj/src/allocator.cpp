#include "streamalloc/allocator.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace streamalloc {

int SlotList::occurrences(int user) const
{
    return static_cast<int>(std::count(slots.begin(), slots.end(), user));
}

SlotPlan::SlotPlan(const RateVector& alpha, int m)
{
    if (m < 1) throw std::invalid_argument("need at least one slot");
    Rational total(0);
    for (const auto& a : alpha.alpha) {
        if (a < 0) throw std::domain_error("rates must be non-negative");
        if (a > 1) throw std::domain_error("slot filling needs every rate <= 1");
        total += a;
    }
    if (total > m) throw std::domain_error("rates exceed the number of slots");

    fills_.assign(m, {});
    int slot = 0;
    Rational room(1);
    for (std::size_t u = 0; u < alpha.alpha.size(); ++u) {
        Rational rest = alpha.alpha[u];
        while (rest > 0) {
            const Rational take = std::min(rest, room);
            fills_[slot].emplace_back(static_cast<int>(u), take);
            rest -= take;
            room -= take;
            if (room == Rational(0)) {
                ++slot;
                room = 1;
                if (slot == m && rest > 0) throw std::logic_error("slot overflow");
            }
        }
    }

    cumulative_.resize(m);
    for (int j = 0; j < m; ++j) {
        Rational acc(0);
        for (const auto& [user, mass] : fills_[j]) {
            acc += mass;
            cumulative_[j].push_back(to_double(acc));
        }
    }
}

SlotList SlotPlan::draw(Rng& rng) const
{
    SlotList out;
    out.slots.assign(fills_.size(), kVacant);
    for (std::size_t j = 0; j < fills_.size(); ++j) {
        if (fills_[j].empty()) continue;
        const double u = uniform01(rng);
        const auto& cum = cumulative_[j];
        for (std::size_t k = 0; k < cum.size(); ++k) {
            if (u < cum[k]) {
                out.slots[j] = fills_[j][k].first;
                break;
            }
        }
    }
    return out;
}

SlotList select_users(const RateVector& alpha, int m, Rng& rng)
{
    return SlotPlan(alpha, m).draw(rng);
}

std::size_t BipartiteGraph::edge_count() const
{
    std::size_t e = 0;
    for (const auto& a : adj) e += a.size();
    return e;
}

BipartiteGraph build_bipartite(const SlotList& slots, const ChannelMatrix& H)
{
    BipartiteGraph g;
    g.right = H.channels();
    for (std::size_t s = 0; s < slots.slots.size(); ++s) {
        const int user = slots.slots[s];
        if (user == kVacant) continue;
        g.left_slot.push_back(static_cast<int>(s));
        auto& row = g.adj.emplace_back();
        for (int j = 0; j < H.channels(); ++j)
            if (H.on(user, j)) row.push_back(j);
    }
    return g;
}

namespace {

class HopcroftKarp {
public:
    explicit HopcroftKarp(const BipartiteGraph& g)
        : g_(g), match_left_(g.adj.size(), kNil), match_right_(g.right, kNil), dist_(g.adj.size())
    {
    }

    void run()
    {
        while (bfs()) {
            for (std::size_t u = 0; u < g_.adj.size(); ++u)
                if (match_left_[u] == kNil) dfs(static_cast<int>(u));
        }
    }

    const std::vector<int>& match_left() const { return match_left_; }

private:
    static constexpr int kNil = -1;
    static constexpr int kInf = std::numeric_limits<int>::max();

    bool bfs()
    {
        std::queue<int> q;
        bool found = false;
        for (std::size_t u = 0; u < g_.adj.size(); ++u) {
            if (match_left_[u] == kNil) {
                dist_[u] = 0;
                q.push(static_cast<int>(u));
            } else {
                dist_[u] = kInf;
            }
        }
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int v : g_.adj[u]) {
                const int w = match_right_[v];
                if (w == kNil) {
                    found = true;
                } else if (dist_[w] == kInf) {
                    dist_[w] = dist_[u] + 1;
                    q.push(w);
                }
            }
        }
        return found;
    }

    bool dfs(int u)
    {
        for (int v : g_.adj[u]) {
            const int w = match_right_[v];
            if (w == kNil || (dist_[w] == dist_[u] + 1 && dfs(w))) {
                match_left_[u] = v;
                match_right_[v] = u;
                return true;
            }
        }
        dist_[u] = kInf;
        return false;
    }

    const BipartiteGraph& g_;
    std::vector<int> match_left_;
    std::vector<int> match_right_;
    std::vector<int> dist_;
};

}  // namespace

Matching max_matching(const BipartiteGraph& graph)
{
    HopcroftKarp hk(graph);
    hk.run();
    Matching m;
    const auto& ml = hk.match_left();
    for (std::size_t u = 0; u < ml.size(); ++u)
        if (ml[u] >= 0) m.pairs.emplace_back(graph.left_slot[u], ml[u]);
    return m;
}

Allocation allocate_channels(const SlotPlan& plan, int n, const ChannelMatrix& H, Rng& rng)
{
    Allocation out;
    out.served.assign(n, 0);
    out.selected.assign(n, 0);
    const SlotList slots = plan.draw(rng);
    for (int user : slots.slots)
        if (user != kVacant) ++out.selected[user];
    const Matching matching = max_matching(build_bipartite(slots, H));
    out.channel_user.assign(H.channels(), kVacant);
    for (const auto& [slot, channel] : matching.pairs) {
        ++out.served[slots.slots[slot]];
        out.channel_user[channel] = slots.slots[slot];
    }
    out.matched = static_cast<int>(matching.size());
    return out;
}

Allocation allocate_channels(const RateVector& alpha, const ChannelMatrix& H, Rng& rng)
{
    return allocate_channels(SlotPlan(alpha, H.channels()), H.users(), H, rng);
}

void Backfill::apply(Allocation& a, const ChannelMatrix& H)
{
    if (a.channel_user.empty()) return;
    const int n = static_cast<int>(owed_.size());
    for (int i = 0; i < n; ++i) owed_[i] += a.selected[i] - a.served[i];

    BipartiteGraph g;
    g.right = H.channels();
    for (int i = 0; i < n; ++i) {
        if (owed_[i] <= 0) continue;
        std::vector<int> free_on;
        for (int j = 0; j < H.channels(); ++j)
            if (a.channel_user[j] == kVacant && H.on(i, j)) free_on.push_back(j);
        if (free_on.empty()) continue;
        g.left_slot.push_back(i);
        g.adj.push_back(std::move(free_on));
    }
    if (g.left_slot.empty()) return;
    for (const auto& [user, channel] : max_matching(g).pairs) {
        ++a.served[user];
        a.channel_user[channel] = user;
        --owed_[user];
        ++a.matched;
        ++repaid_;
    }
}

}  // namespace streamalloc
