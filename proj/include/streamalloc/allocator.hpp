#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "streamalloc/model.hpp"
#include "streamalloc/random.hpp"

namespace streamalloc {

inline constexpr int kVacant = -1;

/// m slots, each a user index or kVacant.
struct SlotList {
    std::vector<int> slots;

    int occurrences(int user) const;
};

/// Per-epoch binary fading states h_{i,j}.
class ChannelMatrix {
public:
    ChannelMatrix() = default;
    ChannelMatrix(int n, int m, bool value = false) : n_(n), m_(m), on_(static_cast<std::size_t>(n) * m, value) {}

    int users() const { return n_; }
    int channels() const { return m_; }
    bool on(int i, int j) const { return on_[static_cast<std::size_t>(i) * m_ + j] != 0; }
    void set(int i, int j, bool v) { on_[static_cast<std::size_t>(i) * m_ + j] = v ? 1 : 0; }

private:
    int n_ = 0;
    int m_ = 0;
    std::vector<std::uint8_t> on_;
};

/// The deterministic half of slot selection: the rate mass laid out over m unit intervals
/// in user order, overflow spilling into the next slot.
class SlotPlan {
public:
    SlotPlan() = default;
    /// Throws std::domain_error if some alpha_i > 1 or the total exceeds m.
    SlotPlan(const RateVector& alpha, int m);

    int slots() const { return static_cast<int>(fills_.size()); }
    const std::vector<std::pair<int, Rational>>& fill(int slot) const { return fills_[slot]; }

    /// One categorical draw per slot; the uncovered part of a slot is the VACANT probability.
    SlotList draw(Rng& rng) const;

private:
    std::vector<std::vector<std::pair<int, Rational>>> fills_;
    std::vector<std::vector<double>> cumulative_;
};

SlotList select_users(const RateVector& alpha, int m, Rng& rng);

/// Left vertices are the non-VACANT slots, right vertices the channels.
struct BipartiteGraph {
    std::vector<int> left_slot;           // slot index of each left vertex
    std::vector<std::vector<int>> adj;    // channel indices per left vertex
    int right = 0;

    std::size_t edge_count() const;
};

BipartiteGraph build_bipartite(const SlotList& slots, const ChannelMatrix& H);

struct Matching {
    std::vector<std::pair<int, int>> pairs;  // (slot, channel)

    std::size_t size() const { return pairs.size(); }
};

/// Hopcroft-Karp maximum-cardinality matching.
Matching max_matching(const BipartiteGraph& graph);

struct Allocation {
    std::vector<int> served;        // matched channels per user
    std::vector<int> selected;      // slots drawn per user
    std::vector<int> channel_user;  // user holding each channel, kVacant if idle; empty if untracked
    int matched = 0;
};

/// Unmatched channels are left idle.
Allocation allocate_channels(const SlotPlan& plan, int n, const ChannelMatrix& H, Rng& rng);
Allocation allocate_channels(const RateVector& alpha, const ChannelMatrix& H, Rng& rng);

/// Work-conserving second pass. A user drawn into a slot but left unmatched is owed one frame;
/// channels idle after the matching are matched to owed users, at most one per user per epoch.
class Backfill {
public:
    explicit Backfill(int n) : owed_(n, 0) {}

    /// Updates `a` in place. Does nothing when the allocation does not track channel owners.
    void apply(Allocation& a, const ChannelMatrix& H);

    const std::vector<std::int64_t>& owed() const { return owed_; }
    std::int64_t repaid() const { return repaid_; }

private:
    std::vector<std::int64_t> owed_;
    std::int64_t repaid_ = 0;
};

}  // namespace streamalloc
