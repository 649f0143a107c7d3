#pragma once

// Independent reference solvers shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "streamalloc/allocator.hpp"
#include "streamalloc/noback.hpp"

namespace oracles {

// Largest matching found by trying every injective map of left vertices onto channels.
// Needs adj.size() <= right.
inline int brute_matching(const streamalloc::BipartiteGraph& g)
{
    const int L = static_cast<int>(g.adj.size());
    std::vector<int> perm(static_cast<std::size_t>(g.right));
    std::iota(perm.begin(), perm.end(), 0);
    int best = 0;
    do {
        int size = 0;
        for (int u = 0; u < L; ++u)
            if (std::find(g.adj[u].begin(), g.adj[u].end(), perm[u]) != g.adj[u].end()) ++size;
        best = std::max(best, size);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Euclidean projection onto {0 <= x_i <= b_i, sum x <= c} by bisection on the shift.
inline std::vector<double> project_capped(const std::vector<double>& y, const std::vector<double>& b, double c)
{
    auto clipped = [&](double shift) {
        std::vector<double> x(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::clamp(y[i] - shift, 0.0, b[i]);
        return x;
    };
    auto total = [](const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0); };
    std::vector<double> x = clipped(0.0);
    if (total(x) <= c) return x;
    double lo = 0.0;
    double hi = *std::max_element(y.begin(), y.end()) + 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (total(clipped(mid)) > c)
            lo = mid;
        else
            hi = mid;
    }
    return clipped(hi);
}

// Projected subgradient descent on the expected Noback cost; best iterate's cost.
inline double noback_subgradient(const streamalloc::NobackInstance& inst, int iterations = 4000)
{
    const std::size_t n = inst.users.size();
    const double c = streamalloc::to_double(inst.capacity);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = inst.users[i].dist.hi;
    std::vector<double> x = project_capped(std::vector<double>(n, c / static_cast<double>(n)), b, c);
    double best = streamalloc::expected_cost(inst, x);
    for (int it = 1; it <= iterations; ++it) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& u = inst.users[i];
            const double grad = -u.weight * (1.0 - u.dist.cdf(x[i]));
            y[i] = x[i] - 0.5 / std::sqrt(static_cast<double>(it)) * grad;
        }
        x = project_capped(y, b, c);
        best = std::min(best, streamalloc::expected_cost(inst, x));
    }
    return best;
}

}  // namespace oracles
