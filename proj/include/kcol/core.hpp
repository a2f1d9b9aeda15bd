#pragma once

#include <deque>
#include <stdexcept>
#include <vector>

#include "graph.hpp"

namespace kcol {

struct CoreResult {
    std::vector<char> members;
    int threshold = 0;
    std::vector<int> peel_order;

    int size() const
    {
        int s = 0;
        for (char c : members) s += c;
        return s;
    }
};

// Largest vertex set in which every vertex keeps at least `threshold`
// neighbours of each other color inside the set. FIFO peeling.
inline CoreResult core(const Graph &g, const Coloring &sigma, int threshold = 100)
{
    if (threshold < 1) throw std::invalid_argument("core: threshold must be >= 1");
    if (!is_proper(g, sigma)) throw std::invalid_argument("core: coloring is not proper");
    const int n = g.n, k = sigma.k;
    std::vector<int> cnt(static_cast<std::size_t>(n) * k, 0);
    for (int v = 0; v < n; ++v)
        for (int w : g.adj[v]) ++cnt[static_cast<std::size_t>(v) * k + sigma[w]];
    auto violates = [&](int v) {
        for (int j = 0; j < k; ++j)
            if (j != sigma[v] && cnt[static_cast<std::size_t>(v) * k + j] < threshold) return true;
        return false;
    };
    CoreResult r;
    r.threshold = threshold;
    r.members.assign(n, 1);
    std::vector<char> queued(n, 0);
    std::deque<int> q;
    for (int v = 0; v < n; ++v)
        if (violates(v)) {
            q.push_back(v);
            queued[v] = 1;
        }
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        r.members[v] = 0;
        r.peel_order.push_back(v);
        for (int w : g.adj[v]) {
            if (!r.members[w]) continue;
            --cnt[static_cast<std::size_t>(w) * k + sigma[v]];
            if (!queued[w] && violates(w)) {
                queued[w] = 1;
                q.push_back(w);
            }
        }
    }
    return r;
}

} // namespace kcol
