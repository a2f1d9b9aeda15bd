#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "graph.hpp"

namespace kcol {

using BigInt = boost::multiprecision::cpp_int;

inline std::uint64_t low_mask(int k)
{
    return k >= 64 ? ~0ULL : ((1ULL << k) - 1);
}

inline double log_big(const BigInt &x)
{
    if (x <= 0) return -std::numeric_limits<double>::infinity();
    const auto bits = boost::multiprecision::msb(x);
    if (bits < 1000) return std::log(x.convert_to<double>());
    const auto shift = bits - 60;
    BigInt top = x >> shift;
    return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

// An exact count with its logarithm.
struct Count {
    BigInt exact;
    double log() const { return log_big(exact); }
};

inline BigInt big_pow(std::uint64_t base, std::uint64_t e)
{
    BigInt r = 1, b = base;
    while (e) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

namespace detail {

// Depth-first count of proper colorings of a small graph with per-vertex
// color masks and forward checking. In symmetric mode all lists are [k] and
// colors are introduced in order of first use, each new color weighted by the
// number of colors still unused.
template <class C>
class ColorCounter {
public:
    ColorCounter(const std::vector<std::vector<int>> &adj, std::vector<std::uint64_t> lists, int k, bool sym)
        : adj_(adj), dom_(std::move(lists)), k_(k), sym_(sym), n_(static_cast<int>(adj.size())),
          colored_(n_, 0)
    {
        for (int v = 0; v < n_; ++v) uu_ += adj_[v].size();
        uu_ /= 2;
    }

    C run()
    {
        total_ = 0;
        rec(1, 0, n_);
        return total_;
    }

private:
    const std::vector<std::vector<int>> &adj_;
    std::vector<std::uint64_t> dom_;
    int k_;
    bool sym_;
    int n_;
    std::vector<char> colored_;
    std::size_t uu_ = 0;
    C total_ = 0;
    std::vector<std::pair<int, std::uint64_t>> trail_;

    int options(int v, int used) const
    {
        if (!sym_) return std::popcount(dom_[v]);
        return std::popcount(dom_[v] & low_mask(used)) + (used < k_ ? 1 : 0);
    }

    int free_colors(int v, int used) const
    {
        if (!sym_) return std::popcount(dom_[v]);
        return k_ - std::popcount(~dom_[v] & low_mask(used));
    }

    void rec(C mult, int used, int remaining)
    {
        if (remaining == 0) {
            total_ += mult;
            return;
        }
        if (uu_ == 0) {
            C prod = mult;
            for (int v = 0; v < n_; ++v)
                if (!colored_[v]) {
                    int f = free_colors(v, used);
                    if (f == 0) return;
                    prod *= static_cast<unsigned>(f);
                }
            total_ += prod;
            return;
        }
        int best = -1, bo = std::numeric_limits<int>::max(), bdeg = -1;
        for (int v = 0; v < n_; ++v) {
            if (colored_[v]) continue;
            int o = options(v, used);
            if (o == 0) return;
            int deg = 0;
            for (int w : adj_[v]) deg += !colored_[w];
            if (o < bo || (o == bo && deg > bdeg)) {
                best = v;
                bo = o;
                bdeg = deg;
            }
        }
        const int v = best;
        std::uint64_t opts = sym_ ? (dom_[v] & low_mask(used)) : dom_[v];
        colored_[v] = 1;
        std::size_t lost = 0;
        for (int w : adj_[v]) lost += !colored_[w];
        uu_ -= lost;
        auto try_color = [&](int c, C m, int nused) {
            const std::size_t mark = trail_.size();
            const std::uint64_t bit = 1ULL << c;
            bool dead = false;
            for (int w : adj_[v]) {
                if (colored_[w] || !(dom_[w] & bit)) continue;
                trail_.emplace_back(w, dom_[w]);
                dom_[w] &= ~bit;
                if (options(w, nused) == 0) dead = true;
            }
            if (!dead) rec(m, nused, remaining - 1);
            while (trail_.size() > mark) {
                dom_[trail_.back().first] = trail_.back().second;
                trail_.pop_back();
            }
        };
        while (opts) {
            int c = std::countr_zero(opts);
            opts &= opts - 1;
            try_color(c, mult, used);
        }
        if (sym_ && used < k_) {
            C m = mult;
            m *= static_cast<unsigned>(k_ - used);
            try_color(used, m, used + 1);
        }
        uu_ += lost;
        colored_[v] = 0;
    }
};

// Induced subgraph on a vertex subset, relabelled 0..|S|-1.
inline std::vector<std::vector<int>> induced_adj(const Graph &g, const std::vector<int> &verts)
{
    std::vector<int> idx(g.n, -1);
    for (std::size_t i = 0; i < verts.size(); ++i) idx[verts[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> adj(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i)
        for (int w : g.adj[verts[i]])
            if (idx[w] >= 0) adj[i].push_back(idx[w]);
    return adj;
}

inline bool fits_u64(std::size_t n, int k)
{
    return static_cast<double>(n) * std::log2(static_cast<double>(std::max(k, 2))) < 62.0;
}

template <class C>
BigInt to_big(const C &x)
{
    if constexpr (std::is_same_v<C, BigInt>) return x;
    else return BigInt(x);
}

inline BigInt count_component(const std::vector<std::vector<int>> &adj, std::vector<std::uint64_t> lists, int k,
                              bool sym)
{
    if (fits_u64(adj.size(), k))
        return BigInt(ColorCounter<std::uint64_t>(adj, std::move(lists), k, sym).run());
    return ColorCounter<BigInt>(adj, std::move(lists), k, sym).run();
}

} // namespace detail

// Exact number of proper k-colorings. Forests use the closed form
// k^(n-m) (k-1)^m; other components are enumerated if they have at most
// cap vertices, otherwise the call is refused.
inline Count count_colorings_exact(const Graph &g, int k, int cap = 25)
{
    if (k < 1 || k > 64) throw std::invalid_argument("k must be in [1,64]");
    auto [comp, nc] = components(g);
    std::vector<std::vector<int>> members(nc);
    for (int v = 0; v < g.n; ++v) members[comp[v]].push_back(v);
    std::vector<std::size_t> medges(nc, 0);
    for (auto [u, v] : g.edges) ++medges[comp[u]];
    BigInt total = 1;
    std::uint64_t tree_vertices = 0, tree_edges = 0;
    for (int c = 0; c < nc; ++c) {
        if (medges[c] + 1 == members[c].size()) {
            tree_vertices += members[c].size();
            tree_edges += medges[c];
            continue;
        }
        if (static_cast<int>(members[c].size()) > cap)
            throw std::runtime_error("count_colorings_exact: component with " + std::to_string(members[c].size()) +
                                     " vertices exceeds cap " + std::to_string(cap));
        auto adj = detail::induced_adj(g, members[c]);
        total *= detail::count_component(adj, std::vector<std::uint64_t>(adj.size(), ~0ULL), k, true);
        if (total == 0) return {0};
    }
    if (k == 1 && tree_edges > 0) return {0};
    total *= big_pow(k, tree_vertices - tree_edges) * big_pow(k - 1, tree_edges);
    return {total};
}

// Number of proper colorings with tau(v) in lists[v] (list coloring).
inline BigInt count_list_colorings(const std::vector<std::vector<int>> &adj, const std::vector<std::uint64_t> &lists,
                                   int k)
{
    return detail::count_component(adj, lists, k, false);
}

// Histogram of H_G(sigma) (monochromatic edge count) over all k^n maps.
struct PottsHistogram {
    std::vector<std::uint64_t> hist;                 // hist[h]
    std::vector<Edge> pairs;                          // all unordered pairs
    std::vector<std::vector<std::uint64_t>> equal;    // per pair: hist restricted to sigma(u)=sigma(v)
};

inline PottsHistogram potts_histogram(const Graph &g, int k, bool with_pairs, int cap = 20)
{
    if (g.n > cap) throw std::runtime_error("potts enumeration: n=" + std::to_string(g.n) + " exceeds cap " +
                                            std::to_string(cap));
    PottsHistogram ph;
    ph.hist.assign(g.m() + 1, 0);
    if (with_pairs) {
        for (int v = 1; v < g.n; ++v)
            for (int u = 0; u < v; ++u) ph.pairs.emplace_back(u, v);
        ph.equal.assign(ph.pairs.size(), std::vector<std::uint64_t>(g.m() + 1, 0));
    }
    std::vector<int> c(g.n, 0);
    std::size_t h = g.m();   // all vertices start with color 0
    auto record = [&]() {
        ++ph.hist[h];
        for (std::size_t p = 0; p < ph.pairs.size(); ++p)
            if (c[ph.pairs[p].first] == c[ph.pairs[p].second]) ++ph.equal[p][h];
    };
    auto recolor = [&](int v, int col) {
        for (int w : g.adj[v]) h -= c[w] == c[v];
        c[v] = col;
        for (int w : g.adj[v]) h += c[w] == c[v];
    };
    record();
    if (g.n == 0) return ph;
    while (true) {
        int i = 0;
        while (i < g.n && c[i] == k - 1) {
            recolor(i, 0);
            ++i;
        }
        if (i == g.n) break;
        recolor(i, c[i] + 1);
        record();
    }
    return ph;
}

inline double log_sum_exp_hist(const std::vector<std::uint64_t> &hist, double beta)
{
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < hist.size(); ++h)
        if (hist[h]) mx = std::max(mx, std::log(static_cast<double>(hist[h])) - beta * static_cast<double>(h));
    if (!std::isfinite(mx)) return mx;
    double s = 0;
    for (std::size_t h = 0; h < hist.size(); ++h)
        if (hist[h]) s += std::exp(std::log(static_cast<double>(hist[h])) - beta * static_cast<double>(h) - mx);
    return mx + std::log(s);
}

// ln sum_sigma exp(-beta H_G(sigma)) by exhaustive enumeration.
inline double potts_partition(const Graph &g, int k, double beta, int cap = 20)
{
    return log_sum_exp_hist(potts_histogram(g, k, false, cap).hist, beta);
}

// Histogram of H for G with pair p toggled (added if absent, removed if present).
inline std::vector<std::uint64_t> toggled_histogram(const Graph &g, const PottsHistogram &ph, std::size_t p)
{
    const auto [u, v] = ph.pairs[p];
    const auto &eq = ph.equal[p];
    std::vector<std::uint64_t> out(ph.hist.size() + 1, 0);
    const bool present = g.has_edge(u, v);
    for (std::size_t h = 0; h < ph.hist.size(); ++h) {
        std::uint64_t same = eq[h], diff = ph.hist[h] - eq[h];
        out[h] += diff;
        if (present) {
            if (same) out[h - 1] += same;
        } else {
            out[h + 1] += same;
        }
    }
    return out;
}

} // namespace kcol
