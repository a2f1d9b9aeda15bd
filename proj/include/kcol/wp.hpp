#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "dtree.hpp"

namespace kcol {

enum class WPVariant { planted, core };

struct WPOptions {
    WPVariant variant = WPVariant::planted;
    int threshold = 100;        // core threshold, core variant only
    bool record_history = false;
    std::size_t max_rounds = 0; // 0: 2mk + 2 for monotone runs, then cycle detection
};

// Directed edge v -> adj[v][j] has id off[v] + j.
struct DirectedEdges {
    std::vector<std::size_t> off;
    std::vector<int> head;      // target vertex
    std::vector<std::size_t> rev;

    explicit DirectedEdges(const Graph &g) : off(g.n + 1, 0)
    {
        for (int v = 0; v < g.n; ++v) off[v + 1] = off[v] + g.adj[v].size();
        head.resize(off[g.n]);
        rev.resize(off[g.n]);
        std::vector<std::size_t> cursor(g.n, 0);
        for (int v = 0; v < g.n; ++v) {
            if (!std::is_sorted(g.adj[v].begin(), g.adj[v].end()))
                throw std::logic_error("adjacency lists must be sorted");
            for (std::size_t j = 0; j < g.adj[v].size(); ++j) head[off[v] + j] = g.adj[v][j];
        }
        // adjacency is sorted, so scanning v upwards meets w's in-edges in order
        for (int v = 0; v < g.n; ++v)
            for (std::size_t j = 0; j < g.adj[v].size(); ++j) {
                const int w = g.adj[v][j];
                rev[off[v] + j] = off[w] + cursor[w]++;
            }
    }
    std::size_t size() const { return head.size(); }
};

struct WPResult {
    WPVariant variant = WPVariant::planted;
    std::vector<std::uint64_t> messages;    // final state, per directed edge
    std::vector<std::uint64_t> lists;       // union (planted) or intersection (core) over rounds
    std::vector<std::uint64_t> fixed_lists; // lists read off the final state
    std::vector<std::vector<std::uint64_t>> history; // L(., t) for t = 0..rounds, if recorded
    std::size_t rounds = 0;                 // index of the final state
    bool monotone = true;                   // every round moved in the expected direction
    bool converged = true;                  // reached a fixed point (false: ended on a cycle)
    std::size_t cycle_length = 1;
    std::optional<CoreResult> core;
};

namespace detail {

// One synchronous round; also returns L(v,t) for the input state.
inline void wp_round(const Graph &g, const DirectedEdges &de, int k, const std::vector<std::uint64_t> &cur,
                     std::vector<std::uint64_t> &nxt, std::vector<std::uint64_t> &lists)
{
    const std::uint64_t all = low_mask(k);
    for (int v = 0; v < g.n; ++v) {
        std::uint64_t once = 0, twice = 0;
        for (std::size_t j = 0; j < g.adj[v].size(); ++j) {
            const std::uint64_t m = cur[de.rev[de.off[v] + j]];
            twice |= once & m;
            once |= m;
        }
        lists[v] = all & ~once;
        for (std::size_t j = 0; j < g.adj[v].size(); ++j) {
            const std::uint64_t in_w = cur[de.rev[de.off[v] + j]];
            const std::uint64_t covered = twice | (once & ~in_w);
            const std::uint64_t missing = all & ~covered;
            std::uint64_t msg = 0;
            if (missing == 0) msg = all;
            else if (std::has_single_bit(missing)) msg = missing;
            nxt[de.off[v] + j] = msg;
        }
    }
}

inline std::uint64_t hash_state(const std::vector<std::uint64_t> &s)
{
    std::uint64_t h = 0x51ed270b27a1f3c5ULL;
    for (auto x : s) h = splitmix64(h ^ x);
    return h;
}

} // namespace detail

// Warning Propagation from the planted coloring (variant planted) or from the
// core of the planted coloring (variant core).
inline WPResult wp_run(const Graph &g, const Coloring &sigma, const WPOptions &opt = {})
{
    if (!is_proper(g, sigma)) throw std::invalid_argument("wp_run: coloring is not proper");
    const int k = sigma.k;
    const std::uint64_t all = low_mask(k);
    DirectedEdges de(g);
    WPResult r;
    r.variant = opt.variant;
    std::vector<std::uint64_t> cur(de.size(), 0), nxt(de.size(), 0), lt(g.n, 0);
    if (opt.variant == WPVariant::core) r.core = core(g, sigma, opt.threshold);
    for (int v = 0; v < g.n; ++v)
        for (std::size_t j = 0; j < g.adj[v].size(); ++j)
            if (opt.variant == WPVariant::planted || r.core->members[v])
                cur[de.off[v] + j] = 1ULL << sigma[v];
    const bool grow = opt.variant == WPVariant::core;
    r.lists.assign(g.n, grow ? all : 0);
    const std::size_t monotone_cap = opt.max_rounds ? opt.max_rounds : 2 * g.m() * k + 2;
    std::map<std::uint64_t, std::vector<std::pair<std::size_t, std::vector<std::uint64_t>>>> seen;
    std::size_t t = 0;
    while (true) {
        detail::wp_round(g, de, k, cur, nxt, lt);
        for (int v = 0; v < g.n; ++v) r.lists[v] = grow ? (r.lists[v] & lt[v]) : (r.lists[v] | lt[v]);
        if (opt.record_history) r.history.push_back(lt);
        if (nxt == cur) break;
        for (std::size_t e = 0; e < de.size() && r.monotone; ++e) {
            const bool ok = grow ? ((cur[e] & ~nxt[e]) == 0) : ((nxt[e] & ~cur[e]) == 0);
            if (!ok) r.monotone = false;
        }
        if (!r.monotone) {
            // the dynamics is finite-state: stop once a state repeats, all
            // states of the cycle having contributed their lists by then
            auto &bucket = seen[detail::hash_state(cur)];
            bucket.emplace_back(t, cur);
            const std::uint64_t hn = detail::hash_state(nxt);
            auto it = seen.find(hn);
            bool repeat = false;
            if (it != seen.end())
                for (auto &[tt, st] : it->second)
                    if (st == nxt) {
                        repeat = true;
                        r.cycle_length = t + 1 - tt;
                    }
            if (repeat) {
                r.converged = false;
                std::swap(cur, nxt);
                ++t;
                break;
            }
        } else if (t + 1 >= monotone_cap) {
            throw std::runtime_error("wp_run: monotone dynamics did not settle within the round cap");
        }
        std::swap(cur, nxt);
        ++t;
    }
    r.rounds = t;
    r.messages = cur;
    if (!r.converged) detail::wp_round(g, de, k, cur, nxt, lt);
    r.fixed_lists = lt;
    return r;
}

enum class ReduceMode { limit, round };

struct ReducedGraph {
    Graph g;
    std::vector<VertexType> type;   // (sigma(v), L(v))
    std::vector<int> comp;
    int ncomp = 0;
    int k = 0;
};

// Drops edges with disjoint lists; in round mode also every edge at a vertex
// whose list has fewer than two colors.
inline ReducedGraph reduced_graph(const Graph &g, const Coloring &sigma, const std::vector<std::uint64_t> &lists,
                                  ReduceMode mode)
{
    if (static_cast<int>(lists.size()) != g.n) throw std::invalid_argument("reduced_graph: list count mismatch");
    std::vector<Edge> keep;
    for (auto [u, v] : g.edges) {
        if (!(lists[u] & lists[v])) continue;
        if (mode == ReduceMode::round && (std::popcount(lists[u]) < 2 || std::popcount(lists[v]) < 2)) continue;
        keep.emplace_back(u, v);
    }
    ReducedGraph r;
    r.k = sigma.k;
    r.g = Graph::from_edges(g.n, std::move(keep));
    r.type.resize(g.n);
    for (int v = 0; v < g.n; ++v) r.type[v] = {sigma[v], lists[v]};
    std::tie(r.comp, r.ncomp) = components(r.g);
    return r;
}

struct LegalCount {
    double log = 0;
    std::optional<BigInt> exact;
};

// Decorated tree on one tree component, rooted at `root`.
inline DecoratedTree component_tree(const ReducedGraph &R, int root, std::vector<int> *vertex_of = nullptr)
{
    std::vector<int> verts{root}, par{-1};
    std::vector<int> idx(R.g.n, -1);
    idx[root] = 0;
    for (std::size_t q = 0; q < verts.size(); ++q) {
        const int v = verts[q];
        for (int w : R.g.adj[v])
            if (idx[w] < 0) {
                idx[w] = static_cast<int>(verts.size());
                verts.push_back(w);
                par.push_back(static_cast<int>(q));
            }
    }
    std::vector<VertexType> ty;
    ty.reserve(verts.size());
    for (int v : verts) ty.push_back(R.type[v]);
    if (vertex_of) *vertex_of = verts;
    return DecoratedTree::from_parents(R.k, std::move(par), std::move(ty));
}

// ln of the number of legal colorings (tau(v) in L(v), proper on R),
// multiplied over components.
inline LegalCount log_legal_colorings_reduced(const ReducedGraph &R, int cap = 30, bool exact = false)
{
    std::vector<std::vector<int>> members(R.ncomp);
    for (int v = 0; v < R.g.n; ++v) members[R.comp[v]].push_back(v);
    std::vector<std::size_t> medges(R.ncomp, 0);
    for (auto [u, v] : R.g.edges) ++medges[R.comp[u]];
    LegalCount out;
    if (exact) out.exact = BigInt(1);
    for (int c = 0; c < R.ncomp; ++c) {
        const auto &mem = members[c];
        if (mem.size() == 1) {
            const int s = std::popcount(R.type[mem[0]].ell);
            out.log += std::log(static_cast<double>(s));
            if (exact) *out.exact *= s;
            continue;
        }
        if (medges[c] + 1 == mem.size()) {
            DecoratedTree t = component_tree(R, mem[0]);
            out.log += dp_count(t).log_z;
            if (exact) {
                BigInt z = 0;
                for (auto &x : dp_count_exact(t)) z += x;
                *out.exact *= z;
            }
            continue;
        }
        if (static_cast<int>(mem.size()) > cap)
            throw std::runtime_error("log_legal_colorings_reduced: component " + std::to_string(c) + " has " +
                                     std::to_string(mem.size()) + " vertices and a cycle; cap is " +
                                     std::to_string(cap));
        auto adj = detail::induced_adj(R.g, mem);
        std::vector<std::uint64_t> lists;
        for (int v : mem) lists.push_back(R.type[v].ell);
        BigInt z = count_list_colorings(adj, lists, R.k);
        out.log += log_big(z);
        if (exact) *out.exact *= z;
    }
    return out;
}

} // namespace kcol
