#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "counting.hpp"

namespace kcol {

using Simplex = std::vector<double>;

struct VertexType {
    int i = 0;
    std::uint64_t ell = 0;
};

inline bool operator==(const VertexType &a, const VertexType &b) { return a.i == b.i && a.ell == b.ell; }

// Rooted tree, vertex 0..n-1, with a type per vertex.
struct DecoratedTree {
    int k = 0;
    int root = 0;
    std::vector<int> parent;                // -1 at the root
    std::vector<VertexType> type;
    std::vector<std::vector<int>> children;

    int size() const { return static_cast<int>(parent.size()); }

    static DecoratedTree from_parents(int k, std::vector<int> parent, std::vector<VertexType> type)
    {
        DecoratedTree t;
        t.k = k;
        const int n = static_cast<int>(parent.size());
        if (static_cast<int>(type.size()) != n) throw std::invalid_argument("tree: type count mismatch");
        if (n == 0) throw std::invalid_argument("tree: empty");
        t.children.assign(n, {});
        int roots = 0;
        for (int v = 0; v < n; ++v) {
            if (parent[v] < 0) {
                t.root = v;
                ++roots;
            } else if (parent[v] >= n || parent[v] == v) {
                throw std::invalid_argument("tree: bad parent index");
            } else {
                t.children[parent[v]].push_back(v);
            }
            if (type[v].ell == 0 || (k < 64 && (type[v].ell >> k)))
                throw std::invalid_argument("tree: list must be a non-empty subset of [k]");
        }
        if (roots != 1) throw std::invalid_argument("tree: need exactly one root");
        t.parent = std::move(parent);
        t.type = std::move(type);
        if (static_cast<int>(t.preorder().size()) != n) throw std::invalid_argument("tree: not connected");
        return t;
    }

    std::vector<int> preorder() const
    {
        std::vector<int> order, stack{root};
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            order.push_back(v);
            if (order.size() > parent.size()) break;
            for (auto it = children[v].rbegin(); it != children[v].rend(); ++it) stack.push_back(*it);
        }
        return order;
    }

    // Edge admissibility: lists intersect and both have more than one color.
    // With distinct_colors, adjacent distinguished colors must also differ.
    bool admissible(bool distinct_colors = true) const
    {
        for (int v = 0; v < size(); ++v) {
            if (!(type[v].ell >> type[v].i & 1)) return false;
            if (parent[v] < 0) continue;
            const auto &a = type[v], &b = type[parent[v]];
            if (!(a.ell & b.ell)) return false;
            if (std::popcount(a.ell) < 2 || std::popcount(b.ell) < 2) return false;
            if (distinct_colors && a.i == b.i) return false;
        }
        return true;
    }
};

inline Simplex uniform_on(std::uint64_t ell, int k)
{
    Simplex u(k, 0.0);
    const double w = 1.0 / std::popcount(ell);
    for (int h = 0; h < k; ++h)
        if (ell >> h & 1) u[h] = w;
    return u;
}

// cm[h] = sum_{h' != h} mu[h'], i.e. 1 - mu[h] without cancellation.
inline Simplex complement(const Simplex &mu)
{
    const int k = static_cast<int>(mu.size());
    Simplex cm(k, 0.0);
    double pre = 0;
    for (int h = 0; h < k; ++h) {
        cm[h] = pre;
        pre += mu[h];
    }
    double suf = 0;
    for (int h = k - 1; h >= 0; --h) {
        cm[h] += suf;
        suf += mu[h];
    }
    return cm;
}

// B_ell[mu_1..mu_g](h) proportional to 1{h in ell} prod_j (1 - mu_j(h));
// uniform on ell when the normaliser vanishes or the input is empty.
inline Simplex bp_merge_restricted(std::uint64_t ell, const std::vector<Simplex> &mus, int k)
{
    if (ell == 0) throw std::invalid_argument("bp_merge_restricted: empty list");
    Simplex out(k, 0.0);
    for (int h = 0; h < k; ++h)
        if (ell >> h & 1) out[h] = 1.0;
    for (const auto &mu : mus) {
        Simplex cm = complement(mu);
        for (int h = 0; h < k; ++h) out[h] *= cm[h];
    }
    double z = 0;
    for (double x : out) z += x;
    if (!(z > 0)) return uniform_on(ell, k);
    for (double &x : out) x /= z;
    return out;
}

inline Simplex bp_merge(const std::vector<Simplex> &mus, int k)
{
    return bp_merge_restricted(low_mask(k), mus, k);
}

struct DpResult {
    double log_z = 0;              // -inf when no legal coloring exists
    Simplex marginal;              // root color distribution (empty if Z = 0)
};

// Legal colorings: tau(v) in ell_v, adjacent colors differ.
// N(v,c) = prod_children sum_{c' in ell_u, c' != c} N(u,c'), kept normalised with a log scale.
inline DpResult dp_count(const DecoratedTree &t)
{
    const int k = t.k, n = t.size();
    std::vector<Simplex> nv(n);
    std::vector<double> scale(n, 0.0);
    auto order = t.preorder();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        Simplex x(k, 0.0);
        for (int h = 0; h < k; ++h)
            if (t.type[v].ell >> h & 1) x[h] = 1.0;
        double s = 0;
        for (int u : t.children[v]) {
            if (nv[u].empty()) return {-std::numeric_limits<double>::infinity(), {}};
            Simplex cm = complement(nv[u]);
            for (int h = 0; h < k; ++h) x[h] *= cm[h];
            s += scale[u];
        }
        double z = 0;
        for (double a : x) z += a;
        if (!(z > 0)) return {-std::numeric_limits<double>::infinity(), {}};
        for (double &a : x) a /= z;
        nv[v] = std::move(x);
        scale[v] = s + std::log(z);
    }
    return {scale[t.root], nv[t.root]};
}

// Exact counts N(root, c) in big integers.
inline std::vector<BigInt> dp_count_exact(const DecoratedTree &t)
{
    const int k = t.k, n = t.size();
    std::vector<std::vector<BigInt>> N(n);
    auto order = t.preorder();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        std::vector<BigInt> x(k, 0);
        for (int h = 0; h < k; ++h)
            if (t.type[v].ell >> h & 1) x[h] = 1;
        for (int u : t.children[v]) {
            BigInt tot = 0;
            for (int h = 0; h < k; ++h) tot += N[u][h];
            for (int h = 0; h < k; ++h)
                if (x[h] != 0) x[h] *= tot - N[u][h];
        }
        N[v] = std::move(x);
    }
    return N[t.root];
}

struct BetheError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BetheResult {
    double total = 0;
    std::vector<double> per_vertex;
};

// Sum over v of F_{ell_v}(mu_1..mu_g), the mu_j being the root marginals of
// the components of T - v. Those are the tree messages mu_{u->v}.
inline BetheResult bethe_free_entropy(const DecoratedTree &t)
{
    const int k = t.k, n = t.size();
    // neighbour lists with parent first
    std::vector<std::vector<int>> nb(n);
    for (int v = 0; v < n; ++v) {
        if (t.parent[v] >= 0) nb[v].push_back(t.parent[v]);
        for (int u : t.children[v]) nb[v].push_back(u);
    }
    // in[v][j]: message from nb[v][j] to v; out[v][j]: from v to nb[v][j]
    std::vector<std::vector<Simplex>> in(n), incm(n), out(n);
    for (int v = 0; v < n; ++v) {
        in[v].resize(nb[v].size());
        incm[v].resize(nb[v].size());
        out[v].resize(nb[v].size());
    }
    auto slot = [&](int v, int u) {
        for (std::size_t j = 0; j < nb[v].size(); ++j)
            if (nb[v][j] == u) return j;
        throw std::logic_error("bethe: not a neighbour");
    };
    // leave-one-out products via prefix/suffix over the incoming complements
    auto loo = [&](int v, int upto_known) {
        const std::size_t g = nb[v].size();
        const std::uint64_t ell = t.type[v].ell;
        std::vector<Simplex> pre(g + 1, Simplex(k, 1.0)), suf(g + 1, Simplex(k, 1.0));
        for (std::size_t j = 0; j < g; ++j)
            for (int h = 0; h < k; ++h) pre[j + 1][h] = pre[j][h] * (incm[v][j].empty() ? 1.0 : incm[v][j][h]);
        for (std::size_t j = g; j-- > 0;)
            for (int h = 0; h < k; ++h) suf[j][h] = suf[j + 1][h] * (incm[v][j].empty() ? 1.0 : incm[v][j][h]);
        for (std::size_t j = 0; j < g; ++j) {
            if (upto_known >= 0 && static_cast<int>(j) != upto_known) continue;
            Simplex x(k, 0.0);
            double z = 0;
            for (int h = 0; h < k; ++h)
                if (ell >> h & 1) {
                    x[h] = pre[j][h] * suf[j + 1][h];
                    z += x[h];
                }
            if (!(z > 0)) x = uniform_on(ell, k);
            else
                for (double &a : x) a /= z;
            out[v][j] = std::move(x);
        }
    };
    auto order = t.preorder();
    // upward: message child -> parent, parent sits in slot 0 of the child
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        if (t.parent[v] < 0) continue;
        loo(v, 0);
        const int p = t.parent[v];
        const std::size_t s = slot(p, v);
        in[p][s] = out[v][0];
        incm[p][s] = complement(in[p][s]);
    }
    // downward: parent -> child
    for (int v : order) {
        loo(v, -1);
        for (std::size_t j = 0; j < nb[v].size(); ++j) {
            const int u = nb[v][j];
            if (u == t.parent[v]) continue;
            in[u][0] = out[v][j];
            incm[u][0] = complement(in[u][0]);
        }
    }
    BetheResult r;
    r.per_vertex.resize(n);
    for (int v = 0; v < n; ++v) {
        const std::uint64_t ell = t.type[v].ell;
        double sv = 0;
        for (int h = 0; h < k; ++h) {
            if (!(ell >> h & 1)) continue;
            double p = 1;
            for (const auto &cm : incm[v]) p *= cm[h];
            sv += p;
        }
        if (!(sv > 0)) throw BetheError("bethe: vertex term argument is zero at vertex " + std::to_string(v));
        double fe = 0;
        for (std::size_t j = 0; j < nb[v].size(); ++j) {
            double a = 0;
            for (int h = 0; h < k; ++h) a += out[v][j][h] * incm[v][j][h];
            if (!(a > 0)) throw BetheError("bethe: edge term argument is zero at vertex " + std::to_string(v));
            fe += std::log(a);
        }
        r.per_vertex[v] = std::log(sv) - 0.5 * fe;
        r.total += r.per_vertex[v];
    }
    return r;
}

// AHU-style canonical string of the subtree at v: equal strings iff the
// rooted decorated subtrees are isomorphic.
inline std::string canonical_code(const DecoratedTree &t, int v, std::vector<std::string> *child_codes = nullptr)
{
    std::vector<std::string> cs;
    for (int u : t.children[v]) cs.push_back(canonical_code(t, u));
    std::sort(cs.begin(), cs.end());
    std::string s = "(" + std::to_string(t.type[v].i) + ":" + std::to_string(t.type[v].ell);
    for (auto &c : cs) s += c;
    s += ")";
    if (child_codes) *child_codes = std::move(cs);
    return s;
}

} // namespace kcol
