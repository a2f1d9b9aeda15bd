#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace kcol {

using Edge = std::pair<int, int>;

struct Graph {
    int n = 0;
    std::vector<Edge> edges;              // u < v
    std::vector<std::vector<int>> adj;

    Graph() = default;
    explicit Graph(int n_) : n(n_), adj(n_) {}

    // Validates and normalizes; rejects loops, duplicates, out-of-range ends.
    static Graph from_edges(int n, std::vector<Edge> es)
    {
        if (n < 0) throw std::invalid_argument("negative vertex count");
        Graph g(n);
        for (auto &[u, v] : es) {
            if (u < 0 || v < 0 || u >= n || v >= n)
                throw std::invalid_argument("edge endpoint out of range");
            if (u == v) throw std::invalid_argument("self-loop");
            if (u > v) std::swap(u, v);
        }
        std::sort(es.begin(), es.end());
        if (std::adjacent_find(es.begin(), es.end()) != es.end())
            throw std::invalid_argument("duplicate edge");
        g.edges = std::move(es);
        for (auto [u, v] : g.edges) {
            g.adj[u].push_back(v);
            g.adj[v].push_back(u);
        }
        return g;
    }

    std::size_t m() const { return edges.size(); }

    bool has_edge(int u, int v) const
    {
        if (u > v) std::swap(u, v);
        return std::binary_search(edges.begin(), edges.end(), Edge{u, v});
    }
};

struct Coloring {
    int k = 0;
    std::vector<int> c;

    Coloring() = default;
    Coloring(int k_, std::vector<int> c_) : k(k_), c(std::move(c_))
    {
        if (k < 1 || k > 64) throw std::invalid_argument("k must be in [1,64]");
        for (int x : c)
            if (x < 0 || x >= k) throw std::invalid_argument("color out of range");
    }
    int n() const { return static_cast<int>(c.size()); }
    int operator[](int v) const { return c[v]; }

    std::vector<int> class_sizes() const
    {
        std::vector<int> s(k, 0);
        for (int x : c) ++s[x];
        return s;
    }
};

inline std::uint64_t pair_count(std::uint64_t n) { return n * (n - 1) / 2; }

// Pair index p = v(v-1)/2 + u for u < v.
inline Edge pair_from_index(std::uint64_t p)
{
    auto v = static_cast<std::uint64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(p))) / 2.0);
    while (v * (v - 1) / 2 > p) --v;
    while ((v + 1) * v / 2 <= p) ++v;
    return {static_cast<int>(p - v * (v - 1) / 2), static_cast<int>(v)};
}

// Floyd's algorithm: m distinct values from [0, N), sorted.
inline std::vector<std::uint64_t> floyd_sample(std::uint64_t N, std::uint64_t m, Rng &rng)
{
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(m * 2);
    std::vector<std::uint64_t> out;
    out.reserve(m);
    for (std::uint64_t j = N - m; j < N; ++j) {
        std::uniform_int_distribution<std::uint64_t> pick(0, j);
        std::uint64_t t = pick(rng);
        if (chosen.insert(t).second) out.push_back(t);
        else {
            chosen.insert(j);
            out.push_back(j);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Visit every pair (u<v) of [n] independently with probability p, using
// geometric skips.
template <class F>
void for_each_bernoulli_pair(int n, double p, Rng &rng, F &&f)
{
    if (n < 2 || p <= 0.0) return;
    if (p >= 1.0) {
        for (int v = 1; v < n; ++v)
            for (int u = 0; u < v; ++u) f(u, v);
        return;
    }
    const double lq = std::log1p(-p);
    long long v = 1, w = -1;
    while (v < n) {
        double r = uniform01(rng);
        w += 1 + static_cast<long long>(std::floor(std::log1p(-r) / lq));
        while (w >= v && v < n) {
            w -= v;
            ++v;
        }
        if (v < n) f(static_cast<int>(w), static_cast<int>(v));
    }
}

inline Graph gen_gnp(int n, double p, std::uint64_t seed)
{
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
    Rng rng = make_rng(seed, Tag::gnp);
    std::vector<Edge> es;
    for_each_bernoulli_pair(n, p, rng, [&](int u, int v) { es.emplace_back(u, v); });
    return Graph::from_edges(n, std::move(es));
}

inline Graph gen_gnm(int n, std::uint64_t m, std::uint64_t seed)
{
    const std::uint64_t N = pair_count(static_cast<std::uint64_t>(n));
    if (m > N) throw std::invalid_argument("m exceeds the number of vertex pairs");
    Rng rng = make_rng(seed, Tag::gnm);
    std::vector<Edge> es;
    es.reserve(m);
    for (auto p : floyd_sample(N, m, rng)) es.push_back(pair_from_index(p));
    return Graph::from_edges(n, std::move(es));
}

inline Coloring random_coloring(int n, int k, Rng &rng)
{
    std::uniform_int_distribution<int> col(0, k - 1);
    std::vector<int> c(n);
    for (auto &x : c) x = col(rng);
    return Coloring(k, std::move(c));
}

// G(n,p',sigma) with d' = dk/(k-1), p' = d'/n, sigma uniform.
inline std::pair<Coloring, Graph> gen_planted_p(int n, int k, double d, std::uint64_t seed)
{
    if (k < 2) throw std::invalid_argument("k must be at least 2");
    if (d < 0) throw std::invalid_argument("d must be non-negative");
    const double pp = n > 0 ? d * k / (k - 1) / n : 0.0;
    if (pp > 1.0) throw std::invalid_argument("p' = d'/n exceeds 1");
    Rng rng = make_rng(seed, Tag::planted_p);
    Coloring sigma = random_coloring(n, k, rng);
    std::vector<Edge> es;
    for_each_bernoulli_pair(n, pp, rng, [&](int u, int v) {
        if (sigma[u] != sigma[v]) es.emplace_back(u, v);
    });
    return {std::move(sigma), Graph::from_edges(n, std::move(es))};
}

// Exactly m edges, uniform over m-subsets of the bichromatic pairs of sigma.
inline Graph gen_planted_m(const Coloring &sigma, std::uint64_t m, std::uint64_t seed)
{
    const int n = sigma.n();
    std::vector<Edge> bich;
    for (int v = 1; v < n; ++v)
        for (int u = 0; u < v; ++u)
            if (sigma[u] != sigma[v]) bich.emplace_back(u, v);
    if (m > bich.size()) throw std::invalid_argument("m exceeds the number of bichromatic pairs");
    Rng rng = make_rng(seed, Tag::planted_m);
    std::vector<Edge> es;
    es.reserve(m);
    for (auto p : floyd_sample(bich.size(), m, rng)) es.push_back(bich[p]);
    return Graph::from_edges(n, std::move(es));
}

inline bool is_proper(const Graph &g, const Coloring &s)
{
    if (s.n() != g.n) return false;
    for (auto [u, v] : g.edges)
        if (s[u] == s[v]) return false;
    return true;
}

inline std::uint64_t monochrome_edges(const Graph &g, const Coloring &s)
{
    std::uint64_t h = 0;
    for (auto [u, v] : g.edges) h += s[u] == s[v];
    return h;
}

inline std::uint64_t forb(const Coloring &s)
{
    std::uint64_t f = 0;
    for (int c : s.class_sizes()) f += pair_count(static_cast<std::uint64_t>(c));
    return f;
}

inline double log_binom(double a, double b)
{
    return std::lgamma(a + 1) - std::lgamma(b + 1) - std::lgamma(a - b + 1);
}

// Probability that sigma is proper in G(n,m): C(N-Forb, m) / C(N, m).
inline double prob_proper_gnm(const Coloring &s, int n, std::uint64_t m)
{
    const std::uint64_t N = pair_count(static_cast<std::uint64_t>(n));
    if (m > N) throw std::invalid_argument("m exceeds C(n,2)");
    const std::uint64_t f = forb(s);
    if (N - f < m) return 0.0;
    // product form is exact enough and avoids lgamma cancellation for small m
    double lp = 0;
    for (std::uint64_t j = 0; j < m; ++j)
        lp += std::log(static_cast<double>(N - f - j)) - std::log(static_cast<double>(N - j));
    return std::exp(lp);
}

using Overlap = std::vector<std::vector<double>>;

inline Overlap overlap(const Coloring &s, const Coloring &t)
{
    if (s.n() != t.n() || s.k != t.k) throw std::invalid_argument("overlap: mismatched n or k");
    Overlap r(s.k, std::vector<double>(s.k, 0.0));
    const double w = s.n() > 0 ? 1.0 / s.n() : 0.0;
    for (int v = 0; v < s.n(); ++v) r[s[v]][t[v]] += w;
    return r;
}

// Connected components; returns component id per vertex and the count.
inline std::pair<std::vector<int>, int> components(const Graph &g)
{
    std::vector<int> comp(g.n, -1);
    int nc = 0;
    std::vector<int> stack;
    for (int s = 0; s < g.n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = nc;
        stack.push_back(s);
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : g.adj[v])
                if (comp[w] < 0) {
                    comp[w] = nc;
                    stack.push_back(w);
                }
        }
        ++nc;
    }
    return {comp, nc};
}

} // namespace kcol
