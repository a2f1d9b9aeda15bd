#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "fixpoint.hpp"
#include "wp.hpp"

namespace kcol {

// Calls f(tau) for every proper k-coloring tau of g (depth first, forward checking).
template <class F>
void for_each_proper_coloring(const Graph &g, int k, F &&f)
{
    const int n = g.n;
    // vertex order: BFS from each component, so neighbours get colored early
    std::vector<int> order, seen(n, 0);
    for (int s = 0; s < n; ++s) {
        if (seen[s]) continue;
        seen[s] = 1;
        std::size_t b = order.size();
        order.push_back(s);
        for (; b < order.size(); ++b)
            for (int w : g.adj[order[b]])
                if (!seen[w]) {
                    seen[w] = 1;
                    order.push_back(w);
                }
    }
    std::vector<int> tau(n, -1);
    Coloring out(k, std::vector<int>(n, 0));
    auto rec = [&](auto &&self, int i) -> void {
        if (i == n) {
            out.c = tau;
            f(static_cast<const Coloring &>(out));
            return;
        }
        const int v = order[i];
        std::uint64_t bad = 0;
        for (int w : g.adj[v])
            if (tau[w] >= 0) bad |= 1ULL << tau[w];
        std::uint64_t opts = low_mask(k) & ~bad;
        while (opts) {
            tau[v] = std::countr_zero(opts);
            opts &= opts - 1;
            self(self, i + 1);
        }
        tau[v] = -1;
    };
    rec(rec, 0);
}

// rho_ii(sigma,tau) >= 0.51/k for all i, in exact integer arithmetic.
inline bool in_cluster(const Coloring &sigma, const Coloring &tau)
{
    const int k = sigma.k, n = sigma.n();
    std::vector<long long> diag(k, 0);
    for (int v = 0; v < n; ++v)
        if (sigma[v] == tau[v]) ++diag[sigma[v]];
    for (int i = 0; i < k; ++i)
        if (100LL * k * diag[i] < 51LL * n) return false;
    return true;
}

struct ClusterResult {
    BigInt size = 0;
    std::vector<Coloring> members_sample;
    std::vector<std::uint64_t> achieved;   // per vertex: colors taken within the cluster
    BigInt proper_total = 0;
};

inline ClusterResult cluster_brute(const Graph &g, const Coloring &sigma, int cap = 16, std::size_t keep = 100)
{
    if (g.n > cap) throw std::runtime_error("cluster_brute: n=" + std::to_string(g.n) + " exceeds cap " +
                                            std::to_string(cap));
    if (!is_proper(g, sigma)) throw std::invalid_argument("cluster_brute: coloring is not proper");
    ClusterResult r;
    r.achieved.assign(g.n, 0);
    for_each_proper_coloring(g, sigma.k, [&](const Coloring &tau) {
        ++r.proper_total;
        if (!in_cluster(sigma, tau)) return;
        ++r.size;
        if (r.members_sample.size() < keep) r.members_sample.push_back(tau);
        for (int v = 0; v < g.n; ++v) r.achieved[v] |= 1ULL << tau[v];
    });
    return r;
}

// every class within sqrt(n) of n/k
inline bool balanced(const Coloring &s)
{
    const double n = s.n(), dev = std::sqrt(n);
    for (int c : s.class_sizes())
        if (std::fabs(c - n / s.k) > dev) return false;
    return true;
}

inline double kappa(int k)
{
    return std::pow(std::log(static_cast<double>(k)), 20) / k;
}

struct Predicates {
    bool balanced = false;
    bool separable = false;
    bool kappa_vacuous = false;   // kappa >= 1: the separability bound is trivially met
    bool t3 = false;
    bool tame = false;
    BigInt cluster_balanced = 0;
    double first_moment_bound = 0;   // k^n (1-1/k)^m
};

inline Predicates predicates(const Graph &g, const Coloring &sigma, int cap = 16)
{
    if (g.n > cap) throw std::runtime_error("predicates: n exceeds enumeration cap");
    const int k = sigma.k, n = g.n;
    Predicates p;
    p.balanced = balanced(sigma);
    const double kap = kappa(k);
    p.kappa_vacuous = kap >= 1.0;
    p.separable = true;
    for_each_proper_coloring(g, k, [&](const Coloring &tau) {
        if (!in_cluster(sigma, tau) || !balanced(tau)) return;
        ++p.cluster_balanced;
        std::vector<long long> diag(k, 0);
        for (int v = 0; v < n; ++v)
            if (sigma[v] == tau[v]) ++diag[sigma[v]];
        for (int i = 0; i < k; ++i)
            if (static_cast<double>(diag[i]) / n < (1.0 - kap) / k) p.separable = false;
    });
    p.first_moment_bound = std::pow(static_cast<double>(k), n) * std::pow(1.0 - 1.0 / k, static_cast<double>(g.m()));
    p.t3 = p.cluster_balanced.convert_to<double>() <= p.first_moment_bound;
    p.tame = p.balanced && p.separable && p.t3;
    return p;
}

// ---------------------------------------------------------------------------
// Decorated-tree classes up to color permutation.

inline DecoratedTree relabel_colors(const DecoratedTree &t, const std::vector<int> &perm)
{
    std::vector<VertexType> ty(t.size());
    for (int v = 0; v < t.size(); ++v) {
        std::uint64_t ell = 0;
        for (std::uint64_t m = t.type[v].ell; m; m &= m - 1) ell |= 1ULL << perm[std::countr_zero(m)];
        ty[v] = {perm[t.type[v].i], ell};
    }
    return DecoratedTree::from_parents(t.k, t.parent, std::move(ty));
}

struct TreeClass {
    std::string key;            // minimum canonical code over relabelings of the used colors onto 0..u-1
    int used_colors = 0;
    int vertices = 0;
    double orbit_size = 0;      // number of colored isomorphism classes in the color orbit
};

inline TreeClass tree_class(const DecoratedTree &t, int max_colors = 7)
{
    std::uint64_t used = 0;
    for (auto &ty : t.type) used |= ty.ell | (1ULL << ty.i);
    const int u = std::popcount(used);
    if (u > max_colors) throw std::runtime_error("tree_class: too many colors in use");
    std::vector<int> cols;
    for (std::uint64_t m = used; m; m &= m - 1) cols.push_back(std::countr_zero(m));
    std::vector<int> img(u);
    std::iota(img.begin(), img.end(), 0);
    std::vector<std::string> codes;
    do {
        std::vector<int> perm(t.k, 0);
        for (int j = 0; j < u; ++j) perm[cols[j]] = img[j];
        codes.push_back(canonical_code(relabel_colors(t, perm), t.root));
    } while (std::next_permutation(img.begin(), img.end()));
    std::sort(codes.begin(), codes.end());
    const auto distinct = std::unique(codes.begin(), codes.end()) - codes.begin();
    TreeClass c;
    c.key = codes.front();
    c.used_colors = u;
    c.vertices = t.size();
    c.orbit_size = binom(t.k, u) * static_cast<double>(distinct);
    return c;
}

// Probability that the GW tree falls into the color orbit of t.
inline double gw_class_probability(const GWParams &p, const DecoratedTree &t)
{
    return tree_class(t).orbit_size * gw_tree_probability(p, t);
}

struct ClassStat {
    std::string key;
    int vertices = 0;
    double probability = 0;
    std::uint64_t count = 0;
    double frequency = 0;
    double sigma = 0;     // std of the frequency under the GW prediction
    double z = 0;
};

struct RoundStat {
    int t = 0;
    double empirical = 0;       // |{v : L(v,t) = {sigma(v)}}| / n
    double predicted = 0;       // sum_i (F^{t+1}(1/k,...,1/k))_i
    double sigma = 0;
    double z = 0;
};

struct TreeStatsReport {
    int n = 0, k = 0;
    double d = 0, q_star = 0;
    std::size_t edges = 0;
    double frozen_fraction = 0;   // L(v) = {sigma(v)} in the limit
    double frozen_sigma = 0, frozen_z = 0;
    std::vector<RoundStat> rounds;
    std::vector<ClassStat> classes;
    double z_threshold = 0;       // 5 sigma, Bonferroni over the queried classes
    std::uint64_t cyclic_vertices = 0;
    std::size_t wp_rounds = 0;
};

// Two-sided 5-sigma level split over m tests.
inline double bonferroni_z(std::size_t m)
{
    boost::math::normal nd;
    const double p5 = 2 * boost::math::cdf(boost::math::complement(nd, 5.0));
    return boost::math::quantile(boost::math::complement(nd, p5 / (2.0 * std::max<std::size_t>(m, 1))));
}

inline TreeStatsReport compare_tree_stats(int n, int k, double d, const std::vector<DecoratedTree> &queries,
                                          std::uint64_t seed, bool distinct_child_color = true)
{
    TreeStatsReport rep;
    rep.n = n;
    rep.k = k;
    rep.d = d;
    const GWParams p = q_table(d, k, scalar_fixed_point(d, k).q, k, distinct_child_color);
    rep.q_star = p.q;
    auto [sigma, g] = gen_planted_p(n, k, d, stream_seed(seed, Tag::stats));
    rep.edges = g.m();
    WPOptions opt;
    opt.record_history = true;
    const WPResult wp = wp_run(g, sigma, opt);
    rep.wp_rounds = wp.rounds;

    for (std::size_t t = 0; t < wp.history.size(); ++t) {
        RoundStat rs;
        rs.t = static_cast<int>(t);
        std::uint64_t fz = 0;
        for (int v = 0; v < n; ++v) fz += wp.history[t][v] == (1ULL << sigma[v]);
        rs.empirical = static_cast<double>(fz) / n;
        for (double x : iterate_vector_F(d, k, static_cast<int>(t) + 1)) rs.predicted += x;
        rs.sigma = std::sqrt(rs.predicted * (1 - rs.predicted) / n);
        rs.z = (rs.empirical - rs.predicted) / rs.sigma;
        rep.rounds.push_back(rs);
    }
    std::uint64_t fz = 0;
    for (int v = 0; v < n; ++v) fz += wp.lists[v] == (1ULL << sigma[v]);
    rep.frozen_fraction = static_cast<double>(fz) / n;
    rep.frozen_sigma = std::sqrt(p.q * (1 - p.q) / n);
    rep.frozen_z = (rep.frozen_fraction - p.q) / rep.frozen_sigma;

    // query classes
    std::map<std::string, std::size_t> idx;
    int max_size = 0;
    for (const auto &qt : queries) {
        TreeClass c = tree_class(qt);
        ClassStat cs;
        cs.key = c.key;
        cs.vertices = c.vertices;
        cs.probability = c.orbit_size * gw_tree_probability(p, qt);
        idx[c.key] = rep.classes.size();
        rep.classes.push_back(cs);
        max_size = std::max(max_size, c.vertices);
    }
    const ReducedGraph R = reduced_graph(g, sigma, wp.lists, ReduceMode::limit);
    std::vector<int> csize(R.ncomp, 0), cedges(R.ncomp, 0);
    for (int v = 0; v < n; ++v) ++csize[R.comp[v]];
    for (auto [u, v] : R.g.edges) ++cedges[R.comp[u]];
    std::map<std::string, std::string> key_cache;
    for (int v = 0; v < n; ++v) {
        const int c = R.comp[v];
        if (cedges[c] + 1 != csize[c]) {
            ++rep.cyclic_vertices;
            continue;
        }
        if (csize[c] > max_size) continue;
        DecoratedTree t = component_tree(R, v);
        const std::string code = canonical_code(t, t.root);
        auto it = key_cache.find(code);
        if (it == key_cache.end()) {
            std::uint64_t used = 0;
            for (auto &ty : t.type) used |= ty.ell | (1ULL << ty.i);
            it = key_cache.emplace(code, std::popcount(used) <= 7 ? tree_class(t).key : std::string()).first;
        }
        auto j = idx.find(it->second);
        if (j != idx.end()) ++rep.classes[j->second].count;
    }
    rep.z_threshold = bonferroni_z(rep.classes.size());
    for (auto &cs : rep.classes) {
        cs.frequency = static_cast<double>(cs.count) / n;
        // vertices of one component are counted together; inflate accordingly
        cs.sigma = std::sqrt(cs.probability * std::max(1.0 - cs.probability, 0.0) * cs.vertices / n);
        cs.z = cs.sigma > 0 ? (cs.frequency - cs.probability) / cs.sigma : 0.0;
    }
    return rep;
}

} // namespace kcol
