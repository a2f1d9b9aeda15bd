#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/binomial.hpp>

#include "dtree.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace kcol {

inline double binom(int n, int r)
{
    if (r < 0 || n < 0 || r > n) return 0.0;
    return boost::math::binomial_coefficient<double>(static_cast<unsigned>(n), static_cast<unsigned>(r));
}

struct GWParams {
    double d = 0, d_prime = 0, q = 0;
    int k = 0;
    int ell_cap = 0;
    bool distinct_child_color = true;  // child types (i',l') require i' != i
    std::vector<double> q_by_size;     // q_{i,l} for |l| = s, index s = 0..k (0 unused)
    std::vector<double> size_mass;     // k C(k-1,s-1) q_s
    double total_mass = 0;             // sum over all types
    double tail_mass = 0;              // mass of types with |l| > ell_cap

    // Number of admissible child types of list size s for a parent of list size a.
    double child_types(int a, int s) const
    {
        if (a < 2 || s < 2 || s > k) return 0.0;
        if (distinct_child_color)
            return binom(k - 1, s - 1) * (s - 1) + binom(k - 1, s) * s - binom(k - a, s) * s;
        return s * (binom(k, s) - binom(k - a, s));
    }
    // Poisson mean of the number of size-s children of a size-a parent.
    double child_rate(int a, int s) const { return d_prime * q_by_size[s] * child_types(a, s); }
};

// q_{i,l} = (1/k) exp(-x)^{|l|-1} (1 - exp(-x))^{k-|l|}, x = q d'/k.
inline GWParams q_table(double d, int k, double q, int ell_cap = 0, bool distinct_child_color = true)
{
    if (k < 2 || k > 64) throw std::invalid_argument("q_table: k must be in [2,64]");
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("q_table: q must lie in (0,1]");
    GWParams p;
    p.d = d;
    p.k = k;
    p.q = q;
    p.d_prime = d * k / (k - 1);
    p.ell_cap = ell_cap > 0 ? std::min(ell_cap, k) : std::min(k, 12);
    p.distinct_child_color = distinct_child_color;
    const double x = q * p.d_prime / k;
    const double l1 = std::log1p(-std::exp(-x));
    p.q_by_size.assign(k + 1, 0.0);
    p.size_mass.assign(k + 1, 0.0);
    for (int s = 1; s <= k; ++s) {
        p.q_by_size[s] = std::exp(-std::log(static_cast<double>(k)) - x * (s - 1) + (k - s) * l1);
        p.size_mass[s] = k * binom(k - 1, s - 1) * p.q_by_size[s];
        p.total_mass += p.size_mass[s];
        if (s > p.ell_cap) p.tail_mass += p.size_mass[s];
    }
    return p;
}

struct MeanMatrix {
    Eigen::MatrixXd m;           // rows/cols: list sizes 2..ell_cap
    double spectral_radius = 0;
};

inline MeanMatrix mean_matrix(const GWParams &p)
{
    const int dim = p.ell_cap - 1;
    MeanMatrix r;
    r.m = Eigen::MatrixXd::Zero(std::max(dim, 0), std::max(dim, 0));
    for (int a = 2; a <= p.ell_cap; ++a)
        for (int b = 2; b <= p.ell_cap; ++b) r.m(a - 2, b - 2) = p.child_rate(a, b);
    if (dim > 0) r.spectral_radius = r.m.eigenvalues().cwiseAbs().maxCoeff();
    return r;
}

// Expected total progeny; infinite when not subcritical.
inline double expected_tree_size(const GWParams &p)
{
    auto mm = mean_matrix(p);
    if (mm.spectral_radius >= 1.0) return std::numeric_limits<double>::infinity();
    const int dim = p.ell_cap - 1;
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(dim);
    Eigen::VectorXd e = (Eigen::MatrixXd::Identity(dim, dim) - mm.m).fullPivLu().solve(ones);
    double num = p.size_mass[1], den = p.size_mass[1];
    for (int s = 2; s <= p.ell_cap; ++s) {
        num += p.size_mass[s] * e(s - 2);
        den += p.size_mass[s];
    }
    return num / den;
}

struct GWRefusal : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class GWSampler {
public:
    explicit GWSampler(GWParams p, std::size_t max_vertices = 1000000)
        : p_(std::move(p)), max_vertices_(max_vertices)
    {
        radius_ = mean_matrix(p_).spectral_radius;
        if (!(radius_ < 1.0))
            throw GWRefusal("GW process is not subcritical: spectral radius " + std::to_string(radius_) +
                            " at k=" + std::to_string(p_.k) + ", d=" + std::to_string(p_.d));
        root_cdf_.assign(p_.ell_cap + 1, 0.0);
        double acc = 0, tot = 0;
        for (int s = 1; s <= p_.ell_cap; ++s) tot += p_.size_mass[s];
        for (int s = 1; s <= p_.ell_cap; ++s) {
            acc += p_.size_mass[s] / tot;
            root_cdf_[s] = acc;
        }
        rate_.assign((p_.ell_cap + 1) * (p_.ell_cap + 1), 0.0);
        for (int a = 2; a <= p_.ell_cap; ++a)
            for (int s = 2; s <= p_.ell_cap; ++s) rate_[a * (p_.ell_cap + 1) + s] = p_.child_rate(a, s);
    }

    const GWParams &params() const { return p_; }
    double spectral_radius() const { return radius_; }

    DecoratedTree sample(Rng &rng) const
    {
        const int k = p_.k, cap = p_.ell_cap;
        std::vector<int> parent{-1};
        std::vector<VertexType> type;
        // root
        double u = uniform01(rng);
        int s = 1;
        while (s < cap && u >= root_cdf_[s]) ++s;
        std::uniform_int_distribution<int> col(0, k - 1);
        const int i0 = col(rng);
        type.push_back({i0, (1ULL << i0) | random_subset(k, s - 1, i0, rng)});
        for (std::size_t q = 0; q < type.size(); ++q) {
            const VertexType pt = type[q];
            const int a = std::popcount(pt.ell);
            if (a < 2) continue;
            for (int cs = 2; cs <= cap; ++cs) {
                const double lam = rate_[a * (cap + 1) + cs];
                const auto c = poisson(rng, lam);
                for (std::uint64_t j = 0; j < c; ++j) {
                    type.push_back(child_type(pt, cs, rng));
                    parent.push_back(static_cast<int>(q));
                    if (type.size() > max_vertices_)
                        throw GWRefusal("GW tree exceeded " + std::to_string(max_vertices_) + " vertices");
                }
            }
        }
        return DecoratedTree::from_parents(k, std::move(parent), std::move(type));
    }

private:
    GWParams p_;
    std::size_t max_vertices_;
    double radius_ = 0;
    std::vector<double> root_cdf_;
    std::vector<double> rate_;

    // Uniform subset of [k] \ {excl} of the given size.
    static std::uint64_t random_subset(int k, int size, int excl, Rng &rng)
    {
        if (size <= 0) return 0;
        int pool[64], n = 0;
        for (int h = 0; h < k; ++h)
            if (h != excl) pool[n++] = h;
        std::uint64_t m = 0;
        for (int j = 0; j < size; ++j) {
            std::uniform_int_distribution<int> pick(j, n - 1);
            std::swap(pool[j], pool[pick(rng)]);
            m |= 1ULL << pool[j];
        }
        return m;
    }

    // Uniform admissible child type of list size s, by rejection.
    VertexType child_type(const VertexType &pt, int s, Rng &rng) const
    {
        const int k = p_.k;
        while (true) {
            int i;
            if (p_.distinct_child_color) {
                std::uniform_int_distribution<int> col(0, k - 2);
                i = col(rng);
                if (i >= pt.i) ++i;
            } else {
                std::uniform_int_distribution<int> col(0, k - 1);
                i = col(rng);
            }
            const std::uint64_t ell = (1ULL << i) | random_subset(k, s - 1, i, rng);
            if (ell & pt.ell) return {i, ell};
        }
    }
};

struct Estimate {
    double mean = 0;
    double stderr_ = 0;
    std::size_t n = 0;
};

inline Estimate mean_stderr(const std::vector<double> &x)
{
    Estimate e;
    e.n = x.size();
    if (x.empty()) return e;
    double s = 0;
    for (double v : x) s += v;
    e.mean = s / x.size();
    double ss = 0;
    for (double v : x) ss += (v - e.mean) * (v - e.mean);
    e.stderr_ = x.size() > 1 ? std::sqrt(ss / (x.size() - 1) / x.size()) : 0.0;
    return e;
}

enum class TreeLogZ { dp, bethe };

// Monte-Carlo mean of ln Z(T)/|T| over GW trees. Sample j uses its own
// stream, so the same seed gives common random numbers across parameters.
inline Estimate estimate_free_entropy(const GWParams &p, std::size_t n_samples, std::uint64_t seed,
                                      TreeLogZ how = TreeLogZ::dp, unsigned threads = 1)
{
    GWSampler sampler(p);
    std::vector<double> val(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t j) {
        Rng rng = make_rng(seed, Tag::gw_tree, j);
        DecoratedTree t = sampler.sample(rng);
        double lz;
        if (t.size() == 1) lz = std::log(static_cast<double>(std::popcount(t.type[0].ell)));
        else if (how == TreeLogZ::dp) lz = dp_count(t).log_z;
        else lz = bethe_free_entropy(t).total;
        val[j] = lz / t.size();
    });
    return mean_stderr(val);
}

// Probability that the GW tree is isomorphic to t as a rooted decorated tree.
inline double gw_tree_probability(const GWParams &p, const DecoratedTree &t)
{
    const int k = p.k;
    const int s0 = std::popcount(t.type[t.root].ell);
    if (s0 > k || !(t.type[t.root].ell >> t.type[t.root].i & 1)) return 0.0;
    double lp = std::log(p.q_by_size[s0]);
    for (int v = 0; v < t.size(); ++v) {
        const auto &tv = t.type[v];
        const int a = std::popcount(tv.ell);
        if (a < 2) {
            if (!t.children[v].empty()) return 0.0;
            continue;
        }
        double total = 0;
        for (int s = 2; s <= k; ++s) total += p.child_rate(a, s);
        lp -= total;
        std::vector<std::string> codes;
        canonical_code(t, v, &codes);
        for (int u : t.children[v]) {
            const auto &ct = t.type[u];
            const int s = std::popcount(ct.ell);
            const bool ok = (ct.ell >> ct.i & 1) && s >= 2 && (ct.ell & tv.ell) &&
                            (!p.distinct_child_color || ct.i != tv.i);
            if (!ok) return 0.0;
            lp += std::log(p.d_prime * p.q_by_size[s]);
        }
        // Poisson counts per type give c_t!^{-1}; isomorphic siblings add
        // back c_t! / prod m_j!, leaving prod 1/m_j! over identical subtrees
        for (std::size_t b = 0; b < codes.size();) {
            std::size_t e = b;
            while (e < codes.size() && codes[e] == codes[b]) ++e;
            lp -= std::lgamma(static_cast<double>(e - b) + 1);
            b = e;
        }
    }
    return std::exp(lp);
}

} // namespace kcol
