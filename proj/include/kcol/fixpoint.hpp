#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gw.hpp"

namespace kcol {

// [(2k-1) ln k - 2, (2k-1) ln k - 1]
inline std::pair<double, double> cond_interval(int k)
{
    const double c = (2.0 * k - 1.0) * std::log(static_cast<double>(k));
    return {c - 2.0, c - 1.0};
}

struct NoFixedPoint : std::runtime_error {
    double last = 0;
    NoFixedPoint(const std::string &m, double q) : std::runtime_error(m), last(q) {}
};

// f(q) = (1 - exp(-dq/(k-1)))^{k-1}
inline double scalar_map(double d, int k, double q)
{
    const double e = std::exp(-d * q / (k - 1));
    if (e >= 1.0) return 0.0;
    return std::exp((k - 1) * std::log1p(-e));
}

struct ScalarFixedPoint {
    double q = 0;
    double residual = 0;
    std::size_t iterations = 0;
    bool below_interval = false;   // d below (2k-1) ln k - 2: uniqueness not covered
};

// Iterates f from q = 1; fails unless the limit lies in [2/3, 1].
inline ScalarFixedPoint scalar_fixed_point(double d, int k, std::size_t max_iter = 1000000)
{
    if (k < 2) throw std::invalid_argument("scalar_fixed_point: k must be >= 2");
    ScalarFixedPoint r;
    r.below_interval = d < cond_interval(k).first;
    double q = 1.0;
    for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
        const double nq = scalar_map(d, k, q);
        if (nq == q) break;
        if (std::fabs(nq - q) < 1e-17) {
            q = nq;
            break;
        }
        q = nq;
    }
    r.q = q;
    r.residual = std::fabs(q - scalar_map(d, k, q));
    if (!(q >= 2.0 / 3.0) || r.residual >= 1e-14)
        throw NoFixedPoint("no fixed point in [2/3,1] for k=" + std::to_string(k) + ", d=" + std::to_string(d) +
                               " (iteration from 1 ends at " + std::to_string(q) + ")",
                           q);
    return r;
}

// t applications of F(q)_i = (1/k) prod_{j != i} (1 - exp(-d' q_j)), from q0
// (default (1/k, ..., 1/k)).
inline std::vector<double> iterate_vector_F(double d, int k, int t, std::vector<double> q0 = {})
{
    if (q0.empty()) q0.assign(k, 1.0 / k);
    const double dp = d * k / (k - 1);
    std::vector<double> q = std::move(q0), nq(k);
    for (int s = 0; s < t; ++s) {
        for (int i = 0; i < k; ++i) {
            double lp = -std::log(static_cast<double>(k));
            for (int j = 0; j < k; ++j)
                if (j != i) {
                    const double e = std::exp(-dp * q[j]);
                    lp += e >= 1.0 ? -INFINITY : std::log1p(-e);
                }
            nq[i] = std::exp(lp);
        }
        std::swap(q, nq);
    }
    return q;
}

inline GWParams gw_params_at(double d, int k, int ell_cap = 0, bool distinct_child_color = true)
{
    return q_table(d, k, scalar_fixed_point(d, k).q, ell_cap, distinct_child_color);
}

struct SigmaValue {
    double d = 0;
    double sigma = 0;
    double stderr_ = 0;
    double free_entropy = 0;
    std::size_t n_samples = 0;
};

inline double sigma_first_terms(double d, int k)
{
    return std::log(static_cast<double>(k)) + d / 2 * std::log1p(-1.0 / k);
}

// ln k + (d/2) ln(1 - 1/k) - E[ln Z(T)/|T|]
inline SigmaValue sigma(double d, int k, std::size_t n_samples, std::uint64_t seed, unsigned threads = 1)
{
    auto est = estimate_free_entropy(gw_params_at(d, k), n_samples, seed, TreeLogZ::dp, threads);
    return {d, sigma_first_terms(d, k) - est.mean, est.stderr_, est.mean, est.n};
}

struct DcondResult {
    double d_cond = 0, ci_lo = 0, ci_hi = 0;
    bool interval_check = false;   // CI inside the theorem interval
    bool noise_limited = false;    // some midpoint had |Sigma| < 3 stderr
    std::vector<SigmaValue> evaluations;
};

struct DcondFailure : std::runtime_error {
    std::vector<SigmaValue> evaluations;
    DcondFailure(const std::string &m, std::vector<SigmaValue> ev) : std::runtime_error(m), evaluations(std::move(ev))
    {
    }
};

// Bisection on the theorem interval with common random numbers. Each bracket
// end carries a sign certified at 3 standard errors; the returned interval is
// the final bracket; d_cond interpolates the estimates inside it.
inline DcondResult find_dcond(int k, std::size_t n_samples, double tol, std::uint64_t seed, unsigned threads = 1,
                              std::function<SigmaValue(double)> eval = {})
{
    if (!eval) eval = [&](double d) { return sigma(d, k, n_samples, seed, threads); };
    auto [lo, hi] = cond_interval(k);
    DcondResult r;
    SigmaValue a = eval(lo), b = eval(hi);
    r.evaluations = {a, b};
    if (!(a.sigma > 3 * a.stderr_ && b.sigma < -3 * b.stderr_))
        throw DcondFailure("find_dcond: Sigma has no certified sign change on the interval: Sigma(" +
                               std::to_string(lo) + ")=" + std::to_string(a.sigma) + " +- " +
                               std::to_string(a.stderr_) + ", Sigma(" + std::to_string(hi) +
                               ")=" + std::to_string(b.sigma) + " +- " + std::to_string(b.stderr_),
                           r.evaluations);
    // x < [u, w] < y: x and y certified, [u, w] spans the inconclusive
    // evaluations (empty while u > w). Once a midpoint is inconclusive the
    // two certified ends are pushed towards it separately.
    double x = lo, y = hi, u = hi, w = lo;
    const int max_evals = 60;
    while (y - x >= tol && static_cast<int>(r.evaluations.size()) < max_evals) {
        double m;
        if (u > w) m = 0.5 * (x + y);
        else if (u - x >= y - w) m = 0.5 * (x + u);
        else m = 0.5 * (w + y);
        if (u <= w && std::max(u - x, y - w) < tol / 8) break;
        SigmaValue s = eval(m);
        r.evaluations.push_back(s);
        if (s.sigma > 3 * s.stderr_) x = m;
        else if (s.sigma < -3 * s.stderr_) y = m;
        else {
            r.noise_limited = true;
            u = std::min(u, m);
            w = std::max(w, m);
        }
    }
    r.ci_lo = x;
    r.ci_hi = y;
    // point estimate: root of the piecewise-linear interpolant of the
    // estimates inside the bracket (all share the same trees)
    std::vector<SigmaValue> in;
    for (const auto &e : r.evaluations)
        if (e.d >= x && e.d <= y) in.push_back(e);
    std::sort(in.begin(), in.end(), [](const SigmaValue &p, const SigmaValue &q) { return p.d < q.d; });
    r.d_cond = 0.5 * (x + y);
    double best = INFINITY;
    for (std::size_t j = 1; j < in.size(); ++j) {
        const auto &p = in[j - 1], &q = in[j];
        if ((p.sigma > 0) == (q.sigma > 0)) continue;
        const double root = p.d + (q.d - p.d) * p.sigma / (p.sigma - q.sigma);
        if (std::fabs(root - 0.5 * (x + y)) < best) {
            best = std::fabs(root - 0.5 * (x + y));
            r.d_cond = root;
        }
    }
    r.interval_check = lo <= r.ci_lo && r.ci_hi <= hi;
    return r;
}

// ---------------------------------------------------------------------------
// Population dynamics for the distributional map F_{d,k}.

struct Population {
    int k = 0;
    std::size_t N = 0;
    std::vector<double> pts;   // N x k, row-major

    const double *operator[](std::size_t j) const { return pts.data() + j * k; }
    double *operator[](std::size_t j) { return pts.data() + j * k; }

    std::vector<double> mean() const
    {
        std::vector<double> nu(k, 0.0);
        for (std::size_t j = 0; j < N; ++j)
            for (int h = 0; h < k; ++h) nu[h] += (*this)[j][h];
        for (double &x : nu) x /= static_cast<double>(N);
        return nu;
    }
};

// Z_gamma = sum_h (1 - nu(h))^gamma
inline double z_gamma(const std::vector<double> &nu, int gamma)
{
    double z = 0;
    for (double x : nu) z += std::pow(1.0 - x, gamma);
    return z;
}

inline bool is_atom(const double *mu, int k, int h, double atom_tol)
{
    // total variation distance to delta_h is 1 - mu(h)
    (void)k;
    return 1.0 - mu[h] <= atom_tol;
}

struct HardFields {
    std::vector<double> rho;               // per color
    std::vector<double> rho_by_size;       // index s: mass of rho_{i,l} summed over |l| = s, averaged over i
};

// rho_i: fraction of points within atom_tol of delta_i. rho_{i,l}: mass under
// d pi_i = k mu(i) d pi of points whose support (entries above atom_tol) is l.
inline HardFields hard_fields(const Population &pop, double atom_tol = 1e-9)
{
    const int k = pop.k;
    HardFields hf;
    hf.rho.assign(k, 0.0);
    hf.rho_by_size.assign(k + 1, 0.0);
    for (std::size_t j = 0; j < pop.N; ++j) {
        const double *mu = pop[j];
        int supp = 0;
        for (int h = 0; h < k; ++h) {
            if (is_atom(mu, k, h, atom_tol)) hf.rho[h] += 1.0;
            supp += mu[h] > atom_tol;
        }
        for (int i = 0; i < k; ++i)
            if (mu[i] > atom_tol) hf.rho_by_size[supp] += k * mu[i];
    }
    for (double &x : hf.rho) x /= static_cast<double>(pop.N);
    for (double &x : hf.rho_by_size) x /= static_cast<double>(pop.N) * k;
    return hf;
}

struct PopdynOptions {
    std::size_t proposals_per_element = 8;
    double atom_tol = 1e-9;
    bool symmetrize = true;     // random color permutation per element after resampling
};

struct SweepStats {
    double ess = 0;
    std::size_t proposals = 0;
    std::size_t zero_weight = 0;
    bool ess_warning = false;
};

class Popdyn {
public:
    Popdyn(double d, int k, std::size_t N, std::uint64_t seed, PopdynOptions opt = {})
        : d_(d), k_(k), seed_(seed), opt_(opt)
    {
        if (N < 1000) throw std::invalid_argument("popdyn: N must be at least 1000");
        const double q = scalar_fixed_point(d, k).q;
        pop_.k = k;
        pop_.N = N;
        pop_.pts.assign(N * k, 1.0 / k);
        const auto per = static_cast<std::size_t>(std::llround(N * q / k));
        std::size_t j = 0;
        for (int h = 0; h < k; ++h)
            for (std::size_t c = 0; c < per && j < N; ++c, ++j) {
                double *mu = pop_[j];
                std::fill(mu, mu + k, 0.0);
                mu[h] = 1.0;
            }
    }

    const Population &population() const { return pop_; }
    std::size_t sweeps_done() const { return sweep_; }

    SweepStats sweep()
    {
        const int k = k_;
        const std::size_t N = pop_.N, M = N * opt_.proposals_per_element;
        Rng rng = make_rng(seed_, Tag::popdyn, sweep_++);
        const auto nu = pop_.mean();
        std::vector<double> props(M * k), w(M, 0.0);
        std::uniform_int_distribution<std::size_t> pick(0, N - 1);
        std::vector<double> zg;   // Z_gamma cache
        SweepStats st;
        st.proposals = M;
        for (std::size_t p = 0; p < M; ++p) {
            const auto gamma = static_cast<int>(poisson(rng, d_));
            while (static_cast<int>(zg.size()) <= gamma) zg.push_back(z_gamma(nu, static_cast<int>(zg.size())));
            double *out = props.data() + p * k;
            std::fill(out, out + k, 1.0);
            bool alive = true;
            for (int j = 0; j < gamma; ++j) {
                const double *mu = pop_[pick(rng)];
                if (!alive) continue;   // keep the stream layout independent of the values
                bool any = false;
                for (int h = 0; h < k; ++h) {
                    out[h] *= 1.0 - mu[h];
                    any |= out[h] > 0;
                }
                alive = any;
            }
            double s = 0;
            for (int h = 0; h < k; ++h) s += out[h];
            if (!(s > 0)) {
                ++st.zero_weight;
                continue;
            }
            for (int h = 0; h < k; ++h) out[h] /= s;
            w[p] = s / zg[gamma];
        }
        // systematic resampling
        double tot = 0, tot2 = 0;
        for (double x : w) {
            tot += x;
            tot2 += x * x;
        }
        if (!(tot > 0)) throw std::runtime_error("popdyn: all proposal weights vanished");
        st.ess = tot * tot / tot2;
        st.ess_warning = st.ess < N / 10.0;
        const double step = tot / N;
        double u = uniform01(rng) * step, acc = 0;
        std::size_t p = 0;
        for (std::size_t j = 0; j < N; ++j) {
            const double target = u + j * step;
            while (p + 1 < M && acc + w[p] <= target) acc += w[p++];
            std::copy(props.begin() + p * k, props.begin() + (p + 1) * k, pop_[j]);
        }
        // the frozen fixed point is color symmetric; without this the color
        // balance of the population oscillates with growing amplitude
        if (opt_.symmetrize)
            for (std::size_t j = 0; j < N; ++j) std::shuffle(pop_[j], pop_[j] + k, rng);
        return st;
    }

private:
    double d_;
    int k_;
    std::uint64_t seed_;
    PopdynOptions opt_;
    Population pop_;
    std::size_t sweep_ = 0;
};

// Samples from the tilted measures pi_h (d pi_h = k mu(h) d pi).
class TiltedSampler {
public:
    explicit TiltedSampler(const Population &pop) : pop_(pop), cum_(pop.k)
    {
        for (int h = 0; h < pop.k; ++h) {
            cum_[h].resize(pop.N);
            double acc = 0;
            for (std::size_t j = 0; j < pop.N; ++j) {
                acc += pop[j][h];
                cum_[h][j] = acc;
            }
        }
    }
    const double *draw(int h, Rng &rng) const
    {
        const auto &c = cum_[h];
        const double u = uniform01(rng) * c.back();
        auto j = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), u) - c.begin());
        return pop_[std::min(j, pop_.N - 1)];
    }

private:
    const Population &pop_;
    std::vector<std::vector<double>> cum_;
};

struct BetheEstimate {
    double value = 0, stderr_ = 0;
    double vertex_mean = 0, edge_mean = 0;
};

// F_{d,k}(pi) by Monte Carlo: edge term -(d/2) E[ln(1 - <mu1,mu2>)] with
// mu_r ~ pi_{h_r}, h1 != h2; vertex term E ln sum_h prod (1 - mu(h)) with i
// uniform and Po(d/(k-1)) messages from each pi_{h'}, h' != i.
inline BetheEstimate bethe_on_populations(const std::vector<Population> &pops, double d, std::size_t samples,
                                          std::uint64_t seed)
{
    if (pops.empty()) throw std::invalid_argument("bethe_on_populations: no population");
    const int k = pops[0].k;
    std::vector<TiltedSampler> ts;
    for (const auto &p : pops) ts.emplace_back(p);
    Rng rng = make_rng(seed, Tag::bethe_mc);
    std::uniform_int_distribution<std::size_t> which(0, pops.size() - 1);
    std::uniform_int_distribution<int> col(0, k - 1), other(0, k - 2);
    std::vector<double> ve(samples), ee(samples), prod(k);
    for (std::size_t s = 0; s < samples; ++s) {
        const auto &T = ts[which(rng)];
        const int i = col(rng);
        std::fill(prod.begin(), prod.end(), 1.0);
        std::size_t total = 0;
        for (int h = 0; h < k; ++h) {
            if (h == i) continue;
            const auto g = poisson(rng, d / (k - 1));
            total += g;
            for (std::uint64_t j = 0; j < g; ++j) {
                const double *mu = T.draw(h, rng);
                for (int x = 0; x < k; ++x) prod[x] *= 1.0 - mu[x];
            }
        }
        double z = 0;
        for (double x : prod) z += x;
        ve[s] = total == 0 ? std::log(static_cast<double>(k)) : std::log(z);
        const auto &U = ts[which(rng)];
        const int h1 = col(rng);
        int h2 = other(rng);
        if (h2 >= h1) ++h2;
        const double *m1 = U.draw(h1, rng), *m2 = U.draw(h2, rng);
        double dot = 0;
        for (int x = 0; x < k; ++x) dot += m1[x] * m2[x];
        ee[s] = std::log1p(-dot);
    }
    auto v = mean_stderr(ve), e = mean_stderr(ee);
    BetheEstimate b;
    b.vertex_mean = v.mean;
    b.edge_mean = e.mean;
    b.value = v.mean - d / 2 * e.mean;
    b.stderr_ = std::sqrt(v.stderr_ * v.stderr_ + (d / 2) * (d / 2) * e.stderr_ * e.stderr_);
    return b;
}

// Unbiased estimate of sum_h prod_{j=1..gamma} (1 - nu(h)) with nu drawn
// from independent population snapshots (distinct snapshots per factor):
// a U-statistic over gamma-subsets of the snapshot means.
inline double z_gamma_ustat(const std::vector<std::vector<double>> &nus, int gamma)
{
    const std::size_t B = nus.size();
    if (static_cast<std::size_t>(gamma) > B) throw std::invalid_argument("z_gamma_ustat: need at least gamma snapshots");
    const int k = static_cast<int>(nus[0].size());
    double z = 0;
    for (int h = 0; h < k; ++h) {
        std::vector<double> e(gamma + 1, 0.0);   // elementary symmetric polynomials
        e[0] = 1;
        for (std::size_t b = 0; b < B; ++b) {
            const double x = 1.0 - nus[b][h];
            for (int r = std::min<int>(gamma, static_cast<int>(b) + 1); r >= 1; --r) e[r] += e[r - 1] * x;
        }
        z += e[gamma] / binom(static_cast<int>(B), gamma);
    }
    return z;
}

} // namespace kcol
