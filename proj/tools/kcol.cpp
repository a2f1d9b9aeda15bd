// kcol: command-line front end.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "checks.hpp"
#include "kcol/kcol.hpp"

using namespace kcol;
using json = nlohmann::ordered_json;

namespace {

constexpr const char *version = "0.1.0";

struct Common {
    std::uint64_t seed = 1;
    unsigned threads = default_threads();
    std::string format = "json";
    std::string out;
};

// nlohmann prints the shortest round-trip form; artifacts use %.17g
void dump(std::ostream &os, const json &j, int indent = 0)
{
    const std::string pad(indent + 2, ' '), end(indent, ' ');
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            break;
        }
        os << "{\n";
        std::size_t n = 0;
        for (auto it = j.begin(); it != j.end(); ++it) {
            os << pad << json(it.key()).dump() << ": ";
            dump(os, it.value(), indent + 2);
            os << (++n < j.size() ? ",\n" : "\n");
        }
        os << end << '}';
        break;
    }
    case json::value_t::array: {
        bool flat = true;
        for (auto &e : j) flat &= !e.is_structured();
        os << '[';
        std::size_t n = 0;
        for (auto &e : j) {
            if (!flat) os << '\n' << pad;
            dump(os, e, indent + 2);
            if (++n < j.size()) os << (flat ? ", " : ",");
        }
        if (!flat && !j.empty()) os << '\n' << end;
        os << ']';
        break;
    }
    case json::value_t::number_float: {
        const double x = j.get<double>();
        if (std::isfinite(x)) os << fmt17(x);
        else os << "null";
        break;
    }
    default:
        os << j.dump();
    }
}

json stamp(const std::string &command, const json &config, const Common &c)
{
    json s;
    s["tool"] = "kcol";
    s["version"] = version;
    s["command"] = command;
    s["seed"] = c.seed;
    s["config"] = config;
    return s;
}

void emit_json(const Common &c, const std::string &command, const json &config, const json &result)
{
    json doc = stamp(command, config, c);
    doc["result"] = result;
    std::ostringstream os;
    dump(os, doc);
    os << '\n';
    if (c.out.empty()) std::cout << os.str();
    else std::ofstream(c.out) << os.str();
}

void emit_csv(const Common &c, const std::string &command, const json &config, const std::vector<std::string> &head,
              const std::vector<std::vector<double>> &rows)
{
    std::ostringstream os;
    os << "# kcol " << version << " command=" << command << " seed=" << c.seed << " config=" << config.dump() << '\n';
    for (std::size_t j = 0; j < head.size(); ++j) os << head[j] << (j + 1 < head.size() ? ',' : '\n');
    for (auto &r : rows)
        for (std::size_t j = 0; j < r.size(); ++j) os << fmt17(r[j]) << (j + 1 < r.size() ? ',' : '\n');
    if (c.out.empty()) std::cout << os.str();
    else std::ofstream(c.out) << os.str();
}

json mask_list(std::uint64_t m)
{
    json a = json::array();
    for (; m; m &= m - 1) a.push_back(std::countr_zero(m));
    return a;
}

std::pair<Graph, Coloring> load_instance(const std::string &gpath, const std::string &cpath)
{
    int k = 0;
    Graph g = with_file<Graph>(gpath, [&](std::istream &in) { return read_graph(in, &k); });
    Coloring s = with_file<Coloring>(cpath, [&](std::istream &in) { return read_coloring(in, k, g.n); });
    return {std::move(g), std::move(s)};
}

void write_text(const std::string &path, const std::function<void(std::ostream &)> &f)
{
    std::ofstream o(path);
    if (!o) throw std::runtime_error("cannot write " + path);
    f(o);
}

json sigma_json(const SigmaValue &v)
{
    return {{"d", v.d}, {"sigma", v.sigma}, {"stderr", v.stderr_}, {"free_entropy", v.free_entropy},
            {"samples", v.n_samples}};
}

std::string require_format(const Common &c, std::initializer_list<const char *> ok)
{
    for (auto f : ok)
        if (c.format == f) return c.format;
    throw CLI::ValidationError("--format", "unsupported format '" + c.format + "' for this command");
}

int selftest(const Common &c)
{
    checks::Ctx ctx;
    ctx.seed = c.seed;
    ctx.threads = c.threads;
    bool ok = true;
    auto show = [&](const checks::Check &ch) {
        std::printf("[%s] %s\n", ch.pass ? "PASS" : "FAIL", ch.id.c_str());
        std::istringstream in(ch.detail);
        for (std::string line; std::getline(in, line);) std::printf("    %s\n", line.c_str());
        ok &= ch.pass;
    };
    show(checks::golden_check(checks::goldens()));
    for (int n : {2, 3, 9, 13}) show(checks::criteria().at(n)(ctx));
    show(checks::c12(ctx, 200000));
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"k-colorings of random graphs: planted instances, warning propagation, GW trees, condensation"};
    app.require_subcommand(1);
    app.fallthrough();   // global options may follow the subcommand; inherited by subcommands
    app.set_version_flag("--version", version);
    Common c;
    if (const char *env = std::getenv("KCOL_SEED")) c.seed = std::strtoull(env, nullptr, 10);
    app.add_option("--seed", c.seed, "master seed (default: $KCOL_SEED or 1)");
    app.add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--out", c.out, "output file (default stdout)");

    std::function<int()> run;

    // gen
    auto *gen = app.add_subcommand("gen", "generate graphs");
    gen->require_subcommand(1);
    int n = 0, k = 3, threshold = 100, points = 21, t_rounds = 10;
    double d = 0, p = 0, tol = 0.01, d_lo = NAN, d_hi = NAN;
    std::uint64_t m = 0;
    std::size_t samples = 100000, N = 100000, sweeps = 30;
    std::string graph_out, coloring_out, graph_in, coloring_in, trees_out, classes_in, variant = "planted";
    bool history = false;
    {
        auto *s = gen->add_subcommand("gnp", "G(n,p)");
        s->add_option("--n", n)->required();
        s->add_option("--p", p)->required();
        s->add_option("--graph-out", graph_out)->required();
        s->callback([&] {
            run = [&] {
                Graph g = gen_gnp(n, p, c.seed);
                write_text(graph_out, [&](std::ostream &o) { write_graph(o, g, k); });
                emit_json(c, "gen gnp", {{"n", n}, {"p", p}, {"graph_out", graph_out}}, {{"m", g.m()}});
                return 0;
            };
        });
        auto *u = gen->add_subcommand("gnm", "G(n,m)");
        u->add_option("--n", n)->required();
        u->add_option("--m", m)->required();
        u->add_option("--graph-out", graph_out)->required();
        u->callback([&] {
            run = [&] {
                Graph g = gen_gnm(n, m, c.seed);
                write_text(graph_out, [&](std::ostream &o) { write_graph(o, g, k); });
                emit_json(c, "gen gnm", {{"n", n}, {"m", m}, {"graph_out", graph_out}}, {{"m", g.m()}});
                return 0;
            };
        });
        auto *v = gen->add_subcommand("planted", "planted G(n,p',sigma) with mean degree d, or G(n,m,sigma) with --m");
        v->add_option("--n", n)->required();
        v->add_option("--k", k)->required();
        v->add_option("--d", d, "mean degree");
        v->add_option("--m", m, "edge count (planted G(n,m) with a uniform coloring)");
        v->add_option("--graph-out", graph_out)->required();
        v->add_option("--coloring-out", coloring_out)->required();
        v->callback([&] {
            run = [&] {
                Coloring s;
                Graph g;
                if (m > 0) {
                    Rng rng = make_rng(c.seed, Tag::planted_m, 1);
                    s = random_coloring(n, k, rng);
                    g = gen_planted_m(s, m, c.seed);
                } else {
                    std::tie(s, g) = gen_planted_p(n, k, d, c.seed);
                }
                write_text(graph_out, [&](std::ostream &o) { write_graph(o, g, k); });
                write_text(coloring_out, [&](std::ostream &o) { write_coloring(o, s); });
                emit_json(c, "gen planted",
                          {{"n", n}, {"k", k}, {"d", d}, {"m", m}, {"graph_out", graph_out}, {"coloring_out", coloring_out}},
                          {{"m", g.m()}, {"class_sizes", s.class_sizes()}});
                return 0;
            };
        });
    }

    // core
    {
        auto *s = app.add_subcommand("core", "core of a planted coloring");
        s->add_option("--graph", graph_in)->required();
        s->add_option("--coloring", coloring_in)->required();
        s->add_option("--threshold", threshold);
        s->callback([&] {
            run = [&] {
                auto [g, sigma] = load_instance(graph_in, coloring_in);
                auto r = core(g, sigma, threshold);
                json mem = json::array();
                for (int v = 0; v < g.n; ++v)
                    if (r.members[v]) mem.push_back(v);
                emit_json(c, "core", {{"graph", graph_in}, {"coloring", coloring_in}, {"threshold", threshold}},
                          {{"size", mem.size()}, {"members", mem}});
                return 0;
            };
        });
    }

    // wp
    {
        auto *w = app.add_subcommand("wp", "Warning Propagation");
        w->require_subcommand(1);
        auto *s = w->add_subcommand("run", "run WP and count legal colorings of the reduced graph");
        s->add_option("--graph", graph_in)->required();
        s->add_option("--coloring", coloring_in)->required();
        s->add_option("--variant", variant)->check(CLI::IsMember({"planted", "core"}));
        s->add_option("--threshold", threshold, "core threshold (core variant)");
        s->add_flag("--history", history, "include L(v,t) for every round");
        s->callback([&] {
            run = [&] {
                auto [g, sigma] = load_instance(graph_in, coloring_in);
                WPOptions o;
                o.variant = variant == "core" ? WPVariant::core : WPVariant::planted;
                o.threshold = threshold;
                o.record_history = history;
                auto r = wp_run(g, sigma, o);
                json lists = json::array();
                for (auto l : r.lists) lists.push_back(mask_list(l));
                json res{{"rounds", r.rounds}, {"monotone", r.monotone}, {"converged", r.converged},
                         {"cycle_length", r.cycle_length}, {"lists", lists}};
                if (r.core) res["core_size"] = std::count(r.core->members.begin(), r.core->members.end(), 1);
                if (history) {
                    json h = json::array();
                    for (auto &lt : r.history) {
                        json row = json::array();
                        for (auto l : lt) row.push_back(mask_list(l));
                        h.push_back(row);
                    }
                    res["history"] = h;
                }
                auto R = reduced_graph(g, sigma, r.lists, ReduceMode::limit);
                json red{{"edges", R.g.m()}, {"components", R.ncomp}};
                try {
                    auto lc = log_legal_colorings_reduced(R, 30, g.n <= 64);
                    red["log_legal_colorings"] = lc.log;
                    if (lc.exact) red["legal_colorings"] = lc.exact->str();
                } catch (const std::exception &e) {
                    red["refused"] = e.what();
                }
                res["reduced"] = red;
                emit_json(c, "wp run",
                          {{"graph", graph_in}, {"coloring", coloring_in}, {"variant", variant}, {"threshold", threshold}},
                          res);
                return 0;
            };
        });
    }

    // gw
    {
        auto *g = app.add_subcommand("gw", "Galton-Watson decorated trees");
        g->require_subcommand(1);
        auto *s = g->add_subcommand("sample", "sample GW trees");
        s->add_option("--k", k)->required();
        s->add_option("--d", d)->required();
        s->add_option("--samples", samples);
        s->add_option("--trees-out", trees_out, "write the trees in text form");
        s->callback([&] {
            run = [&] {
                GWSampler sampler(gw_params_at(d, k));
                std::ofstream to;
                if (!trees_out.empty()) to.open(trees_out);
                std::vector<double> sizes(samples), lz(samples);
                for (std::size_t j = 0; j < samples; ++j) {
                    Rng rng = make_rng(c.seed, Tag::gw_tree, j);
                    auto t = sampler.sample(rng);
                    sizes[j] = t.size();
                    lz[j] = dp_count(t).log_z / t.size();
                    if (to) write_tree(to, t);
                }
                auto es = mean_stderr(sizes), el = mean_stderr(lz);
                emit_json(c, "gw sample", {{"k", k}, {"d", d}, {"samples", samples}, {"trees_out", trees_out}},
                          {{"q_star", sampler.params().q},
                           {"spectral_radius", sampler.spectral_radius()},
                           {"mean_size", es.mean},
                           {"mean_size_stderr", es.stderr_},
                           {"free_entropy", el.mean},
                           {"free_entropy_stderr", el.stderr_}});
                return 0;
            };
        });
        auto *u = g->add_subcommand("subcrit", "spectral radius of the lumped mean matrix over the interval");
        u->add_option("--k", k)->required();
        u->add_option("--points", points);
        u->callback([&] {
            run = [&] {
                auto [lo, hi] = cond_interval(k);
                std::vector<std::vector<double>> rows;
                for (double x : checks::grid(lo, hi, points)) {
                    auto pr = gw_params_at(x, k);
                    rows.push_back({x, pr.q, mean_matrix(pr).spectral_radius, expected_tree_size(pr)});
                }
                json cfg{{"k", k}, {"points", points}};
                if (require_format(c, {"json", "csv"}) == "csv") {
                    emit_csv(c, "gw subcrit", cfg, {"d", "q_star", "spectral_radius", "expected_tree_size"}, rows);
                } else {
                    json a = json::array();
                    for (auto &r : rows)
                        a.push_back({{"d", r[0]}, {"q_star", r[1]}, {"spectral_radius", r[2]},
                                     {"expected_tree_size", r[3]}});
                    emit_json(c, "gw subcrit", cfg, {{"points", a}});
                }
                return 0;
            };
        });
    }

    // fixpoint
    {
        auto *f = app.add_subcommand("fixpoint", "fixed points");
        f->require_subcommand(1);
        auto *s = f->add_subcommand("scalar", "q* = (1 - exp(-dq/(k-1)))^(k-1) iterated from 1");
        s->add_option("--k", k)->required();
        s->add_option("--d", d)->required();
        s->callback([&] {
            run = [&] {
                auto r = scalar_fixed_point(d, k);
                auto [lo, hi] = cond_interval(k);
                emit_json(c, "fixpoint scalar", {{"k", k}, {"d", d}},
                          {{"q_star", r.q}, {"residual", r.residual}, {"iterations", r.iterations},
                           {"interval", {lo, hi}}, {"below_interval", r.below_interval}});
                return 0;
            };
        });
        auto *v = f->add_subcommand("vector", "t applications of F from the uniform vector");
        v->add_option("--k", k)->required();
        v->add_option("--d", d)->required();
        v->add_option("--t", t_rounds);
        v->callback([&] {
            run = [&] {
                auto q = iterate_vector_F(d, k, t_rounds);
                double s = 0;
                for (double x : q) s += x;
                emit_json(c, "fixpoint vector", {{"k", k}, {"d", d}, {"t", t_rounds}}, {{"q", q}, {"sum", s}});
                return 0;
            };
        });
        auto *pd = f->add_subcommand("popdyn", "population dynamics, hard fields");
        pd->add_option("--k", k)->required();
        pd->add_option("--d", d)->required();
        pd->add_option("--N", N);
        pd->add_option("--sweeps", sweeps);
        pd->callback([&] {
            run = [&] {
                Popdyn dyn(d, k, N, c.seed);
                double min_ess = INFINITY;
                for (std::size_t s = 0; s < sweeps; ++s) min_ess = std::min(min_ess, dyn.sweep().ess);
                auto h = hard_fields(dyn.population());
                double tot = 0;
                for (double x : h.rho) tot += x;
                emit_json(c, "fixpoint popdyn", {{"k", k}, {"d", d}, {"N", N}, {"sweeps", sweeps}},
                          {{"rho", h.rho}, {"rho_total", tot}, {"q_star", scalar_fixed_point(d, k).q},
                           {"rho_by_list_size", h.rho_by_size}, {"min_ess", min_ess}, {"nu", dyn.population().mean()}});
                return 0;
            };
        });
    }

    // sigma
    {
        auto *s = app.add_subcommand("sigma", "Sigma_k(d) from GW trees");
        s->require_subcommand(1);
        auto *pt = s->add_subcommand("point", "one value");
        pt->add_option("--k", k)->required();
        pt->add_option("--d", d)->required();
        pt->add_option("--samples", samples);
        pt->callback([&] {
            run = [&] {
                emit_json(c, "sigma point", {{"k", k}, {"d", d}, {"samples", samples}},
                          sigma_json(sigma(d, k, samples, c.seed, c.threads)));
                return 0;
            };
        });
        auto *cv = s->add_subcommand("curve", "grid over an interval (default: the theorem interval)");
        cv->add_option("--k", k)->required();
        cv->add_option("--points", points);
        cv->add_option("--samples", samples);
        cv->add_option("--d-lo", d_lo);
        cv->add_option("--d-hi", d_hi);
        cv->callback([&] {
            run = [&] {
                auto [lo, hi] = cond_interval(k);
                if (std::isnan(d_lo)) d_lo = lo;
                if (std::isnan(d_hi)) d_hi = hi;
                std::vector<std::vector<double>> rows;
                for (double x : checks::grid(d_lo, d_hi, points)) {
                    auto v = sigma(x, k, samples, c.seed, c.threads);
                    rows.push_back({v.d, v.sigma, v.stderr_, v.free_entropy});
                }
                json cfg{{"k", k}, {"points", points}, {"samples", samples}, {"d_lo", d_lo}, {"d_hi", d_hi}};
                if (c.format == "csv" || app.get_option("--format")->count() == 0) {
                    emit_csv(c, "sigma curve", cfg, {"d", "sigma", "stderr", "free_entropy"}, rows);
                } else {
                    json a = json::array();
                    for (auto &r : rows)
                        a.push_back({{"d", r[0]}, {"sigma", r[1]}, {"stderr", r[2]}, {"free_entropy", r[3]}});
                    emit_json(c, "sigma curve", cfg, {{"points", a}});
                }
                return 0;
            };
        });
    }

    // dcond
    {
        auto *s = app.add_subcommand("dcond", "root of Sigma_k on the theorem interval");
        s->add_option("--k", k)->required();
        s->add_option("--samples", samples);
        s->add_option("--tol", tol, "bisection stops once the bracket is narrower");
        s->callback([&] {
            run = [&] {
                json cfg{{"k", k}, {"samples", samples}, {"tol", tol}};
                auto [lo, hi] = cond_interval(k);
                try {
                    auto r = find_dcond(k, samples, tol, c.seed, c.threads);
                    json ev = json::array();
                    for (auto &e : r.evaluations) ev.push_back(sigma_json(e));
                    emit_json(c, "dcond", cfg,
                              {{"d_cond", r.d_cond}, {"ci", {r.ci_lo, r.ci_hi}}, {"interval", {lo, hi}},
                               {"inside_interval", r.interval_check}, {"noise_limited", r.noise_limited},
                               {"evaluations", ev}});
                    return 0;
                } catch (const DcondFailure &e) {
                    json ev = json::array();
                    for (auto &x : e.evaluations) ev.push_back(sigma_json(x));
                    emit_json(c, "dcond", cfg, {{"error", e.what()}, {"evaluations", ev}});
                    return 3;
                }
            };
        });
    }

    // cluster
    {
        auto *cl = app.add_subcommand("cluster", "clusters by enumeration");
        cl->require_subcommand(1);
        auto *s = cl->add_subcommand("brute", "cluster of sigma, n <= 16");
        s->add_option("--graph", graph_in)->required();
        s->add_option("--coloring", coloring_in)->required();
        s->callback([&] {
            run = [&] {
                auto [g, sigma] = load_instance(graph_in, coloring_in);
                auto r = cluster_brute(g, sigma);
                auto pr = predicates(g, sigma);
                json ach = json::array();
                for (auto a : r.achieved) ach.push_back(mask_list(a));
                emit_json(c, "cluster brute", {{"graph", graph_in}, {"coloring", coloring_in}},
                          {{"size", r.size.str()},
                           {"log_size", r.size > 0 ? log_big(r.size) : -INFINITY},
                           {"proper_colorings", r.proper_total.str()},
                           {"achieved_colors", ach},
                           {"balanced", pr.balanced},
                           {"separable", pr.separable},
                           {"kappa_vacuous", pr.kappa_vacuous},
                           {"tame", pr.tame}});
                return 0;
            };
        });
    }

    // stats
    {
        auto *st = app.add_subcommand("stats", "empirical statistics on planted instances");
        st->require_subcommand(1);
        auto *s = st->add_subcommand("trees", "reduced-graph tree classes vs GW probabilities");
        s->add_option("--n", n)->required();
        s->add_option("--k", k)->required();
        s->add_option("--d", d)->required();
        s->add_option("--classes", classes_in, "tree file with the query classes (default: the three smallest)");
        s->callback([&] {
            run = [&] {
                auto queries = classes_in.empty()
                                   ? checks::smallest_classes(k)
                                   : with_file<std::vector<DecoratedTree>>(classes_in, [](std::istream &in) {
                                         return read_trees(in);
                                     });
                auto rep = compare_tree_stats(n, k, d, queries, c.seed);
                json cls = json::array(), rounds = json::array();
                for (auto &x : rep.classes)
                    cls.push_back({{"key", x.key}, {"vertices", x.vertices}, {"probability", x.probability},
                                   {"count", x.count}, {"frequency", x.frequency}, {"sigma", x.sigma}, {"z", x.z}});
                for (auto &x : rep.rounds)
                    rounds.push_back({{"t", x.t}, {"empirical", x.empirical}, {"predicted", x.predicted}, {"z", x.z}});
                emit_json(c, "stats trees", {{"n", n}, {"k", k}, {"d", d}, {"classes", classes_in}},
                          {{"q_star", rep.q_star},
                           {"edges", rep.edges},
                           {"wp_rounds", rep.wp_rounds},
                           {"frozen_fraction", rep.frozen_fraction},
                           {"frozen_z", rep.frozen_z},
                           {"z_threshold", rep.z_threshold},
                           {"cyclic_vertices", rep.cyclic_vertices},
                           {"classes", cls},
                           {"rounds", rounds}});
                return 0;
            };
        });
    }

    // selftest
    app.add_subcommand("selftest", "fast acceptance subset and stored values")->callback([&] {
        run = [&] { return selftest(c); };
    });

    try {
        app.parse(argc, argv);
        return run();
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    } catch (const std::exception &e) {
        json err{{"error", e.what()}};
        std::cerr << err.dump() << '\n';
        return 1;
    }
}
