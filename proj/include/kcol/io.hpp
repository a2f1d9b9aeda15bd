#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtree.hpp"
#include "graph.hpp"

namespace kcol {

// "n m k" then m lines "u v"
inline Graph read_graph(std::istream &in, int *k_out = nullptr)
{
    long long n, m, k;
    if (!(in >> n >> m >> k)) throw std::runtime_error("graph file: bad header");
    std::vector<Edge> es;
    es.reserve(static_cast<std::size_t>(m));
    for (long long j = 0; j < m; ++j) {
        int u, v;
        if (!(in >> u >> v)) throw std::runtime_error("graph file: truncated edge list");
        es.emplace_back(u, v);
    }
    if (k_out) *k_out = static_cast<int>(k);
    return Graph::from_edges(static_cast<int>(n), std::move(es));
}

inline void write_graph(std::ostream &out, const Graph &g, int k)
{
    out << g.n << ' ' << g.m() << ' ' << k << '\n';
    for (auto [u, v] : g.edges) out << u << ' ' << v << '\n';
}

inline Coloring read_coloring(std::istream &in, int k, int n)
{
    std::vector<int> c;
    int x;
    while (in >> x) c.push_back(x);
    if (n >= 0 && static_cast<int>(c.size()) != n) throw std::runtime_error("coloring file: expected " +
                                                                            std::to_string(n) + " entries");
    return Coloring(k, std::move(c));
}

inline void write_coloring(std::ostream &out, const Coloring &s)
{
    for (int x : s.c) out << x << '\n';
}

// "n k root" then n lines "parent i ell-mask"
inline DecoratedTree read_tree(std::istream &in)
{
    int n, k, root;
    if (!(in >> n >> k >> root)) throw std::runtime_error("tree file: bad header");
    std::vector<int> par(n);
    std::vector<VertexType> ty(n);
    for (int v = 0; v < n; ++v) {
        unsigned long long mask;
        if (!(in >> par[v] >> ty[v].i >> mask)) throw std::runtime_error("tree file: truncated");
        ty[v].ell = mask;
    }
    auto t = DecoratedTree::from_parents(k, std::move(par), std::move(ty));
    if (t.root != root) throw std::runtime_error("tree file: root does not match the parent array");
    return t;
}

inline std::vector<DecoratedTree> read_trees(std::istream &in)
{
    std::vector<DecoratedTree> out;
    in >> std::ws;
    while (in.peek() != EOF) {
        out.push_back(read_tree(in));
        in >> std::ws;
    }
    return out;
}

inline void write_tree(std::ostream &out, const DecoratedTree &t)
{
    out << t.size() << ' ' << t.k << ' ' << t.root << '\n';
    for (int v = 0; v < t.size(); ++v) out << t.parent[v] << ' ' << t.type[v].i << ' ' << t.type[v].ell << '\n';
}

inline std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T, class F>
T with_file(const std::string &path, F &&f)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return f(in);
}

} // namespace kcol
