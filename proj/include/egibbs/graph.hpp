#pragma once

// Interaction graph: vertices, adjacency, boundaries, hop distances and the
// separation condition rho(l, l') >= phi(min{m_l, m_l'}).

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "egibbs/error.hpp"

namespace egibbs {

using VertexId = std::int64_t;

inline Error graph_error(const std::string& kind, const std::string& what) {
    return Error("graph_core", kind, what);
}

/// Undirected edge stored with a < b.
struct Edge {
    VertexId a = 0;
    VertexId b = 0;

    Edge() = default;
    Edge(VertexId u, VertexId v) : a(std::min(u, v)), b(std::max(u, v)) {}

    bool touches(VertexId v) const noexcept { return a == v || b == v; }
    VertexId other(VertexId v) const noexcept { return v == a ? b : a; }

    auto operator<=>(const Edge&) const = default;
};

/// Finite, sorted set of vertex ids (a finite volume Lambda or Delta).
class VertexSet {
public:
    VertexSet() = default;
    VertexSet(std::initializer_list<VertexId> ids) : members_(ids) { normalize(); }
    explicit VertexSet(std::vector<VertexId> ids) : members_(std::move(ids)) { normalize(); }

    bool contains(VertexId v) const {
        return std::binary_search(members_.begin(), members_.end(), v);
    }
    bool subset_of(const VertexSet& other) const {
        return std::includes(other.members_.begin(), other.members_.end(),
                             members_.begin(), members_.end());
    }
    VertexSet minus(const VertexSet& other) const {
        std::vector<VertexId> out;
        std::set_difference(members_.begin(), members_.end(), other.members_.begin(),
                            other.members_.end(), std::back_inserter(out));
        return VertexSet(std::move(out));
    }
    VertexSet united(const VertexSet& other) const {
        std::vector<VertexId> out;
        std::set_union(members_.begin(), members_.end(), other.members_.begin(),
                       other.members_.end(), std::back_inserter(out));
        return VertexSet(std::move(out));
    }

    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    const std::vector<VertexId>& members() const noexcept { return members_; }
    auto begin() const noexcept { return members_.begin(); }
    auto end() const noexcept { return members_.end(); }
    VertexId operator[](std::size_t i) const { return members_[i]; }

    /// Position of v among the members, or size() if absent.
    std::size_t position(VertexId v) const {
        auto it = std::lower_bound(members_.begin(), members_.end(), v);
        return (it != members_.end() && *it == v) ? std::size_t(it - members_.begin())
                                                  : members_.size();
    }

    bool operator==(const VertexSet&) const = default;

private:
    void normalize() {
        std::sort(members_.begin(), members_.end());
        members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    }

    std::vector<VertexId> members_;
};

/// Undirected simple graph without self-loops or isolated vertices. Immutable
/// after construction. Internally vertices are addressed by a dense index in
/// [0, size()) following the sorted order of their ids.
class Graph {
public:
    /// Builds the graph from an edge list. Vertices are the ids appearing in
    /// `edges` together with `declared`; a declared vertex without an edge is
    /// rejected, as are self-loops and repeated undirected edges.
    static Graph from_edges(std::span<const std::pair<VertexId, VertexId>> edges,
                            std::span<const VertexId> declared = {}) {
        Graph g;
        std::set<VertexId> ids(declared.begin(), declared.end());
        std::set<Edge> seen;
        for (auto [u, v] : edges) {
            if (u < 0 || v < 0)
                throw graph_error("NegativeVertexId", "vertex ids must be nonnegative");
            if (u == v)
                throw graph_error("SelfLoop", "self-loop at vertex " + std::to_string(u));
            if (!seen.insert(Edge(u, v)).second)
                throw graph_error("DuplicateEdge", "duplicate edge <" + std::to_string(u) +
                                                       "," + std::to_string(v) + ">");
            ids.insert(u);
            ids.insert(v);
        }
        for (VertexId v : ids)
            if (v < 0) throw graph_error("NegativeVertexId", "vertex ids must be nonnegative");

        g.ids_.assign(ids.begin(), ids.end());
        for (std::size_t i = 0; i < g.ids_.size(); ++i) g.index_.emplace(g.ids_[i], i);
        g.adj_.resize(g.ids_.size());
        g.edges_.assign(seen.begin(), seen.end());
        for (const Edge& e : g.edges_) {
            std::size_t ia = g.index_.at(e.a), ib = g.index_.at(e.b);
            g.adj_[ia].push_back(ib);
            g.adj_[ib].push_back(ia);
        }
        for (std::size_t i = 0; i < g.adj_.size(); ++i) {
            if (g.adj_[i].empty())
                throw graph_error("IsolatedVertex",
                                  "vertex " + std::to_string(g.ids_[i]) + " has no edge");
            std::sort(g.adj_[i].begin(), g.adj_[i].end());
        }
        return g;
    }

    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<VertexId>& vertices() const noexcept { return ids_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    VertexSet vertex_set() const { return VertexSet(ids_); }

    bool contains(VertexId v) const { return index_.count(v) != 0; }

    std::size_t index(VertexId v) const {
        auto it = index_.find(v);
        if (it == index_.end())
            throw graph_error("UnknownVertex", "vertex " + std::to_string(v) + " not in graph");
        return it->second;
    }
    VertexId id(std::size_t idx) const { return ids_.at(idx); }

    /// Dense neighbor indices of the vertex at dense index `idx`.
    const std::vector<std::size_t>& adjacent_indices(std::size_t idx) const { return adj_[idx]; }

    std::vector<VertexId> neighbors(VertexId v) const {
        std::vector<VertexId> out;
        for (std::size_t j : adj_[index(v)]) out.push_back(ids_[j]);
        return out;
    }

    std::size_t degree(VertexId v) const { return adj_[index(v)].size(); }
    std::size_t degree_at(std::size_t idx) const { return adj_[idx].size(); }

    std::size_t max_degree() const {
        std::size_t d = 0;
        for (const auto& a : adj_) d = std::max(d, a.size());
        return d;
    }

    bool adjacent(VertexId u, VertexId v) const {
        if (!contains(u) || !contains(v)) return false;
        const auto& a = adj_[index(u)];
        return std::binary_search(a.begin(), a.end(), index(v));
    }

    void require(const VertexSet& set) const {
        for (VertexId v : set)
            if (!contains(v))
                throw graph_error("UnknownVertex", "vertex " + std::to_string(v) + " not in graph");
    }

private:
    Graph() = default;

    std::vector<VertexId> ids_;
    std::unordered_map<VertexId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<Edge> edges_;
};

inline Graph build_graph(const std::vector<std::pair<VertexId, VertexId>>& edges) {
    return Graph::from_edges(edges);
}

struct Boundaries {
    std::vector<Edge> interior_edges;   ///< both ends in the volume
    std::vector<Edge> edge_boundary;    ///< exactly one end in the volume
    VertexSet vertex_boundary;          ///< outside vertices adjacent to the volume
};

inline Boundaries boundaries(const Graph& g, const VertexSet& volume) {
    if (volume.empty()) throw graph_error("EmptyVolume", "volume must be nonempty");
    g.require(volume);
    Boundaries out;
    std::vector<VertexId> outside;
    for (const Edge& e : g.edges()) {
        bool ia = volume.contains(e.a), ib = volume.contains(e.b);
        if (ia && ib) {
            out.interior_edges.push_back(e);
        } else if (ia != ib) {
            out.edge_boundary.push_back(e);
            outside.push_back(ia ? e.b : e.a);
        }
    }
    out.vertex_boundary = VertexSet(std::move(outside));
    return out;
}

/// Edges along which `inner` is cut out of `outer`: the edge boundary of
/// `inner` intersected with the interior edges of `outer`.
inline std::vector<Edge> cut_edges(const Graph& g, const VertexSet& inner, const VertexSet& outer) {
    if (!inner.subset_of(outer))
        throw graph_error("NotNested", "inner volume is not contained in the outer volume");
    std::vector<Edge> out;
    for (const Edge& e : boundaries(g, inner).edge_boundary)
        if (outer.contains(e.a) && outer.contains(e.b)) out.push_back(e);
    return out;
}

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

/// Hop distances from `source` to every vertex (dense order); kUnreachable
/// marks other components.
inline std::vector<std::size_t> distances_from(const Graph& g, VertexId source) {
    std::vector<std::size_t> dist(g.size(), kUnreachable);
    std::queue<std::size_t> q;
    std::size_t s = g.index(source);
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
        std::size_t u = q.front();
        q.pop();
        for (std::size_t w : g.adjacent_indices(u))
            if (dist[w] == kUnreachable) {
                dist[w] = dist[u] + 1;
                q.push(w);
            }
    }
    return dist;
}

/// Breadth-first hop count; nullopt when the vertices lie in different components.
inline std::optional<std::size_t> graph_distance(const Graph& g, VertexId u, VertexId v) {
    std::size_t target = g.index(v);
    std::size_t d = distances_from(g, u)[target];
    if (d == kUnreachable) return std::nullopt;
    return d;
}

/// Hop distance from every vertex to the nearest member of `set`.
inline std::vector<std::size_t> distances_to_set(const Graph& g, const VertexSet& set) {
    g.require(set);
    std::vector<std::size_t> dist(g.size(), kUnreachable);
    std::queue<std::size_t> q;
    for (VertexId v : set) {
        dist[g.index(v)] = 0;
        q.push(g.index(v));
    }
    while (!q.empty()) {
        std::size_t u = q.front();
        q.pop();
        for (std::size_t w : g.adjacent_indices(u))
            if (dist[w] == kUnreachable) {
                dist[w] = dist[u] + 1;
                q.push(w);
            }
    }
    return dist;
}

/// Vertices within hop distance `radius` of `center`.
inline VertexSet ball(const Graph& g, const VertexSet& center, std::size_t radius) {
    auto dist = distances_to_set(g, center);
    std::vector<VertexId> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (dist[i] <= radius) out.push_back(g.id(i));
    return VertexSet(std::move(out));
}

/// Vertices at hop distance exactly `radius` from `center`.
inline VertexSet sphere(const Graph& g, const VertexSet& center, std::size_t radius) {
    auto dist = distances_to_set(g, center);
    std::vector<VertexId> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (dist[i] == radius) out.push_back(g.id(i));
    return VertexSet(std::move(out));
}

// ---------------------------------------------------------------------------
// Separation condition

/// Nondecreasing phi : N -> [1, inf) given by a finite table phi(1..T) and a
/// power-law tail phi(n) = max(phi(T), coefficient * n^exponent) for n > T.
class PhiFunction {
public:
    PhiFunction(std::vector<double> table, double coefficient, double exponent)
        : table_(std::move(table)), coefficient_(coefficient), exponent_(exponent) {
        for (std::size_t i = 0; i < table_.size(); ++i) {
            if (!(table_[i] >= 1.0))
                throw graph_error("InvalidPhi", "phi values must be >= 1");
            if (i > 0 && table_[i] < table_[i - 1])
                throw graph_error("InvalidPhi", "phi table must be nondecreasing");
        }
        if (!(coefficient_ > 0.0)) throw graph_error("InvalidPhi", "tail coefficient must be positive");
        if (exponent_ < 0.0) throw graph_error("InvalidPhi", "tail exponent must be nonnegative");
    }

    /// phi(n) = max(1, c n^p) with no table.
    static PhiFunction power_law(double coefficient, double exponent) {
        return PhiFunction({}, coefficient, exponent);
    }

    double operator()(std::size_t n) const {
        if (n == 0) n = 1;
        if (n <= table_.size()) return table_[n - 1];
        double tail = coefficient_ * std::pow(double(n), exponent_);
        double floor = table_.empty() ? 1.0 : table_.back();
        return std::max(floor, tail);
    }

    std::size_t table_size() const noexcept { return table_.size(); }
    double coefficient() const noexcept { return coefficient_; }
    double exponent() const noexcept { return exponent_; }

    /// Upper bound on sum_{n > N} n / phi(n) from the tail rule, valid for
    /// N >= table_size(). Infinite when the exponent is <= 2.
    double tail_bound(std::size_t terms) const {
        if (exponent_ <= 2.0) return std::numeric_limits<double>::infinity();
        // n/phi(n) <= n^{1-p}/c is decreasing, so the sum is below the integral from N.
        return std::pow(double(terms), 2.0 - exponent_) / (coefficient_ * (exponent_ - 2.0));
    }

private:
    std::vector<double> table_;
    double coefficient_;
    double exponent_;
};

struct PhiViolation {
    VertexId u = 0;
    VertexId v = 0;
    std::size_t distance = 0;
    double required = 0.0;

    bool operator==(const PhiViolation&) const = default;
};

struct PhiReport {
    std::vector<PhiViolation> violations;
    double series_partial_sum = 0.0;
    double series_tail_bound = 0.0;
    std::size_t series_terms = 0;
    /// Pairs farther apart than this were not checked; nullopt means all pairs.
    std::optional<std::size_t> checked_radius;
};

/// Checks rho(u, v) >= phi(min{m_u, m_v}) for every pair u < v (pairs in
/// different components pass). With `radius` set, only pairs within that hop
/// distance are inspected and the report is labeled as windowed.
inline PhiReport check_phi_condition(const Graph& g, const PhiFunction& phi,
                                     std::size_t series_terms = 100,
                                     std::optional<std::size_t> radius = std::nullopt) {
    PhiReport rep;
    rep.checked_radius = radius;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto dist = distances_from(g, g.id(i));
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            if (dist[j] == kUnreachable) continue;
            if (radius && dist[j] > *radius) continue;
            double need = phi(std::min(g.degree_at(i), g.degree_at(j)));
            if (double(dist[j]) < need)
                rep.violations.push_back({g.id(i), g.id(j), dist[j], need});
        }
    }
    rep.series_terms = std::max(series_terms, phi.table_size());
    for (std::size_t n = 1; n <= rep.series_terms; ++n) rep.series_partial_sum += double(n) / phi(n);
    rep.series_tail_bound = phi.tail_bound(rep.series_terms);
    return rep;
}

// ---------------------------------------------------------------------------
// Generators and edge-list input

inline Graph chain_graph(std::size_t n) {
    if (n < 2) throw graph_error("InvalidGenerator", "chain needs at least 2 vertices");
    std::vector<std::pair<VertexId, VertexId>> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(VertexId(i), VertexId(i + 1));
    return Graph::from_edges(e);
}

inline Graph cycle_graph(std::size_t n) {
    if (n < 3) throw graph_error("InvalidGenerator", "cycle needs at least 3 vertices");
    std::vector<std::pair<VertexId, VertexId>> e;
    for (std::size_t i = 0; i < n; ++i) e.emplace_back(VertexId(i), VertexId((i + 1) % n));
    return Graph::from_edges(e);
}

/// Star K_{1,k}: center 0, leaves 1..k.
inline Graph star_graph(std::size_t k) {
    if (k < 1) throw graph_error("InvalidGenerator", "star needs at least one leaf");
    std::vector<std::pair<VertexId, VertexId>> e;
    for (std::size_t i = 1; i <= k; ++i) e.emplace_back(0, VertexId(i));
    return Graph::from_edges(e);
}

/// Open w x h grid; vertex (x, y) has id y*w + x.
inline Graph grid_graph(std::size_t w, std::size_t h) {
    if (w * h < 2) throw graph_error("InvalidGenerator", "grid needs at least 2 vertices");
    std::vector<std::pair<VertexId, VertexId>> e;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            VertexId v = VertexId(y * w + x);
            if (x + 1 < w) e.emplace_back(v, v + 1);
            if (y + 1 < h) e.emplace_back(v, v + VertexId(w));
        }
    return Graph::from_edges(e);
}

inline Graph complete_graph(std::size_t n) {
    if (n < 2) throw graph_error("InvalidGenerator", "complete graph needs at least 2 vertices");
    std::vector<std::pair<VertexId, VertexId>> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(VertexId(i), VertexId(j));
    return Graph::from_edges(e);
}

/// Connected random graph with all degrees <= max_degree: a random tree
/// followed by up to `extra_edges` additional random edges.
inline Graph random_bounded_graph(std::size_t n, std::size_t max_degree, std::size_t extra_edges,
                                  std::uint64_t seed) {
    if (n < 2) throw graph_error("InvalidGenerator", "random graph needs at least 2 vertices");
    if (max_degree < 2 && n > 2)
        throw graph_error("InvalidGenerator", "max_degree must be >= 2 for more than 2 vertices");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> deg(n, 0);
    std::set<Edge> edges;
    for (std::size_t v = 1; v < n; ++v) {
        std::vector<std::size_t> open;
        for (std::size_t u = 0; u < v; ++u)
            if (deg[u] < max_degree) open.push_back(u);
        std::size_t u = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
        edges.insert(Edge(VertexId(u), VertexId(v)));
        ++deg[u];
        ++deg[v];
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < extra_edges; ++k) {
        std::size_t u = pick(rng), v = pick(rng);
        if (u == v || deg[u] >= max_degree || deg[v] >= max_degree) continue;
        if (!edges.insert(Edge(VertexId(u), VertexId(v))).second) continue;
        ++deg[u];
        ++deg[v];
    }
    std::vector<std::pair<VertexId, VertexId>> list;
    for (const Edge& e : edges) list.emplace_back(e.a, e.b);
    return Graph::from_edges(list);
}

/// One edge per line, two whitespace-separated nonnegative integers; '#' starts a comment line.
inline Graph parse_edge_list(std::istream& in) {
    std::vector<std::pair<VertexId, VertexId>> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        long long u = 0, v = 0;
        std::string extra;
        if (!(ss >> u >> v) || (ss >> extra))
            throw graph_error("ParseError", "line " + std::to_string(lineno) +
                                                ": expected two integers");
        edges.emplace_back(VertexId(u), VertexId(v));
    }
    return Graph::from_edges(edges);
}

} // namespace egibbs
