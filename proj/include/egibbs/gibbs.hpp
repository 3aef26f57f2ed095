#pragma once

// Local Gibbs specification pi_Lambda(.|y), partition functions and local
// Euclidean Gibbs measures nu_Delta, computed by exact enumeration in log
// space, plus a single-site heat-bath sampler.
//
// Loops are addressed by their lexicographic index in the bridge measure.
// Volume configurations are mixed-radix indices over the sorted members of
// the volume, first member most significant.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "egibbs/graph.hpp"
#include "egibbs/interaction.hpp"
#include "egibbs/loop_space.hpp"

namespace egibbs {

inline Error gibbs_error(const std::string& kind, const std::string& what) {
    return Error("gibbs_spec", kind, what);
}

inline constexpr std::size_t kNoLoop = std::numeric_limits<std::size_t>::max();

inline double log_sum_exp(std::span<const double> xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

/// Normalized probabilities over the configurations of `volume`.
struct LocalMeasureTable {
    VertexSet volume;
    std::size_t loops_per_site = 0;
    std::vector<double> probabilities;
    double log_partition = 0.0;

    std::size_t size() const noexcept { return probabilities.size(); }

    /// Loop index of the vertex at `position` (within volume) in configuration `config`.
    std::size_t loop_of(std::size_t config, std::size_t position) const {
        std::size_t shift = volume.size() - 1 - position;
        for (std::size_t k = 0; k < shift; ++k) config /= loops_per_site;
        return config % loops_per_site;
    }

    LoopFieldConfig config(std::size_t index, const BridgeMeasure& bridge) const {
        LoopFieldConfig out;
        for (std::size_t p = 0; p < volume.size(); ++p) out[volume[p]] = bridge.loop_at(loop_of(index, p));
        return out;
    }
};

/// Graph, bridge measure and potentials with the per-loop and per-edge tables
/// needed for enumeration: log chi(loop) and V_e(loop_a, loop_b).
class GibbsModel {
public:
    GibbsModel(Graph graph, BridgeMeasure bridge, PotentialAssignment potentials)
        : graph_(std::move(graph)), bridge_(std::move(bridge)), potentials_(std::move(potentials)) {
        potentials_.check_against(graph_);
        if (!potentials_.entries().empty() && potentials_.points() != bridge_.points())
            throw gibbs_error("InvalidPotential", "potential tables do not match the point model");
        loops_ = bridge_.loop_count();
        bridge_.require_enumerable(loops_);
        std::vector<Loop> all = bridge_.enumerate();
        log_chi_.resize(loops_);
        for (std::size_t i = 0; i < loops_; ++i) log_chi_[i] = bridge_.log_probability(all[i]);

        edge_slot_.assign(graph_.size(), {});
        for (std::size_t i = 0; i < graph_.size(); ++i) edge_slot_[i].assign(graph_.adjacent_indices(i).size(), kNoLoop);
        for (const Edge& e : graph_.edges()) {
            const PairPotential* v = potentials_.find(e);
            if (v == nullptr || v->norm() == 0.0) continue;
            std::vector<double> t(loops_ * loops_);
            for (std::size_t a = 0; a < loops_; ++a)
                for (std::size_t b = 0; b < loops_; ++b) t[a * loops_ + b] = time_averaged_energy(*v, all[a], all[b]);
            std::size_t slot = tables_.size();
            tables_.push_back(std::move(t));
            std::size_t ia = graph_.index(e.a), ib = graph_.index(e.b);
            link(ia, ib, slot);
            link(ib, ia, slot);
        }
    }

    const Graph& graph() const noexcept { return graph_; }
    const BridgeMeasure& bridge() const noexcept { return bridge_; }
    const PotentialAssignment& potentials() const noexcept { return potentials_; }
    std::size_t loops_per_site() const noexcept { return loops_; }
    double log_chi(std::size_t loop) const { return log_chi_[loop]; }

    /// V on the edge between dense vertices u and w (adjacent), with loop
    /// indices given in the order (u, w). Zero for edges without potential.
    double pair_energy(std::size_t u, std::size_t w, std::size_t loop_u, std::size_t loop_w) const {
        const auto& adj = graph_.adjacent_indices(u);
        auto pos = std::size_t(std::lower_bound(adj.begin(), adj.end(), w) - adj.begin());
        std::size_t slot = edge_slot_[u][pos];
        if (slot == kNoLoop) return 0.0;
        // tables are stored in (min id, max id) order; dense order follows id order
        return u < w ? tables_[slot][loop_u * loops_ + loop_w] : tables_[slot][loop_w * loops_ + loop_u];
    }

    std::size_t loop_index(const Loop& loop) const { return bridge_.index_of(loop); }

    /// Dense state vector (kNoLoop where unassigned) from a loop field.
    std::vector<std::size_t> dense_state(const LoopFieldConfig& config) const {
        std::vector<std::size_t> state(graph_.size(), kNoLoop);
        for (const auto& [v, loop] : config) state[graph_.index(v)] = loop_index(loop);
        return state;
    }

    std::size_t volume_size(std::size_t sites) const {
        std::size_t n = checked_power(loops_, sites);
        if (n > bridge_.enumeration_cap())
            throw gibbs_error("EnumerationTooLarge", std::to_string(loops_) + "^" + std::to_string(sites) +
                                                         " configurations exceed the enumeration cap");
        return n;
    }

private:
    void link(std::size_t u, std::size_t w, std::size_t slot) {
        const auto& adj = graph_.adjacent_indices(u);
        auto pos = std::size_t(std::lower_bound(adj.begin(), adj.end(), w) - adj.begin());
        edge_slot_[u][pos] = slot;
    }

    Graph graph_;
    BridgeMeasure bridge_;
    PotentialAssignment potentials_;
    std::size_t loops_ = 0;
    std::vector<double> log_chi_;
    std::vector<std::vector<double>> tables_;
    std::vector<std::vector<std::size_t>> edge_slot_;
};

namespace detail {

/// Dense indices of the members of a volume, validated against the graph.
inline std::vector<std::size_t> dense_sites(const Graph& g, const VertexSet& volume) {
    std::vector<std::size_t> out;
    for (VertexId v : volume) {
        if (!g.contains(v))
            throw gibbs_error("UnknownVertex", "vertex " + std::to_string(v) + " not in graph");
        out.push_back(g.index(v));
    }
    return out;
}

/// Edges (as dense pairs) that contribute to a volume's energy: interior
/// edges and, when `with_boundary`, edges from the volume to its outside.
struct EnergyEdges {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
};

inline EnergyEdges energy_edges(const Graph& g, const std::vector<std::size_t>& sites,
                                const std::vector<bool>& in_volume, const std::vector<bool>& allowed) {
    EnergyEdges out;
    for (std::size_t s : sites)
        for (std::size_t w : g.adjacent_indices(s)) {
            if (in_volume[w] && w < s) continue;  // interior edge counted once
            if (!in_volume[w] && !allowed[w]) continue;
            out.edges.emplace_back(s, w);
        }
    return out;
}

/// Log weight log chi(x_S) + sum_edges V for every configuration of `sites`,
/// with the remaining coordinates read from `state`.
inline std::vector<double> enumerate_log_weights(const GibbsModel& model, const std::vector<std::size_t>& sites,
                                                 const EnergyEdges& edges, std::vector<std::size_t> state) {
    const std::size_t L = model.loops_per_site();
    const std::size_t total = model.volume_size(sites.size());
    for (std::size_t s : sites) state[s] = 0;
    for (const auto& [a, b] : edges.edges)
        if (state[a] == kNoLoop || state[b] == kNoLoop)
            throw gibbs_error("MissingBoundaryLoop", "no loop given for boundary vertex " +
                                                         std::to_string(model.graph().id(state[a] == kNoLoop ? a : b)));
    std::vector<double> out(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        double acc = 0.0;
        for (std::size_t s : sites) acc += model.log_chi(state[s]);
        for (const auto& [a, b] : edges.edges) acc += model.pair_energy(a, b, state[a], state[b]);
        out[idx] = acc;
        // odometer, last site fastest
        for (std::size_t k = sites.size(); k-- > 0;) {
            if (++state[sites[k]] < L) break;
            state[sites[k]] = 0;
        }
    }
    return out;
}

inline LocalMeasureTable normalize(VertexSet volume, std::size_t L, std::vector<double> logw) {
    LocalMeasureTable t;
    t.volume = std::move(volume);
    t.loops_per_site = L;
    t.log_partition = log_sum_exp(logw);
    t.probabilities.resize(logw.size());
    for (std::size_t i = 0; i < logw.size(); ++i) t.probabilities[i] = std::exp(logw[i] - t.log_partition);
    return t;
}

inline std::vector<bool> membership(const Graph& g, const std::vector<std::size_t>& sites) {
    std::vector<bool> in(g.size(), false);
    for (std::size_t s : sites) in[s] = true;
    return in;
}

} // namespace detail

/// V_Lambda(x_Lambda | y): interior edges of Lambda plus its edge boundary,
/// the outside endpoint read from y.
inline double local_energy(const GibbsModel& model, const VertexSet& volume, const LoopFieldConfig& inside,
                           const LoopFieldConfig& boundary) {
    const Graph& g = model.graph();
    auto sites = detail::dense_sites(g, volume);
    std::vector<std::size_t> state(g.size(), kNoLoop);
    for (VertexId v : volume) {
        auto it = inside.find(v);
        if (it == inside.end()) throw gibbs_error("MissingLoop", "no loop for vertex " + std::to_string(v));
        state[g.index(v)] = model.loop_index(it->second);
    }
    auto in = detail::membership(g, sites);
    for (const auto& [v, loop] : boundary)
        if (g.contains(v) && !in[g.index(v)]) state[g.index(v)] = model.loop_index(loop);
    double acc = 0.0;
    for (std::size_t s : sites)
        for (std::size_t w : g.adjacent_indices(s)) {
            if (in[w] && w < s) continue;
            if (state[w] == kNoLoop)
                throw gibbs_error("MissingBoundaryLoop", "no loop given for boundary vertex " + std::to_string(g.id(w)));
            acc += model.pair_energy(s, w, state[s], state[w]);
        }
    return acc;
}

/// pi_Lambda(.|y) on the coordinates in Lambda, from a dense background state.
inline LocalMeasureTable specification_table_dense(const GibbsModel& model, const VertexSet& volume,
                                                   const std::vector<std::size_t>& background) {
    const Graph& g = model.graph();
    if (volume.empty()) throw gibbs_error("EmptyVolume", "volume must be nonempty");
    auto sites = detail::dense_sites(g, volume);
    auto in = detail::membership(g, sites);
    std::vector<bool> everything(g.size(), true);
    auto edges = detail::energy_edges(g, sites, in, everything);
    auto logw = detail::enumerate_log_weights(model, sites, edges, background);
    return detail::normalize(volume, model.loops_per_site(), std::move(logw));
}

/// pi_Lambda(.|y). Only loops on the vertex boundary of Lambda are read from y.
inline LocalMeasureTable specification_table(const GibbsModel& model, const VertexSet& volume,
                                             const LoopFieldConfig& boundary) {
    return specification_table_dense(model, volume, model.dense_state(boundary));
}

/// log Z_Lambda(y) with chi_Lambda normalized.
inline double partition_function(const GibbsModel& model, const VertexSet& volume, const LoopFieldConfig& boundary) {
    return specification_table(model, volume, boundary).log_partition;
}

/// Local Euclidean Gibbs measure nu_Delta: interior edges of Delta only.
inline LocalMeasureTable local_gibbs_measure(const GibbsModel& model, const VertexSet& volume) {
    const Graph& g = model.graph();
    auto sites = detail::dense_sites(g, volume);
    auto in = detail::membership(g, sites);
    auto edges = detail::energy_edges(g, sites, in, std::vector<bool>(g.size(), false));
    auto logw = detail::enumerate_log_weights(model, sites, edges, std::vector<std::size_t>(g.size(), kNoLoop));
    return detail::normalize(volume, model.loops_per_site(), std::move(logw));
}

/// Marginal of a table on a sub-volume.
inline LocalMeasureTable marginal(const LocalMeasureTable& table, const VertexSet& sub) {
    if (!sub.subset_of(table.volume)) throw gibbs_error("NotNested", "marginal volume is not a subset");
    LocalMeasureTable out;
    out.volume = sub;
    out.loops_per_site = table.loops_per_site;
    out.log_partition = table.log_partition;
    out.probabilities.assign(checked_power(table.loops_per_site, sub.size()), 0.0);
    std::vector<std::size_t> pos;
    for (VertexId v : sub) pos.push_back(table.volume.position(v));
    for (std::size_t i = 0; i < table.size(); ++i) {
        std::size_t j = 0;
        for (std::size_t p : pos) j = j * table.loops_per_site + table.loop_of(i, p);
        out.probabilities[j] += table.probabilities[i];
    }
    return out;
}

/// (1/2) sum |a_i - b_i| over a common support.
inline double tv_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw gibbs_error("SupportMismatch", "tables have different supports");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

inline double tv_distance(const LocalMeasureTable& a, const LocalMeasureTable& b) {
    if (!(a.volume == b.volume) || a.loops_per_site != b.loops_per_site)
        throw gibbs_error("SupportMismatch", "tables live on different volumes");
    return tv_distance(a.probabilities, b.probabilities);
}

/// Finite-volume consistency of the specification: the largest event
/// discrepancy |(pi_Delta pi_Lambda)(B|y) - pi_Delta(B|y)|, i.e. the total
/// variation distance between the composed kernel and pi_Delta(.|y).
inline double dlr_defect(const GibbsModel& model, const VertexSet& inner, const VertexSet& outer,
                         const LoopFieldConfig& boundary) {
    if (inner.empty()) throw gibbs_error("EmptyVolume", "inner volume must be nonempty");
    if (!inner.subset_of(outer)) throw gibbs_error("NotNested", "Lambda is not contained in Delta");
    const Graph& g = model.graph();
    const std::size_t L = model.loops_per_site();
    auto background = model.dense_state(boundary);
    LocalMeasureTable big = specification_table_dense(model, outer, background);
    VertexSet rest = outer.minus(inner);

    std::vector<std::size_t> inner_pos, rest_pos;
    for (VertexId v : inner) inner_pos.push_back(outer.position(v));
    for (VertexId v : rest) rest_pos.push_back(outer.position(v));
    const std::size_t n_inner = checked_power(L, inner.size());
    const std::size_t n_rest = checked_power(L, rest.size());

    std::vector<std::size_t> inner_of(big.size()), rest_of(big.size());
    std::vector<double> rest_weight(n_rest, 0.0);
    for (std::size_t i = 0; i < big.size(); ++i) {
        std::size_t a = 0, b = 0;
        for (std::size_t p : inner_pos) a = a * L + big.loop_of(i, p);
        for (std::size_t p : rest_pos) b = b * L + big.loop_of(i, p);
        inner_of[i] = a;
        rest_of[i] = b;
        rest_weight[b] += big.probabilities[i];
    }

    std::vector<double> composed(big.size(), 0.0);
    std::vector<std::vector<double>> cond(n_rest);
    for (std::size_t b = 0; b < n_rest; ++b) {
        std::vector<std::size_t> state = background;
        std::size_t code = b;
        for (std::size_t k = rest.size(); k-- > 0;) {
            state[g.index(rest[k])] = code % L;
            code /= L;
        }
        cond[b] = specification_table_dense(model, inner, state).probabilities;
        if (cond[b].size() != n_inner) throw gibbs_error("InternalError", "inner table size mismatch");
    }
    for (std::size_t i = 0; i < big.size(); ++i)
        composed[i] = rest_weight[rest_of[i]] * cond[rest_of[i]][inner_of[i]];
    return tv_distance(composed, big.probabilities);
}

/// Positive function on X_Lambda configurations, tabulated in volume order.
struct ConfigFunction {
    VertexSet volume;
    std::vector<double> values;

    void check_positive() const {
        for (double v : values)
            if (!(v > 0.0) || !std::isfinite(v))
                throw gibbs_error("NonpositiveFunction", "f must be strictly positive and bounded");
    }
};

/// f = base + [loop at `vertex` equals `loop`].
inline ConfigFunction constant_plus_indicator(const VertexSet& volume, std::size_t loops_per_site, double base,
                                              VertexId vertex, std::size_t loop) {
    ConfigFunction f{volume, std::vector<double>(checked_power(loops_per_site, volume.size()), base)};
    std::size_t pos = volume.position(vertex);
    if (pos == volume.size()) throw gibbs_error("UnknownVertex", "indicator vertex not in volume");
    LocalMeasureTable shape{volume, loops_per_site, {}, 0.0};
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (shape.loop_of(i, pos) == loop) f.values[i] += 1.0;
    return f;
}

/// nu_Delta(f | x_pin): conditional expectation of f (on X_Lambda) under the
/// local Euclidean Gibbs measure of Delta given the loop at `pin`.
inline double conditional_expectation(const GibbsModel& model, const VertexSet& outer, const VertexSet& inner,
                                      const ConfigFunction& f, VertexId pin, std::size_t pin_loop) {
    if (!inner.subset_of(outer)) throw gibbs_error("NotNested", "Lambda is not contained in Delta");
    if (!outer.contains(pin)) throw gibbs_error("PinOutsideDelta", "pinned vertex is not in Delta");
    if (inner.contains(pin)) throw gibbs_error("PinInsideLambda", "pinned vertex lies in Lambda");
    if (!(f.volume == inner)) throw gibbs_error("SupportMismatch", "f must be defined on Lambda");
    f.check_positive();
    if (pin_loop >= model.loops_per_site()) throw gibbs_error("InvalidLoop", "pinned loop out of range");

    const Graph& g = model.graph();
    const std::size_t L = model.loops_per_site();
    VertexSet free = outer.minus(VertexSet{pin});
    auto sites = detail::dense_sites(g, free);
    auto in = detail::membership(g, sites);
    std::vector<bool> allowed(g.size(), false);
    allowed[g.index(pin)] = true;
    auto edges = detail::energy_edges(g, sites, in, allowed);
    std::vector<std::size_t> state(g.size(), kNoLoop);
    state[g.index(pin)] = pin_loop;
    auto logw = detail::enumerate_log_weights(model, sites, edges, state);

    std::vector<std::size_t> inner_pos;
    for (VertexId v : inner) inner_pos.push_back(free.position(v));
    LocalMeasureTable shape{free, L, {}, 0.0};
    double mx = -std::numeric_limits<double>::infinity();
    for (double w : logw) mx = std::max(mx, w);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        std::size_t a = 0;
        for (std::size_t p : inner_pos) a = a * L + shape.loop_of(i, p);
        double w = std::exp(logw[i] - mx);
        num += f.values[a] * w;
        den += w;
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// Heat-bath sampler

struct SamplerState {
    VertexSet volume;
    std::vector<std::size_t> state;  ///< dense loop indices; boundary entries stay fixed
    std::mt19937_64 rng;
    std::size_t sweep_count = 0;
};

/// Sampler over `volume` with the boundary fixed to `boundary`. The initial
/// configuration inside the volume is drawn from the product bridge measure.
inline SamplerState make_sampler(const GibbsModel& model, const VertexSet& volume, const LoopFieldConfig& boundary,
                                 std::uint64_t seed) {
    const Graph& g = model.graph();
    SamplerState s{volume, model.dense_state(boundary), std::mt19937_64(seed), 0};
    auto sites = detail::dense_sites(g, volume);
    auto in = detail::membership(g, sites);
    for (std::size_t v : sites)
        for (std::size_t w : g.adjacent_indices(v))
            if (!in[w] && s.state[w] == kNoLoop)
                throw gibbs_error("MissingBoundaryLoop", "no loop given for boundary vertex " + std::to_string(g.id(w)));
    for (std::size_t v : sites) s.state[v] = model.loop_index(model.bridge().sample(s.rng));
    return s;
}

/// Exact conditional law of the loop at `vertex` given all other coordinates.
inline std::vector<double> site_conditional(const GibbsModel& model, const std::vector<std::size_t>& state,
                                            VertexId vertex) {
    const Graph& g = model.graph();
    const std::size_t v = g.index(vertex);
    const std::size_t L = model.loops_per_site();
    std::vector<double> logw(L);
    for (std::size_t l = 0; l < L; ++l) {
        double acc = model.log_chi(l);
        for (std::size_t w : g.adjacent_indices(v)) acc += model.pair_energy(v, w, l, state[w]);
        logw[l] = acc;
    }
    double lz = log_sum_exp(logw);
    for (double& x : logw) x = std::exp(x - lz);
    return logw;
}

/// One heat-bath sweep over the volume in increasing vertex order.
inline void gibbs_sweep(SamplerState& s, const GibbsModel& model) {
    for (VertexId vertex : s.volume) {
        auto probs = site_conditional(model, s.state, vertex);
        s.state[model.graph().index(vertex)] = draw_index(probs, s.rng);
    }
    ++s.sweep_count;
}

// ---------------------------------------------------------------------------
// Boundary-condition sensitivity

struct TvDecayPoint {
    std::size_t radius = 0;   ///< boundary sits at this hop distance from the window
    std::size_t volume_size = 0;
    double tv = 0.0;
};

/// For each radius r >= 1 the volume is the ball of radius r-1 around the
/// window; the window marginals of pi_volume(.|y_a) and pi_volume(.|y_b) are
/// compared in total variation.
inline std::vector<TvDecayPoint> tv_decay(const GibbsModel& model, const VertexSet& window,
                                          const std::vector<std::size_t>& radii, const LoopFieldConfig& ya,
                                          const LoopFieldConfig& yb) {
    std::vector<TvDecayPoint> out;
    for (std::size_t r : radii) {
        if (r == 0) throw gibbs_error("RangeViolation", "radius must be >= 1");
        VertexSet vol = ball(model.graph(), window, r - 1);
        auto ta = marginal(specification_table(model, vol, ya), window);
        auto tb = marginal(specification_table(model, vol, yb), window);
        out.push_back({r, vol.size(), tv_distance(ta, tb)});
    }
    return out;
}

/// Every vertex of g carries the constant loop at `point`.
inline LoopFieldConfig constant_field(const Graph& g, const BridgeMeasure& bridge, std::size_t point) {
    if (point >= bridge.points()) throw gibbs_error("InvalidLoop", "point index out of range");
    LoopFieldConfig out;
    for (VertexId v : g.vertices()) out[v] = Loop{std::vector<std::size_t>(bridge.slices(), point)};
    return out;
}

} // namespace egibbs
