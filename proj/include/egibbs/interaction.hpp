#pragma once

// Pair potentials on the point model, time-averaged loop interactions, the
// per-edge smallness functional kappa = 16 (exp(4 ||v||) - 1) and product
// ensembles of random potentials.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "egibbs/graph.hpp"
#include "egibbs/loop_space.hpp"

namespace egibbs {

inline Error interaction_error(const std::string& kind, const std::string& what) {
    return Error("interaction", kind, what);
}

/// Symmetric m x m table v(xi, eta).
class PairPotential {
public:
    PairPotential() = default;

    PairPotential(std::size_t points, std::vector<double> values)
        : points_(points), values_(std::move(values)) {
        if (values_.size() != points_ * points_)
            throw interaction_error("InvalidPotential", "table size must be points^2");
        for (std::size_t i = 0; i < points_; ++i)
            for (std::size_t j = 0; j < points_; ++j) {
                double a = (*this)(i, j), b = (*this)(j, i);
                if (!std::isfinite(a)) throw interaction_error("InvalidPotential", "non-finite entry");
                if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
                    throw interaction_error("NonsymmetricPotential", "potential table must be symmetric");
            }
    }

    static PairPotential constant(std::size_t points, double c) {
        return PairPotential(points, std::vector<double>(points * points, c));
    }

    /// v(xi, eta) = c * xi * eta on point indices.
    static PairPotential product(std::size_t points, double c) {
        std::vector<double> t(points * points);
        for (std::size_t i = 0; i < points; ++i)
            for (std::size_t j = 0; j < points; ++j) t[i * points + j] = c * double(i) * double(j);
        return PairPotential(points, std::move(t));
    }

    std::size_t points() const noexcept { return points_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator()(std::size_t xi, std::size_t eta) const { return values_[xi * points_ + eta]; }

    /// Supremum norm (max |entry|).
    double norm() const {
        double n = 0.0;
        for (double v : values_) n = std::max(n, std::abs(v));
        return n;
    }

    PairPotential scaled(double s) const {
        std::vector<double> t = values_;
        for (double& v : t) v *= s;
        return PairPotential(points_, std::move(t));
    }

    PairPotential shifted(double c) const {
        std::vector<double> t = values_;
        for (double& v : t) v += c;
        return PairPotential(points_, std::move(t));
    }

private:
    std::size_t points_ = 0;
    std::vector<double> values_;
};

/// V(x, x') = (1/n) sum_j v(x(tau_j), x'(tau_j)). Exact for grid-valued loops.
inline double time_averaged_energy(const PairPotential& v, const Loop& x, const Loop& xp) {
    if (x.slices() != xp.slices())
        throw interaction_error("GridMismatch", "loops live on different grids");
    double acc = 0.0;
    for (std::size_t j = 0; j < x.slices(); ++j) acc += v(x.points[j], xp.points[j]);
    return acc / double(x.slices());
}

/// 16 (exp(4 norm) - 1).
inline double kappa_of_norm(double norm) { return 16.0 * std::expm1(4.0 * norm); }

inline double kappa(const PairPotential& v) { return kappa_of_norm(v.norm()); }

/// Edge potentials; edges without an entry carry v = 0.
class PotentialAssignment {
public:
    PotentialAssignment() = default;
    explicit PotentialAssignment(std::size_t points) : points_(points) {}

    void set(const Edge& e, PairPotential v) {
        if (points_ == 0) points_ = v.points();
        if (v.points() != points_)
            throw interaction_error("InvalidPotential", "potential tables must share the point count");
        per_edge_[e] = std::move(v);
    }

    /// nullptr when the edge carries the zero potential.
    const PairPotential* find(const Edge& e) const {
        auto it = per_edge_.find(e);
        return it == per_edge_.end() ? nullptr : &it->second;
    }

    double norm(const Edge& e) const {
        const PairPotential* p = find(e);
        return p ? p->norm() : 0.0;
    }
    double kappa(const Edge& e) const { return kappa_of_norm(norm(e)); }

    std::size_t points() const noexcept { return points_; }
    const std::map<Edge, PairPotential>& entries() const noexcept { return per_edge_; }

    /// All edges of g carry the same potential.
    static PotentialAssignment uniform(const Graph& g, const PairPotential& v) {
        PotentialAssignment a(v.points());
        for (const Edge& e : g.edges()) a.set(e, v);
        return a;
    }

    PotentialAssignment scaled(double s) const {
        PotentialAssignment out(points_);
        for (const auto& [e, v] : per_edge_) out.set(e, v.scaled(s));
        return out;
    }

    /// Every key must be an edge of g.
    void check_against(const Graph& g) const {
        for (const auto& [e, v] : per_edge_)
            if (!g.adjacent(e.a, e.b))
                throw interaction_error("UnknownEdge", "potential given for non-edge <" +
                                                           std::to_string(e.a) + "," +
                                                           std::to_string(e.b) + ">");
    }

private:
    std::size_t points_ = 0;
    std::map<Edge, PairPotential> per_edge_;
};

/// sup over edges of g of kappa_e.
inline double kappa(const PotentialAssignment& v, const Graph& g) {
    double k = 0.0;
    for (const Edge& e : g.edges()) k = std::max(k, v.kappa(e));
    return k;
}

inline bool in_omega_delta(const PotentialAssignment& v, const Graph& g, double delta) {
    return kappa(v, g) <= delta;
}

// ---------------------------------------------------------------------------
// Random potential ensembles

struct PointMassLaw { double value = 0.0; };
struct TwoPointLaw { double low = 0.0; double high = 0.0; double p_high = 0.0; };
struct UniformLaw { double low = 0.0; double high = 0.0; };
struct TruncatedExponentialLaw { double rate = 1.0; double max = 1.0; };

using AmplitudeLaw = std::variant<PointMassLaw, TwoPointLaw, UniformLaw, TruncatedExponentialLaw>;

/// Product law over edges: each edge gets an independent random symmetric
/// table, rescaled so its sup norm equals an amplitude drawn from `law`.
struct EnsembleSpec {
    AmplitudeLaw law;
    double lambda = 0.0;
    double theta = 0.5;

    /// Norm 2 lambda with probability theta_prime, lambda / 2 otherwise.
    static EnsembleSpec two_point_mixture(double lambda, double theta_prime, double theta) {
        return {TwoPointLaw{lambda / 2.0, 2.0 * lambda, theta_prime}, lambda, theta};
    }

    void validate() const {
        if (!(lambda > 0.0)) throw interaction_error("RangeViolation", "lambda must be positive");
        if (!(theta > 0.0 && theta < 1.0))
            throw interaction_error("RangeViolation", "theta must lie in (0, 1)");
        std::visit(
            [](const auto& l) {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, PointMassLaw>) {
                    if (l.value < 0.0) throw interaction_error("RangeViolation", "amplitude must be >= 0");
                } else if constexpr (std::is_same_v<L, TwoPointLaw>) {
                    if (l.low < 0.0 || l.high < 0.0 || l.p_high < 0.0 || l.p_high > 1.0)
                        throw interaction_error("RangeViolation", "invalid two-point law");
                } else if constexpr (std::is_same_v<L, UniformLaw>) {
                    if (l.low < 0.0 || l.high < l.low)
                        throw interaction_error("RangeViolation", "invalid uniform law");
                } else {
                    if (!(l.rate > 0.0) || !(l.max > 0.0))
                        throw interaction_error("RangeViolation", "invalid truncated exponential law");
                }
            },
            law);
    }
};

inline EnsembleSpec make_ensemble(const std::string& family, const std::map<std::string, double>& p,
                                  double lambda, double theta) {
    auto get = [&](const char* key, double dflt) {
        auto it = p.find(key);
        return it == p.end() ? dflt : it->second;
    };
    EnsembleSpec spec;
    spec.lambda = lambda;
    spec.theta = theta;
    if (family == "point_mass")
        spec.law = PointMassLaw{get("value", 0.0)};
    else if (family == "two_point")
        spec.law = TwoPointLaw{get("low", lambda / 2.0), get("high", 2.0 * lambda), get("p_high", 0.0)};
    else if (family == "uniform")
        spec.law = UniformLaw{get("low", 0.0), get("high", lambda)};
    else if (family == "truncated_exponential")
        spec.law = TruncatedExponentialLaw{get("rate", 1.0 / lambda), get("max", 4.0 * lambda)};
    else
        throw interaction_error("UnknownFamily", "unknown ensemble family '" + family + "'");
    spec.validate();
    return spec;
}

template <class Rng>
double sample_amplitude(const AmplitudeLaw& law, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return std::visit(
        [&](const auto& l) -> double {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, PointMassLaw>) {
                return l.value;
            } else if constexpr (std::is_same_v<L, TwoPointLaw>) {
                return unit(rng) < l.p_high ? l.high : l.low;
            } else if constexpr (std::is_same_v<L, UniformLaw>) {
                return l.low + (l.high - l.low) * unit(rng);
            } else {
                double u = unit(rng);
                return -std::log1p(-u * -std::expm1(-l.rate * l.max)) / l.rate;
            }
        },
        law);
}

/// Random symmetric table with sup norm exactly `amplitude`.
template <class Rng>
PairPotential random_potential(std::size_t points, double amplitude, Rng& rng) {
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    std::vector<double> t(points * points, 0.0);
    double mx = 0.0;
    for (std::size_t i = 0; i < points; ++i)
        for (std::size_t j = i; j < points; ++j) {
            double e = entry(rng);
            t[i * points + j] = t[j * points + i] = e;
            mx = std::max(mx, std::abs(e));
        }
    if (mx > 0.0)
        for (double& x : t) x *= amplitude / mx;
    return PairPotential(points, std::move(t));
}

struct SampledAssignment {
    PotentialAssignment potentials;
    double tail_fraction = 0.0;  ///< fraction of edges with ||v_e|| > lambda
};

/// Independent draw per edge, edges visited in sorted order.
template <class Rng>
SampledAssignment sample_assignment(const EnsembleSpec& spec, const Graph& g, std::size_t points,
                                    Rng& rng) {
    spec.validate();
    SampledAssignment out{PotentialAssignment(points), 0.0};
    std::size_t above = 0;
    for (const Edge& e : g.edges()) {
        double amp = sample_amplitude(spec.law, rng);
        PairPotential v = random_potential(points, amp, rng);
        if (v.norm() > spec.lambda) ++above;
        out.potentials.set(e, std::move(v));
    }
    out.tail_fraction = g.edges().empty() ? 0.0 : double(above) / double(g.edges().size());
    return out;
}

} // namespace egibbs
