#pragma once

// Discrete-time loops x(tau_j) on a finite point model and the normalized
// Wiener bridge measure
//
//   chi(x) = prod_j p_{1/n}(x_j, x_{j+1 mod n}) sigma(x_j) / trace(e^{-H}).
//
// Weights are carried on the natural-log scale.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "egibbs/graph.hpp"
#include "egibbs/heat_kernel.hpp"

namespace egibbs {

inline Error loop_error(const std::string& kind, const std::string& what) {
    return Error("loop_space", kind, what);
}

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

/// Periodic path: points[j] is the position at tau_j; points[n] == points[0] implicitly.
struct Loop {
    std::vector<std::size_t> points;

    std::size_t slices() const noexcept { return points.size(); }
    std::size_t operator[](std::size_t j) const { return points[j % points.size()]; }
    auto operator<=>(const Loop&) const = default;
};

/// Map from vertex to loop; all loops share one grid.
using LoopFieldConfig = std::map<VertexId, Loop>;

/// Draws index i with probability weights[i] / sum(weights).
template <class Rng>
std::size_t draw_index(const std::vector<double>& weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    // u landed on the upper edge through rounding
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return 0;
}

/// m^n, or nullopt-like max() on overflow.
inline std::size_t checked_power(std::size_t base, std::size_t exp) {
    std::size_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && out > std::numeric_limits<std::size_t>::max() / base)
            return std::numeric_limits<std::size_t>::max();
        out *= base;
    }
    return out;
}

/// Bridge measure on one model and grid, with kernel tables p_{j/n} cached
/// for j = 1..n.
class BridgeMeasure {
public:
    BridgeMeasure(HeatKernelModel model, TimeGrid grid,
                  std::size_t enumeration_cap = kDefaultEnumerationCap)
        : model_(std::move(model)), grid_(grid), cap_(enumeration_cap) {
        for (std::size_t j = 1; j <= grid_.slices; ++j)
            tables_.push_back(model_.table(double(j) / double(grid_.slices)));
        const auto& p1 = tables_.back();
        double trace = 0.0;
        for (std::size_t x = 0; x < model_.point_count(); ++x) trace += p1(x, x) * model_.sigma()[x];
        log_normalizer_ = std::log(trace);
        for (double s : model_.sigma()) log_sigma_.push_back(std::log(s));
        const auto& step = tables_.front();
        log_step_.resize(step.values.size());
        for (std::size_t i = 0; i < step.values.size(); ++i) log_step_[i] = std::log(step.values[i]);
    }

    const HeatKernelModel& model() const noexcept { return model_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t points() const noexcept { return model_.point_count(); }
    std::size_t slices() const noexcept { return grid_.slices; }
    std::size_t enumeration_cap() const noexcept { return cap_; }

    /// p_{j/n} for 1 <= j <= n.
    const KernelTable& kernel_at(std::size_t j) const { return tables_.at(j - 1); }

    void validate(const Loop& loop) const {
        if (loop.slices() != grid_.slices)
            throw loop_error("GridMismatch", "loop length differs from the grid's slice count");
        for (std::size_t p : loop.points)
            if (p >= points()) throw loop_error("InvalidLoop", "point index out of range");
    }

    /// log[ prod_j p_{1/n}(x_j, x_{j+1}) sigma(x_j) ] (unnormalized).
    double log_weight(const Loop& loop) const {
        validate(loop);
        const std::size_t n = grid_.slices, m = points();
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += log_step_[loop.points[j] * m + loop.points[(j + 1) % n]] + log_sigma_[loop.points[j]];
        return acc;
    }

    /// Total unnormalized mass: trace(e^{-H}) = sum_xi p_1(xi,xi) sigma(xi).
    double normalizer() const { return std::exp(log_normalizer_); }
    double log_normalizer() const noexcept { return log_normalizer_; }

    double log_probability(const Loop& loop) const { return log_weight(loop) - log_normalizer_; }

    /// Exact sampler: x_0 with probability proportional to p_1(xi,xi) sigma(xi),
    /// then x_{j+1} proportional to p_{1/n}(x_j, .) p_{(n-j-1)/n}(., x_0) sigma(.).
    template <class Rng>
    Loop sample(Rng& rng) const {
        const std::size_t n = grid_.slices, m = points();
        const auto& sigma = model_.sigma();
        Loop loop;
        loop.points.resize(n);
        std::vector<double> w(m);
        const auto& p1 = tables_.back();
        for (std::size_t x = 0; x < m; ++x) w[x] = p1(x, x) * sigma[x];
        loop.points[0] = draw_index(w, rng);
        const std::size_t start = loop.points[0];
        const auto& step = tables_.front();
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const auto& rest = kernel_at(n - j - 1);
            for (std::size_t x = 0; x < m; ++x)
                w[x] = step(loop.points[j], x) * rest(x, start) * sigma[x];
            loop.points[j + 1] = draw_index(w, rng);
        }
        return loop;
    }

    /// m^n, saturating on overflow.
    std::size_t loop_count() const { return checked_power(points(), grid_.slices); }

    /// Loop number `index` in lexicographic order (first time slice most significant).
    Loop loop_at(std::size_t index) const {
        Loop loop;
        loop.points.resize(grid_.slices);
        for (std::size_t j = grid_.slices; j-- > 0;) {
            loop.points[j] = index % points();
            index /= points();
        }
        return loop;
    }

    std::size_t index_of(const Loop& loop) const {
        validate(loop);
        std::size_t idx = 0;
        for (std::size_t p : loop.points) idx = idx * points() + p;
        return idx;
    }

    void require_enumerable(std::size_t count) const {
        if (count > cap_)
            throw loop_error("EnumerationTooLarge", std::to_string(count) +
                                                        " items exceed the enumeration cap " +
                                                        std::to_string(cap_));
    }

    /// All m^n loops in lexicographic order.
    std::vector<Loop> enumerate() const {
        require_enumerable(loop_count());
        std::vector<Loop> out;
        out.reserve(loop_count());
        for (std::size_t i = 0; i < loop_count(); ++i) out.push_back(loop_at(i));
        return out;
    }

private:
    HeatKernelModel model_;
    TimeGrid grid_;
    std::size_t cap_;
    std::vector<KernelTable> tables_;
    std::vector<double> log_step_;
    std::vector<double> log_sigma_;
    double log_normalizer_ = 0.0;
};

inline double loop_log_weight(const HeatKernelModel& model, const TimeGrid& grid, const Loop& loop) {
    return BridgeMeasure(model, grid).log_weight(loop);
}

inline double bridge_normalizer(const HeatKernelModel& model, const TimeGrid& grid) {
    return BridgeMeasure(model, grid).normalizer();
}

/// sup_j d(a(tau_j), b(tau_j)) for a symmetric zero-diagonal point metric given row-major.
inline double loop_distance(const Loop& a, const Loop& b, const std::vector<double>& point_metric,
                            std::size_t points) {
    if (a.slices() != b.slices())
        throw loop_error("GridMismatch", "loops live on different grids");
    double d = 0.0;
    for (std::size_t j = 0; j < a.slices(); ++j)
        d = std::max(d, point_metric.at(a.points[j] * points + b.points[j]));
    return d;
}

/// CSV rows "vertex,j,point_index".
inline void write_loop_csv(std::ostream& out, const LoopFieldConfig& config) {
    out << "vertex,j,point_index\n";
    for (const auto& [v, loop] : config)
        for (std::size_t j = 0; j < loop.slices(); ++j) out << v << ',' << j << ',' << loop.points[j] << '\n';
}

} // namespace egibbs
