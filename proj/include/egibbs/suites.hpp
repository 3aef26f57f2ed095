#pragma once

// Randomized verification suites shared by the CLI and the acceptance tests.

#include <cstdint>
#include <random>
#include <vector>

#include "egibbs/certificate.hpp"
#include "egibbs/gibbs.hpp"
#include "egibbs/rng.hpp"

namespace egibbs {

namespace detail {

template <class Rng>
std::size_t pick(std::size_t lo, std::size_t hi, Rng& rng) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <class Rng>
Graph random_small_graph(std::size_t max_vertices, Rng& rng) {
    std::size_t n = pick(2, max_vertices, rng);
    return random_bounded_graph(n, std::max<std::size_t>(n - 1, 1), pick(0, 3, rng), rng());
}

/// Random nonempty subset of `from` (in id order).
template <class Rng>
VertexSet random_subset(const std::vector<VertexId>& from, Rng& rng) {
    std::vector<VertexId> out;
    while (out.empty())
        for (VertexId v : from)
            if (std::bernoulli_distribution(0.5)(rng)) out.push_back(v);
    return VertexSet(std::move(out));
}

} // namespace detail

struct Lemma1SuiteOptions {
    std::size_t instances = 100;
    std::size_t max_vertices = 5;
    double max_norm = 0.2;
    std::vector<std::size_t> points{2, 3};
    std::vector<std::size_t> slices{2, 3};
    std::size_t max_length = 8;
    std::size_t max_attempts = 5000;
};

struct Lemma1Instance {
    std::size_t attempt = 0;
    std::size_t vertices = 0;
    std::size_t edges = 0;
    std::size_t points = 0;
    std::size_t slices = 0;
    VertexSet inner;
    VertexSet outer;
    VertexId pin = 0;
    double max_norm = 0.0;
    Lemma1Result result;
};

struct Lemma1SuiteResult {
    std::vector<Lemma1Instance> instances;  ///< converged instances only
    std::size_t attempts = 0;
    std::size_t skipped_divergent = 0;
    std::size_t violations = 0;
};

/// Draws random instances (connected graphs, volumes, pins, positive f,
/// potentials with log-uniform norms in [max_norm/1000, max_norm]) until
/// `instances` instances with convergent path sums have been checked.
inline Lemma1SuiteResult lemma1_random_suite(const Lemma1SuiteOptions& opt, std::uint64_t seed) {
    Lemma1SuiteResult out;
    for (std::size_t attempt = 0; attempt < opt.max_attempts && out.instances.size() < opt.instances; ++attempt) {
        ++out.attempts;
        std::mt19937_64 rng(derive_seed(seed, "lemma1", attempt));
        Graph g = detail::random_small_graph(opt.max_vertices, rng);
        const std::size_t m = opt.points[detail::pick(0, opt.points.size() - 1, rng)];
        const std::size_t n = opt.slices[detail::pick(0, opt.slices.size() - 1, rng)];

        PotentialAssignment v(m);
        std::uniform_real_distribution<double> log_norm(std::log(opt.max_norm * 1e-3), std::log(opt.max_norm));
        double worst = 0.0;
        for (const Edge& e : g.edges()) {
            double amp = std::exp(log_norm(rng));
            worst = std::max(worst, amp);
            v.set(e, random_potential(m, amp, rng));
        }

        const auto& ids = g.vertices();
        VertexId pin = ids[detail::pick(0, ids.size() - 1, rng)];
        std::vector<VertexId> others;
        for (VertexId x : ids)
            if (x != pin) others.push_back(x);
        VertexSet inner = detail::random_subset(others, rng);
        VertexSet outer = g.vertex_set();
        if (std::bernoulli_distribution(0.5)(rng)) {
            std::vector<VertexId> extra;
            for (VertexId x : ids)
                if (!inner.contains(x) && x != pin && std::bernoulli_distribution(0.5)(rng)) extra.push_back(x);
            outer = inner.united(VertexSet{pin}).united(VertexSet(extra));
        }

        // convergence depends only on the graph and norms; check it before enumerating
        bool converged = true;
        for (VertexId l : inner) converged = converged && path_sum(g, v, outer, l, pin, opt.max_length).converged;
        if (!converged) {
            ++out.skipped_divergent;
            continue;
        }

        GibbsModel model(g, BridgeMeasure(HeatKernelModel::discrete_laplacian(complete_weights(m)), TimeGrid(n)), v);
        const std::size_t L = model.loops_per_site();
        ConfigFunction f{inner, std::vector<double>(checked_power(L, inner.size()))};
        std::uniform_real_distribution<double> fval(0.5, 2.0);
        for (double& x : f.values) x = fval(rng);
        std::size_t xa = detail::pick(0, L - 1, rng), xb = detail::pick(0, L - 1, rng);

        Lemma1Instance inst;
        inst.attempt = attempt;
        inst.vertices = g.size();
        inst.edges = g.edges().size();
        inst.points = m;
        inst.slices = n;
        inst.inner = inner;
        inst.outer = outer;
        inst.pin = pin;
        inst.max_norm = worst;
        inst.result = lemma1_defect(model, outer, inner, f, pin, xa, xb, opt.max_length);
        if (!inst.result.holds.value_or(true)) ++out.violations;
        out.instances.push_back(std::move(inst));
    }
    return out;
}

struct DlrSuiteOptions {
    std::size_t instances = 50;
    std::size_t max_vertices = 4;
    double max_norm = 0.5;
    std::size_t points = 2;
    std::size_t slices = 2;
};

struct DlrInstance {
    VertexSet inner;
    VertexSet outer;
    std::size_t vertices = 0;
    double defect = 0.0;
};

/// Random nested pairs Lambda in Delta with random boundary loops and
/// potentials with norms uniform in [0, max_norm].
inline std::vector<DlrInstance> dlr_random_suite(const DlrSuiteOptions& opt, std::uint64_t seed) {
    std::vector<DlrInstance> out;
    for (std::size_t i = 0; i < opt.instances; ++i) {
        std::mt19937_64 rng(derive_seed(seed, "dlr", i));
        Graph g = detail::random_small_graph(opt.max_vertices, rng);
        PotentialAssignment v(opt.points);
        std::uniform_real_distribution<double> amp(0.0, opt.max_norm);
        for (const Edge& e : g.edges()) v.set(e, random_potential(opt.points, amp(rng), rng));
        GibbsModel model(g, BridgeMeasure(HeatKernelModel::discrete_laplacian(complete_weights(opt.points)),
                                          TimeGrid(opt.slices)),
                         v);
        VertexSet outer = detail::random_subset(g.vertices(), rng);
        VertexSet inner = detail::random_subset(outer.members(), rng);
        LoopFieldConfig y;
        for (VertexId x : g.vertices()) y[x] = model.bridge().sample(rng);
        out.push_back({inner, outer, g.size(), dlr_defect(model, inner, outer, y)});
    }
    return out;
}

/// Random positive tables on supports of size 1..max_support; returns the
/// smallest slack seen per inequality, in suite order.
inline std::vector<double> ratio_random_suite(std::size_t trials, std::size_t max_support, std::uint64_t seed) {
    std::vector<double> worst(4, std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < trials; ++t) {
        std::mt19937_64 rng(derive_seed(seed, "ratio", t));
        std::size_t n = detail::pick(1, max_support, rng);
        std::uniform_real_distribution<double> u(0.05, 3.0);
        std::vector<double> p(n), a(n), ap(n), b(n), c(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = u(rng);
            a[i] = u(rng);
            ap[i] = a[i] * std::uniform_real_distribution<double>(0.7, 1.3)(rng);
            c[i] = u(rng);
            b[i] = c[i] * std::uniform_real_distribution<double>(0.5, 1.5)(rng);
        }
        auto res = ratio_inequality_suite(p, a, ap, b, c);
        for (std::size_t k = 0; k < 4; ++k) worst[k] = std::min(worst[k], res.checks[k].slack());
    }
    return worst;
}

} // namespace egibbs
