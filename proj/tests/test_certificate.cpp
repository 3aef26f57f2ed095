#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "egibbs/certificate.hpp"
#include "egibbs/suites.hpp"

using namespace egibbs;

namespace {

/// Independent oracle: every walk from `from` to `to` inside `volume` with at
/// most `max_len` edges, filtered through is_admissible and weighted by path_weight.
double brute_force_sum(const Graph& g, const PotentialAssignment& v, const VertexSet& volume, VertexId from,
                       VertexId to, std::size_t max_len) {
    double total = 0.0;
    std::vector<VertexId> walk{from};
    std::function<void()> grow = [&] {
        if (walk.size() > 1 && walk.back() == to) {
            Path p{walk};
            if (is_admissible(g, p).admissible) total += path_weight(g, v, p);
        }
        if (walk.size() - 1 == max_len) return;
        for (VertexId w : g.neighbors(walk.back())) {
            if (!volume.contains(w)) continue;
            walk.push_back(w);
            grow();
            walk.pop_back();
        }
    };
    grow();
    return total;
}

PotentialAssignment random_assignment(const Graph& g, double max_norm, std::mt19937_64& rng) {
    PotentialAssignment v(2);
    std::uniform_real_distribution<double> amp(0.0, max_norm);
    for (const Edge& e : g.edges()) v.set(e, random_potential(2, amp(rng), rng));
    return v;
}

} // namespace

TEST(Admissibility, Examples) {
    Graph chain = build_graph({{1, 2}, {2, 3}});
    EXPECT_TRUE(is_admissible(chain, Path{{1, 2, 3}}).admissible);

    Graph edge = build_graph({{1, 2}});
    auto a = is_admissible(edge, Path{{1, 2, 1, 2}});
    EXPECT_FALSE(a.admissible);
    EXPECT_EQ(a.first_violated(), AdmissibilityRule::InteriorDegree);

    // the repeat of vertex 2 has only vertex 3 (degree 1) between; vertex 3 is
    // also interior with degree 1, so both rules report
    auto b = is_admissible(chain, Path{{1, 2, 3, 2, 3}});
    EXPECT_FALSE(b.admissible);
    EXPECT_TRUE(b.violates(AdmissibilityRule::RepeatDominance));
    EXPECT_TRUE(b.violates(AdmissibilityRule::InteriorDegree));
}

TEST(Admissibility, RepeatDominanceAlone) {
    // star center 0 (degree 3) with a tail 3-4: path 1,0,2,0,3 repeats 0 with a
    // degree-1 vertex between, interior degrees otherwise fine except leaf 2
    Graph g = build_graph({{0, 1}, {0, 2}, {0, 3}, {3, 4}, {2, 5}});
    auto r = is_admissible(g, Path{{1, 0, 2, 0, 3}});
    EXPECT_FALSE(r.admissible);
    ASSERT_EQ(r.violated.size(), 1u);
    EXPECT_EQ(r.violated[0], AdmissibilityRule::RepeatDominance);
    // a repeat separated by an equal-degree vertex is fine
    Graph cyc = cycle_graph(3);
    EXPECT_TRUE(is_admissible(cyc, Path{{0, 1, 2, 0, 1}}).admissible);
}

TEST(Admissibility, EndpointsAndNonPaths) {
    Graph chain = build_graph({{1, 2}, {2, 3}});
    auto r = is_admissible(chain, Path{{1, 2, 3}}, std::make_pair(VertexId(1), VertexId(2)));
    EXPECT_EQ(r.first_violated(), AdmissibilityRule::Endpoints);
    try {
        is_admissible(chain, Path{{1, 3}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "uniqueness_cert.NotAPath");
    }
    EXPECT_THROW(is_admissible(chain, Path{{1}}), Error);
}

TEST(PathWeight, Examples) {
    Graph chain = build_graph({{1, 2}, {2, 3}});
    auto v = PotentialAssignment::uniform(chain, PairPotential::constant(2, 0.03));
    double k = kappa_of_norm(0.03);
    EXPECT_NEAR(path_weight(chain, v, Path{{1, 2, 3}}), k * k / 16.0, 1e-15);

    PotentialAssignment partial(2);
    partial.set(Edge(1, 2), PairPotential::constant(2, 0.03));
    EXPECT_EQ(path_weight(chain, partial, Path{{1, 2, 3}}), 0.0);

    Graph edge = build_graph({{0, 1}});
    auto ve = PotentialAssignment::uniform(edge, PairPotential::constant(2, 0.05));
    EXPECT_NEAR(path_weight(edge, ve, Path{{0, 1}}), 0.22140275816016983, 1e-15);
}

TEST(PathSum, ZeroPotential) {
    Graph g = grid_graph(3, 3);
    auto r = path_sum(g, PotentialAssignment(2), g.vertex_set(), 0, 8, 8);
    EXPECT_EQ(r.lower, 0.0);
    EXPECT_EQ(r.tail, 0.0);
    EXPECT_EQ(r.upper, 0.0);
    EXPECT_TRUE(r.converged);
}

TEST(PathSum, SingleEdgeIsExact) {
    Graph edge = build_graph({{1, 2}});
    for (double norm : {0.01, 0.05, 0.2})
        for (std::size_t L : {1u, 3u, 6u}) {
            auto v = PotentialAssignment::uniform(edge, PairPotential::constant(2, norm));
            auto r = path_sum(edge, v, edge.vertex_set(), 1, 2, L);
            EXPECT_NEAR(r.upper, std::expm1(4.0 * norm), 1e-15);
            EXPECT_EQ(r.tail, 0.0);
            EXPECT_EQ(r.paths_found, 1u);
        }
}

TEST(PathSum, ChainOfThree) {
    Graph chain = build_graph({{1, 2}, {2, 3}});
    auto v = PotentialAssignment::uniform(chain, PairPotential::constant(2, 0.03));
    double k = kappa_of_norm(0.03);
    auto r2 = path_sum(chain, v, chain.vertex_set(), 1, 3, 2);
    EXPECT_NEAR(r2.lower, k * k / 16.0, 1e-15);
    auto r8 = path_sum(chain, v, chain.vertex_set(), 1, 3, 8);
    // (1,2,3) is the only admissible path: any longer walk revisits 1 or 3 as an interior vertex
    EXPECT_EQ(r8.paths_found, 1u);
    EXPECT_NEAR(r8.lower, brute_force_sum(chain, v, chain.vertex_set(), 1, 3, 10), 1e-15);
}

TEST(PathSum, Errors) {
    Graph g = chain_graph(3);
    auto code = [&](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return std::string();
    };
    EXPECT_EQ(code([&] { path_sum(g, PotentialAssignment(2), g.vertex_set(), 1, 1, 4); }),
              "uniqueness_cert.SameEndpoints");
    EXPECT_EQ(code([&] { path_sum(g, PotentialAssignment(2), VertexSet{0, 1}, 0, 2, 4); }),
              "uniqueness_cert.OutsideVolume");
    EXPECT_EQ(code([&] { path_sum(g, PotentialAssignment(2), g.vertex_set(), 0, 2, 0); }),
              "uniqueness_cert.RangeViolation");
}

TEST(PathSum, AgreesWithBruteForceAndBoundsIt) {
    std::mt19937_64 rng(21);
    std::size_t checked = 0;
    for (int t = 0; t < 60; ++t) {
        Graph g = random_bounded_graph(2 + rng() % 4, 4, rng() % 4, rng());
        auto v = random_assignment(g, 0.05, rng);
        const auto& ids = g.vertices();
        VertexId a = ids[rng() % ids.size()], b = ids[rng() % ids.size()];
        if (a == b) continue;
        VertexSet vol = g.vertex_set();
        double oracle10 = brute_force_sum(g, v, vol, a, b, 10);
        auto r10 = path_sum(g, v, vol, a, b, 10);
        EXPECT_NEAR(r10.lower, oracle10, 1e-12 * std::max(1.0, oracle10));
        for (std::size_t L : {1u, 2u, 4u, 6u}) {
            auto r = path_sum(g, v, vol, a, b, L);
            EXPECT_NEAR(r.lower, brute_force_sum(g, v, vol, a, b, L), 1e-12 * std::max(1.0, oracle10));
            EXPECT_LE(r.lower, r.upper);
            if (r.converged) {
                EXPECT_LE(oracle10, r.upper * (1 + 1e-12));
            }
        }
        ++checked;
    }
    EXPECT_GT(checked, 30u);
}

TEST(PathSum, MonotoneInMaxLength) {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 20; ++t) {
        Graph g = random_bounded_graph(5, 3, 3, rng());
        auto v = random_assignment(g, 0.04, rng);
        double prev_lower = 0.0, prev_upper = std::numeric_limits<double>::infinity();
        for (std::size_t L = 1; L <= 9; ++L) {
            auto r = path_sum(g, v, g.vertex_set(), 0, 4, L);
            EXPECT_GE(r.lower, prev_lower);
            if (r.converged) {
                EXPECT_LE(r.upper, prev_upper * (1 + 1e-12));
                prev_upper = r.upper;
            }
            prev_lower = r.lower;
        }
    }
}

TEST(PathSum, DivergesWhenSpectralRadiusReachesOne) {
    Graph cyc = cycle_graph(6);
    // on a cycle the kappa-adjacency has spectral radius 2 kappa
    double norm = std::log1p(1.0 / 32.0) / 4.0 * 1.01;
    auto v = PotentialAssignment::uniform(cyc, PairPotential::constant(2, norm));
    auto r = path_sum(cyc, v, cyc.vertex_set(), 0, 3, 8);
    EXPECT_FALSE(r.converged);
    EXPECT_TRUE(std::isinf(r.upper));
    EXPECT_GE(r.spectral_radius_estimate, 1.0);
}

TEST(Lemma1, FreeModel) {
    Graph g = chain_graph(3);
    GibbsModel model(g, BridgeMeasure(two_point_model(), TimeGrid(2)), PotentialAssignment(2));
    auto f = constant_plus_indicator(VertexSet{0}, 4, 1.0, 0, 0);
    auto r = lemma1_defect(model, g.vertex_set(), VertexSet{0}, f, 2, 0, 3, 8);
    EXPECT_NEAR(r.lhs, 0.0, 1e-14);
    EXPECT_EQ(r.rhs, 0.0);
    EXPECT_TRUE(r.holds.value_or(false));
}

TEST(Lemma1, SingleEdge) {
    Graph edge = build_graph({{1, 2}});
    auto v = PotentialAssignment::uniform(edge, PairPotential::product(2, 0.05));
    GibbsModel model(edge, BridgeMeasure(two_point_model(), TimeGrid(2)), v);
    auto f = constant_plus_indicator(VertexSet{1}, 4, 1.0, 1, model.loop_index(Loop{{0, 0}}));
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) {
            auto r = lemma1_defect(model, edge.vertex_set(), VertexSet{1}, f, 2, a, b, 8);
            EXPECT_NEAR(r.rhs, 0.22140275816016983, 1e-12);
            EXPECT_TRUE(r.holds.value_or(false));
            EXPECT_LE(r.lhs, r.rhs);
        }
}

TEST(Lemma1, RandomSuite) {
    Lemma1SuiteOptions opt;
    opt.instances = 30;
    auto res = lemma1_random_suite(opt, 77);
    EXPECT_EQ(res.instances.size(), 30u);
    EXPECT_EQ(res.violations, 0u);
}

TEST(RatioSuite, DegenerateCases) {
    std::vector<double> p{0.2, 0.3, 0.5}, ones{2.0, 2.0, 2.0};
    auto r = ratio_inequality_suite(p, ones, ones, ones, ones);
    EXPECT_NEAR(r.checks[0].value, 1.0, 1e-15);
    EXPECT_NEAR(r.checks[0].lower, 1.0, 1e-15);
    EXPECT_NEAR(r.checks[0].upper, 1.0, 1e-15);
    EXPECT_NEAR(r.checks[1].value, 0.0, 1e-15);
    EXPECT_EQ(r.checks[1].upper, 0.0);

    std::vector<double> a{1.0, 2.0, 3.0}, c{0.5, 1.5, 0.7};
    auto s = ratio_inequality_suite(p, a, a, c, c);
    EXPECT_EQ(s.checks[1].upper, 0.0);
    EXPECT_NEAR(s.checks[1].value, 0.0, 1e-15);
}

TEST(RatioSuite, Errors) {
    std::vector<double> p{0.5, 0.5}, good{1.0, 1.0}, bad{1.0, 0.0}, shorter{1.0};
    EXPECT_THROW(ratio_inequality_suite(p, good, good, bad, good), Error);
    EXPECT_THROW(ratio_inequality_suite(p, good, good, shorter, good), Error);
}

TEST(RatioSuite, RandomInstancesHold) {
    for (double slack : ratio_random_suite(300, 8, 5)) EXPECT_GE(slack, -1e-12);
}

TEST(Theorem1, ZeroPotentialCertifies) {
    Graph g = grid_graph(4, 4);
    auto rep = certify_theorem1(g, PotentialAssignment(2), VertexSet{5}, Theorem1Params{});
    EXPECT_TRUE(rep.certified());
    EXPECT_EQ(rep.certified_radius, 1u);
    for (const auto& rec : rep.records) EXPECT_EQ(rec.bound, 0.0);
    for (auto [d, in] : rep.omega_delta) EXPECT_TRUE(in);
}

TEST(Theorem1, DivergentVerdict) {
    Graph cyc = cycle_graph(6);
    auto v = PotentialAssignment::uniform(cyc, PairPotential::constant(2, 0.05));
    Theorem1Params p;
    p.radii = {3};
    auto rep = certify_theorem1(cyc, v, VertexSet{0}, p);
    EXPECT_EQ(rep.verdict, Verdict::Divergent);
    EXPECT_EQ(rep.verdict_string(), "uncertified (divergent series)");
}

TEST(Theorem1, ChainDecaysGeometrically) {
    Graph g = chain_graph(9);
    auto v = PotentialAssignment::uniform(g, PairPotential::constant(2, 0.005));
    Theorem1Params p;
    p.radii = {1, 2, 3};
    auto rep = certify_theorem1(g, v, VertexSet{4}, p);
    ASSERT_EQ(rep.records.size(), 3u);
    const double k = kappa_of_norm(0.005);
    for (std::size_t i = 1; i < rep.records.size(); ++i) {
        double ratio = rep.records[i].bound / rep.records[i - 1].bound;
        EXPECT_LT(ratio, 1.0);
        EXPECT_GT(ratio, k / 2.0);
        EXPECT_LT(ratio, 2.0 * k);
    }
}

TEST(Theorem1, ScalingNeverUncertifies) {
    std::mt19937_64 rng(31);
    std::size_t certified = 0;
    for (int t = 0; t < 15; ++t) {
        Graph g = random_bounded_graph(8, 3, 3, rng());
        auto v = random_assignment(g, 0.004, rng);
        Theorem1Params p;
        p.threshold = 1e-2;
        auto rep = certify_theorem1(g, v, VertexSet{0}, p);
        if (!rep.certified()) continue;
        ++certified;
        for (double s : {0.0, 0.3, 0.7, 1.0}) EXPECT_TRUE(certify_theorem1(g, v.scaled(s), VertexSet{0}, p).certified());
    }
    EXPECT_GT(certified, 0u);
}

TEST(Theorem2, PointMassAtZeroAlwaysCertifies) {
    auto rep = certify_theorem2(chain_graph(6), make_ensemble("point_mass", {}, 0.003, 0.5), 2, 20, 1, VertexSet{3},
                                Theorem1Params{});
    EXPECT_EQ(rep.certified_fraction, 1.0);
    EXPECT_EQ(rep.mean_tail_fraction, 0.0);
}

TEST(Theorem2, LargeAmplitudesNeverCertify) {
    auto spec = make_ensemble("point_mass", {{"value", 0.2}}, 0.003, 0.5);
    auto rep = certify_theorem2(chain_graph(6), spec, 2, 10, 1, VertexSet{3}, Theorem1Params{});
    EXPECT_EQ(rep.certified_fraction, 0.0);
    EXPECT_EQ(rep.mean_tail_fraction, 1.0);
    for (const auto& t : rep.trials) EXPECT_EQ(t.verdict, Verdict::Divergent);
}

TEST(Theorem2, TrialsAreReproducible) {
    auto spec = EnsembleSpec::two_point_mixture(0.003, 0.2, 0.5);
    auto a = certify_theorem2(chain_graph(6), spec, 2, 25, 9, VertexSet{3}, Theorem1Params{});
    auto b = certify_theorem2(chain_graph(6), spec, 2, 25, 9, VertexSet{3}, Theorem1Params{});
    ASSERT_EQ(a.trials.size(), b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        EXPECT_EQ(a.trials[i].seed, b.trials[i].seed);
        EXPECT_EQ(a.trials[i].kappa, b.trials[i].kappa);
    }
}
