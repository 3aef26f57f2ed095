#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "egibbs/loop_space.hpp"

using namespace egibbs;

namespace {

/// Pearson statistic against exact probabilities, and the 1% critical value.
std::pair<double, double> chi_square(const std::vector<double>& counts, const std::vector<double>& probs) {
    double n = 0.0, stat = 0.0;
    for (double c : counts) n += c;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        double e = n * probs[i];
        stat += (counts[i] - e) * (counts[i] - e) / e;
    }
    boost::math::chi_squared dist(double(counts.size() - 1));
    return {stat, boost::math::quantile(boost::math::complement(dist, 0.01))};
}

} // namespace

TEST(LoopWeight, TwoPointConstantLoop) {
    BridgeMeasure b(two_point_model(), TimeGrid(2));
    EXPECT_NEAR(std::exp(b.log_weight(Loop{{0, 0}})), 0.6452351901491773, 1e-14);
    EXPECT_NEAR(std::exp(loop_log_weight(two_point_model(), TimeGrid(2), Loop{{1, 1}})), 0.6452351901491773, 1e-14);
}

TEST(LoopWeight, CyclicShiftInvariance) {
    BridgeMeasure b(HeatKernelModel::discrete_laplacian(cycle_weights(5)), TimeGrid(6));
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        Loop x = b.sample(rng);
        Loop y = x;
        std::rotate(y.points.begin(), y.points.begin() + 1, y.points.end());
        EXPECT_NEAR(b.log_weight(x), b.log_weight(y), 1e-12);
    }
}

TEST(LoopWeight, Validation) {
    BridgeMeasure b(two_point_model(), TimeGrid(2));
    try {
        b.log_weight(Loop{{0, 0, 0}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "loop_space.GridMismatch");
    }
    EXPECT_THROW(b.log_weight(Loop{{0, 2}}), Error);
}

TEST(Normalizer, TraceIdentity) {
    for (std::size_t n = 1; n <= 4; ++n) {
        BridgeMeasure b(two_point_model(), TimeGrid(n));
        EXPECT_NEAR(b.normalizer(), 1.3678794411714423, 1e-13);
        double sum = 0.0;
        for (const Loop& l : b.enumerate()) sum += std::exp(b.log_weight(l));
        EXPECT_NEAR(sum, 1.3678794411714423, 1e-13);
    }
    EXPECT_NEAR(bridge_normalizer(HeatKernelModel::single_point(), TimeGrid(3)), 1.0, 1e-15);
}

TEST(Normalizer, GridRefinementInvariance) {
    for (const auto& m : {two_point_model(), HeatKernelModel::discrete_laplacian(cycle_weights(6))})
        EXPECT_NEAR(bridge_normalizer(m, TimeGrid(2)), bridge_normalizer(m, TimeGrid(8)), 1e-10);
    // the truncated circle kernel is only positive for steps >= 1/2 at 16 points
    auto circle = HeatKernelModel::circle_spectral(16, 64);
    EXPECT_NEAR(bridge_normalizer(circle, TimeGrid(1)), bridge_normalizer(circle, TimeGrid(2)), 1e-10);
    EXPECT_THROW(bridge_normalizer(circle, TimeGrid(8)), Error);
}

TEST(Enumeration, OrderAndCount) {
    BridgeMeasure b(two_point_model(), TimeGrid(2));
    auto loops = b.enumerate();
    ASSERT_EQ(loops.size(), 4u);
    EXPECT_EQ(loops[0].points, (std::vector<std::size_t>{0, 0}));
    EXPECT_EQ(loops[1].points, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(loops[2].points, (std::vector<std::size_t>{1, 0}));
    EXPECT_EQ(loops[3].points, (std::vector<std::size_t>{1, 1}));
    for (std::size_t i = 0; i < loops.size(); ++i) EXPECT_EQ(b.index_of(loops[i]), i);

    BridgeMeasure c(HeatKernelModel::discrete_laplacian(complete_weights(3)), TimeGrid(3));
    EXPECT_EQ(c.enumerate().size(), 27u);
}

TEST(Enumeration, ProbabilitiesSumToOne) {
    for (std::size_t m : {2u, 3u})
        for (std::size_t n : {2u, 3u, 4u}) {
            BridgeMeasure b(HeatKernelModel::discrete_laplacian(complete_weights(m)), TimeGrid(n));
            double s = 0.0;
            for (const Loop& l : b.enumerate()) s += std::exp(b.log_probability(l));
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
}

TEST(Enumeration, CapIsEnforced) {
    BridgeMeasure b(HeatKernelModel::discrete_laplacian(complete_weights(3)), TimeGrid(4), 50);
    try {
        b.enumerate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "loop_space.EnumerationTooLarge");
    }
}

TEST(Sampler, MatchesEnumerationChiSquare) {
    for (std::size_t n : {2u, 3u}) {
        BridgeMeasure b(two_point_model(), TimeGrid(n));
        std::mt19937_64 rng(20240 + n);
        std::vector<double> counts(b.loop_count(), 0.0), probs;
        for (int k = 0; k < 100000; ++k) counts[b.index_of(b.sample(rng))] += 1.0;
        for (const Loop& l : b.enumerate()) probs.push_back(std::exp(b.log_probability(l)));
        auto [stat, crit] = chi_square(counts, probs);
        EXPECT_LT(stat, crit) << "n=" << n;
    }
}

TEST(Sampler, StartingPointMarginal) {
    std::vector<double> sigma{0.2, 0.3, 0.5};
    BridgeMeasure b(HeatKernelModel::discrete_laplacian(complete_weights(3), sigma), TimeGrid(4));
    std::mt19937_64 rng(11);
    const int draws = 100000;
    std::vector<double> counts(3, 0.0);
    for (int k = 0; k < draws; ++k) counts[b.sample(rng).points[0]] += 1.0;
    const auto& p1 = b.kernel_at(4);
    for (std::size_t x = 0; x < 3; ++x) {
        double p = p1(x, x) * sigma[x] / b.normalizer();
        double se = std::sqrt(p * (1 - p) / draws);
        EXPECT_NEAR(counts[x] / draws, p, 3 * se);
    }
}

TEST(Sampler, SinglePointModel) {
    BridgeMeasure b(HeatKernelModel::single_point(), TimeGrid(3));
    std::mt19937_64 rng(1);
    EXPECT_EQ(b.sample(rng).points, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(LoopDistance, Basics) {
    std::vector<double> d{0, 1, 1, 0};
    EXPECT_DOUBLE_EQ(loop_distance(Loop{{0, 1}}, Loop{{0, 1}}, d, 2), 0.0);
    EXPECT_DOUBLE_EQ(loop_distance(Loop{{0, 0}}, Loop{{0, 1}}, d, 2), 1.0);
    std::mt19937_64 rng(2);
    BridgeMeasure b(two_point_model(), TimeGrid(5));
    for (int t = 0; t < 20; ++t) {
        Loop x = b.sample(rng), y = b.sample(rng);
        EXPECT_EQ(loop_distance(x, y, d, 2), loop_distance(y, x, d, 2));
    }
    EXPECT_THROW(loop_distance(Loop{{0}}, Loop{{0, 1}}, d, 2), Error);
}

TEST(LoopCsv, Format) {
    std::ostringstream out;
    write_loop_csv(out, LoopFieldConfig{{4, Loop{{1, 0}}}});
    EXPECT_EQ(out.str(), "vertex,j,point_index\n4,0,1\n4,1,0\n");
}
