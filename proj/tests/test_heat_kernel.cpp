#include <gtest/gtest.h>

#include <cmath>

#include "egibbs/heat_kernel.hpp"

using namespace egibbs;

TEST(TwoPointModel, ClosedForm) {
    auto m = two_point_model();
    for (double tau : {0.1, 0.5, 1.0, 2.5}) {
        EXPECT_NEAR(m.kernel(tau, 0, 0), 1.0 + std::exp(-tau), 1e-14);
        EXPECT_NEAR(m.kernel(tau, 0, 1), 1.0 - std::exp(-tau), 1e-14);
    }
    EXPECT_NEAR(kernel_eval(m, 1.0, 0, 0), 1.3678794411714423, 1e-14);
}

TEST(HeatKernel, NonpositiveTime) {
    auto m = two_point_model();
    for (double tau : {0.0, -1.0}) {
        try {
            m.kernel(tau, 0, 0);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), "heat_kernel.NonpositiveTime");
        }
    }
}

TEST(HeatKernel, RejectsBadWeights) {
    Eigen::MatrixXd w(2, 2);
    w << 0, 1, 2, 0;
    EXPECT_THROW(HeatKernelModel::discrete_laplacian(w), Error);
    w << 0, -1, -1, 0;
    EXPECT_THROW(HeatKernelModel::discrete_laplacian(w), Error);
    Eigen::MatrixXd disconnected = Eigen::MatrixXd::Zero(3, 3);
    disconnected(0, 1) = disconnected(1, 0) = 1.0;
    try {
        HeatKernelModel::discrete_laplacian(disconnected);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "heat_kernel.DisconnectedModel");
    }
}

class KernelLaws : public ::testing::TestWithParam<int> {
protected:
    HeatKernelModel model() const {
        switch (GetParam()) {
        case 0: return two_point_model();
        case 1: return HeatKernelModel::discrete_laplacian(cycle_weights(16));
        case 2: return HeatKernelModel::circle_spectral(16, 64);
        case 3: {
            std::vector<double> sigma{0.1, 0.2, 0.3, 0.4};
            return HeatKernelModel::discrete_laplacian(complete_weights(4), sigma);
        }
        default: return HeatKernelModel::discrete_laplacian(complete_weights(3));
        }
    }
};

TEST_P(KernelLaws, SemigroupStochasticTrace) {
    auto m = model();
    for (std::size_t n : {2u, 3u, 4u, 8u})
        for (std::size_t i = 1; i <= n; ++i) {
            double s = double(i) / double(n);
            EXPECT_LT(stochasticity_defect(m, s), 1e-12);
            EXPECT_LT(trace_defect(m, s), 1e-11);
            for (std::size_t j = 1; i + j <= n; ++j) EXPECT_LT(semigroup_defect(m, s, double(j) / double(n)), 1e-12);
        }
}

TEST_P(KernelLaws, SymmetricInSigma) {
    auto m = model();
    for (std::size_t a = 0; a < m.point_count(); ++a)
        for (std::size_t b = 0; b < m.point_count(); ++b) EXPECT_NEAR(m.kernel(0.3, a, b), m.kernel(0.3, b, a), 1e-13);
}

INSTANTIATE_TEST_SUITE_P(Models, KernelLaws, ::testing::Values(0, 1, 2, 3, 4));

TEST(CircleSpectral, CutoffBeyondGridIsFolded) {
    auto a = HeatKernelModel::circle_spectral(8, 4);
    auto b = HeatKernelModel::circle_spectral(8, 64);
    EXPECT_EQ(a.mode_count(), 8u);
    EXPECT_EQ(b.mode_count(), 8u);
    for (std::size_t x = 0; x < 8; ++x) EXPECT_NEAR(a.kernel(0.7, 0, x), b.kernel(0.7, 0, x), 1e-15);

    auto coarse = HeatKernelModel::circle_spectral(8, 1);
    EXPECT_EQ(coarse.mode_count(), 3u);
    EXPECT_LT(stochasticity_defect(coarse, 0.5), 1e-13);
}

TEST(CircleSpectral, TableRejectsNonpositiveEntries) {
    auto m = HeatKernelModel::circle_spectral(16, 64);
    EXPECT_NO_THROW(m.table(1.0));
    try {
        m.table(0.125);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "heat_kernel.TruncationTooCoarse");
    }
    EXPECT_NO_THROW(m.raw_table(0.125));
}

TEST(SinglePoint, TrivialKernel) {
    auto m = HeatKernelModel::single_point();
    EXPECT_NEAR(m.kernel(0.5, 0, 0), 1.0, 1e-15);
}

TEST(TimeGrid, Validation) {
    EXPECT_THROW(TimeGrid(0), Error);
    TimeGrid g(4);
    EXPECT_DOUBLE_EQ(g.step(), 0.25);
    EXPECT_DOUBLE_EQ(g.time(5), 0.25);
}
