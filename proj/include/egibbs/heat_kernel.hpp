#pragma once

// Finite point models of a compact manifold with exact heat kernels.
//
// A model is a point set with reference weights sigma and the spectral data of
// H = -(1/2) Laplacian, self-adjoint in L^2(sigma). Eigenvectors phi_k are
// sigma-orthonormal and the kernel relative to sigma is
//
//   p_tau(xi, eta) = sum_k exp(-tau lambda_k) phi_k(xi) phi_k(eta),
//
// so that (exp(-tau H) f)(xi) = sum_eta p_tau(xi, eta) f(eta) sigma(eta).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "egibbs/error.hpp"

namespace egibbs {

inline Error heat_error(const std::string& kind, const std::string& what) {
    return Error("heat_kernel", kind, what);
}

/// Equally spaced periodic imaginary-time grid tau_j = j / slices.
struct TimeGrid {
    std::size_t slices = 1;

    explicit TimeGrid(std::size_t n) : slices(n) {
        if (n == 0) throw heat_error("RangeViolation", "grid needs at least one slice");
    }
    double step() const noexcept { return 1.0 / double(slices); }
    double time(std::size_t j) const noexcept { return double(j % slices) / double(slices); }
    bool operator==(const TimeGrid&) const = default;
};

/// Dense kernel table p_tau(xi, eta), row-major.
struct KernelTable {
    double tau = 0.0;
    std::size_t points = 0;
    std::vector<double> values;

    double operator()(std::size_t xi, std::size_t eta) const { return values[xi * points + eta]; }
};

class HeatKernelModel {
public:
    /// Generator (Laplacian f)(xi) = sum_eta W(xi,eta) (f(eta) - f(xi)) / (m sigma(xi)).
    /// The diagonal of W is ignored. With uniform sigma this is the graph Laplacian of W.
    static HeatKernelModel discrete_laplacian(const Eigen::MatrixXd& weights,
                                              std::vector<double> sigma = {}) {
        const auto m = std::size_t(weights.rows());
        if (m == 0 || weights.cols() != weights.rows())
            throw heat_error("InvalidWeights", "weight matrix must be square and nonempty");
        if (sigma.empty()) sigma.assign(m, 1.0 / double(m));
        check_sigma(sigma, m);

        const double scale = std::max(1.0, weights.cwiseAbs().maxCoeff());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                if (std::abs(weights(i, j) - weights(j, i)) > 1e-12 * scale)
                    throw heat_error("NonsymmetricWeights", "weight matrix is not symmetric");
                if (weights(i, j) < 0.0)
                    throw heat_error("NegativeWeight", "off-diagonal weights must be nonnegative");
            }
        if (!connected(weights))
            throw heat_error("DisconnectedModel", "positive weights do not connect all points");

        // Symmetrized form S = Sigma^{1/2} H Sigma^{-1/2}.
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(Eigen::Index(m), Eigen::Index(m));
        const double md = double(m);
        for (std::size_t i = 0; i < m; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                double w = 0.5 * (weights(i, j) + weights(j, i));
                row += w;
                s(i, j) = -w / (2.0 * md * std::sqrt(sigma[i] * sigma[j]));
            }
            s(i, i) = row / (2.0 * md * sigma[i]);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
        if (eig.info() != Eigen::Success)
            throw heat_error("EigenFailure", "symmetric eigensolver did not converge");

        HeatKernelModel model;
        model.sigma_ = std::move(sigma);
        model.eigenvalues_.resize(m);
        model.modes_.resize(Eigen::Index(m), Eigen::Index(m));
        for (std::size_t k = 0; k < m; ++k) {
            model.eigenvalues_[k] = k == 0 ? 0.0 : std::max(0.0, eig.eigenvalues()(Eigen::Index(k)));
            for (std::size_t i = 0; i < m; ++i)
                model.modes_(Eigen::Index(i), Eigen::Index(k)) =
                    k == 0 ? 1.0
                           : eig.eigenvectors()(Eigen::Index(i), Eigen::Index(k)) /
                                 std::sqrt(model.sigma_[i]);
        }
        model.kind_ = "discrete_laplacian";
        return model;
    }

    /// m equally spaced points on the circle with uniform sigma and Fourier
    /// modes exp(i k theta), |k| <= cutoff, eigenvalue k^2/2. Modes are folded
    /// onto the m distinct grid frequencies, keeping the lowest |k| in each
    /// residue class, so the kernel is an exact semigroup on the grid.
    static HeatKernelModel circle_spectral(std::size_t m, std::size_t cutoff) {
        if (m < 2) throw heat_error("RangeViolation", "circle model needs at least 2 points");
        if (cutoff < 1) throw heat_error("RangeViolation", "mode cutoff must be >= 1");

        HeatKernelModel model;
        model.sigma_.assign(m, 1.0 / double(m));
        std::vector<std::vector<double>> cols;
        cols.emplace_back(m, 1.0);
        model.eigenvalues_.push_back(0.0);

        const double two_pi = 2.0 * std::numbers::pi;
        std::size_t kmax = std::min(cutoff, m / 2);
        for (std::size_t k = 1; k <= kmax; ++k) {
            double lambda = 0.5 * double(k * k);
            if (2 * k == m) {
                std::vector<double> c(m);
                for (std::size_t j = 0; j < m; ++j) c[j] = (j % 2 == 0) ? 1.0 : -1.0;
                cols.push_back(std::move(c));
                model.eigenvalues_.push_back(lambda);
                continue;
            }
            std::vector<double> c(m), s(m);
            for (std::size_t j = 0; j < m; ++j) {
                double theta = two_pi * double(j) / double(m);
                c[j] = std::sqrt(2.0) * std::cos(double(k) * theta);
                s[j] = std::sqrt(2.0) * std::sin(double(k) * theta);
            }
            cols.push_back(std::move(c));
            cols.push_back(std::move(s));
            model.eigenvalues_.push_back(lambda);
            model.eigenvalues_.push_back(lambda);
        }
        model.modes_.resize(Eigen::Index(m), Eigen::Index(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k)
            for (std::size_t i = 0; i < m; ++i) model.modes_(Eigen::Index(i), Eigen::Index(k)) = cols[k][i];
        model.kind_ = "circle_spectral";
        return model;
    }

    /// Single-point model: the only loop is constant, p_tau = 1.
    static HeatKernelModel single_point() {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 1);
        return discrete_laplacian(w);
    }

    std::size_t point_count() const noexcept { return sigma_.size(); }
    std::size_t mode_count() const noexcept { return eigenvalues_.size(); }
    const std::vector<double>& sigma() const noexcept { return sigma_; }
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    const Eigen::MatrixXd& modes() const noexcept { return modes_; }
    const std::string& kind() const noexcept { return kind_; }

    double kernel(double tau, std::size_t xi, std::size_t eta) const {
        if (!(tau > 0.0)) throw heat_error("NonpositiveTime", "kernel needs tau > 0");
        if (xi >= point_count() || eta >= point_count())
            throw heat_error("UnknownPoint", "point index out of range");
        double sum = 0.0;
        for (std::size_t k = 0; k < mode_count(); ++k)
            sum += std::exp(-tau * eigenvalues_[k]) * modes_(Eigen::Index(xi), Eigen::Index(k)) *
                   modes_(Eigen::Index(eta), Eigen::Index(k));
        return sum;
    }

    /// Full m x m table at tau, symmetrized, entries of any sign.
    KernelTable raw_table(double tau) const {
        if (!(tau > 0.0)) throw heat_error("NonpositiveTime", "kernel needs tau > 0");
        const std::size_t m = point_count();
        Eigen::VectorXd decay(static_cast<Eigen::Index>(mode_count()));
        for (std::size_t k = 0; k < mode_count(); ++k) decay(Eigen::Index(k)) = std::exp(-tau * eigenvalues_[k]);
        Eigen::MatrixXd p = modes_ * decay.asDiagonal() * modes_.transpose();
        KernelTable t{tau, m, std::vector<double>(m * m)};
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                t.values[i * m + j] = 0.5 * (p(Eigen::Index(i), Eigen::Index(j)) + p(Eigen::Index(j), Eigen::Index(i)));
        return t;
    }

    /// As raw_table, but throws TruncationTooCoarse unless every entry is
    /// strictly positive (a requirement for loop weights).
    KernelTable table(double tau) const {
        KernelTable t = raw_table(tau);
        for (double v : t.values)
            if (!(v > 0.0))
                throw heat_error("TruncationTooCoarse", "kernel entry is not positive at tau=" + std::to_string(tau) +
                                                            "; the point grid is too coarse for this time step");
        return t;
    }

    /// sum_k exp(-tau lambda_k).
    double spectral_trace(double tau) const {
        double s = 0.0;
        for (double l : eigenvalues_) s += std::exp(-tau * l);
        return s;
    }

private:
    HeatKernelModel() = default;

    static void check_sigma(const std::vector<double>& sigma, std::size_t m) {
        if (sigma.size() != m) throw heat_error("InvalidSigma", "sigma has the wrong length");
        double total = 0.0;
        for (double s : sigma) {
            if (!(s > 0.0)) throw heat_error("InvalidSigma", "sigma entries must be positive");
            total += s;
        }
        if (std::abs(total - 1.0) > 1e-12) throw heat_error("InvalidSigma", "sigma must sum to 1");
    }

    static bool connected(const Eigen::MatrixXd& w) {
        const auto m = std::size_t(w.rows());
        std::vector<bool> seen(m, false);
        std::queue<std::size_t> q;
        seen[0] = true;
        q.push(0);
        std::size_t count = 1;
        while (!q.empty()) {
            std::size_t u = q.front();
            q.pop();
            for (std::size_t v = 0; v < m; ++v)
                if (!seen[v] && v != u && w(Eigen::Index(u), Eigen::Index(v)) > 0.0) {
                    seen[v] = true;
                    ++count;
                    q.push(v);
                }
        }
        return count == m;
    }

    std::vector<double> sigma_;
    std::vector<double> eigenvalues_;
    Eigen::MatrixXd modes_;
    std::string kind_;
};

inline double kernel_eval(const HeatKernelModel& model, double tau, std::size_t xi, std::size_t eta) {
    return model.kernel(tau, xi, eta);
}

/// max over (xi, eta) of |sum_zeta p_s(xi,zeta) p_t(zeta,eta) sigma(zeta) - p_{s+t}(xi,eta)|.
inline double semigroup_defect(const HeatKernelModel& model, double s, double t) {
    const std::size_t m = model.point_count();
    KernelTable ps = model.raw_table(s), pt = model.raw_table(t), pst = model.raw_table(s + t);
    const auto& sigma = model.sigma();
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t z = 0; z < m; ++z) acc += ps(i, z) * pt(z, j) * sigma[z];
            worst = std::max(worst, std::abs(acc - pst(i, j)));
        }
    return worst;
}

/// max over xi of |sum_eta p_tau(xi,eta) sigma(eta) - 1|.
inline double stochasticity_defect(const HeatKernelModel& model, double tau) {
    KernelTable p = model.raw_table(tau);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.points; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < p.points; ++j) row += p(i, j) * model.sigma()[j];
        worst = std::max(worst, std::abs(row - 1.0));
    }
    return worst;
}

/// |sum_xi p_tau(xi,xi) sigma(xi) - sum_k exp(-tau lambda_k)|.
inline double trace_defect(const HeatKernelModel& model, double tau) {
    KernelTable p = model.raw_table(tau);
    double diag = 0.0;
    for (std::size_t i = 0; i < p.points; ++i) diag += p(i, i) * model.sigma()[i];
    return std::abs(diag - model.spectral_trace(tau));
}

/// Weight matrix of the n-cycle (nearest neighbours, unit weight).
inline Eigen::MatrixXd cycle_weights(std::size_t n) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = (i + 1) % n;
        if (i == j) continue;
        w(Eigen::Index(i), Eigen::Index(j)) = 1.0;
        w(Eigen::Index(j), Eigen::Index(i)) = 1.0;
    }
    return w;
}

/// Weight matrix with unit weight between every pair of distinct points.
inline Eigen::MatrixXd complete_weights(std::size_t n) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(Eigen::Index(n), Eigen::Index(n));
    w.diagonal().setZero();
    return w;
}

/// Two points with sigma = (1/2, 1/2) and Laplacian [[-1, 1], [1, -1]]:
/// p_tau(0,0) = 1 + e^{-tau}, p_tau(0,1) = 1 - e^{-tau}.
inline HeatKernelModel two_point_model() { return HeatKernelModel::discrete_laplacian(complete_weights(2)); }

} // namespace egibbs
