#pragma once

// Quasi-Kalman filter for the reduced state under P with missing quotes.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "affine_curves/error.hpp"
#include "affine_curves/linear_gaussian.hpp"
#include "affine_curves/measurement.hpp"
#include "affine_curves/model.hpp"
#include "affine_curves/simulation.hpp"

namespace affine_curves {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using MatX6 = Eigen::Matrix<double, Eigen::Dynamic, 6>;

inline Vec6 floor_square_root_factors(Vec6 x) {
    for (int k = 3; k < 6; ++k) x[k] = std::max(x[k], 0.0);
    return x;
}

/// Conditional covariance of the state over one step as an affine function of
/// the starting state: vec Z = G [x; 1]. The diffusion is evaluated along the
/// conditional mean path started at x, so
///   Z = int_0^dt e^{-K(dt-s)} Sigma D(m(s))^2 Sigma' e^{-K'(dt-s)} ds.
/// G is the upper-right block of one 43x43 exponential.
class CovarianceMap {
public:
    CovarianceMap(const ReducedDynamics& d, double dt) {
        const Mat6 I = Mat6::Identity();
        Eigen::Matrix<double, 36, 36> A;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) A.block<6, 6>(6 * i, 6 * j) = -(d.K(i, j) * I + (i == j ? d.K : Mat6::Zero()));
        // A = -(K (x) I + I (x) K): (E (x) E) vec M = vec(E M E') for E = e^{-Ku}.
        Eigen::Matrix<double, 36, 7> Gsrc = Eigen::Matrix<double, 36, 7>::Zero();
        for (int k = 0; k < 6; ++k) {
            const Vec6 s = d.Sigma.col(k);
            const Mat6 outer = s * s.transpose();
            const Eigen::Map<const Eigen::Matrix<double, 36, 1>> v(outer.data());
            if (k < 3)
                Gsrc.col(6) += v;
            else
                Gsrc.col(k) = v;
        }
        Eigen::Matrix<double, 7, 7> M = Eigen::Matrix<double, 7, 7>::Zero();
        M.topLeftCorner<6, 6>() = -d.K;
        M.topRightCorner<6, 1>() = d.c;

        Eigen::Matrix<double, 43, 43> big = Eigen::Matrix<double, 43, 43>::Zero();
        big.topLeftCorner<36, 36>() = A * dt;
        big.topRightCorner<36, 7>() = Gsrc * dt;
        big.bottomRightCorner<7, 7>() = M * dt;
        const Eigen::Matrix<double, 43, 43> e = big.exp();
        G_ = e.topRightCorner<36, 7>();
    }

    /// Z for a starting state; square-root coordinates are floored at zero.
    Mat6 operator()(const Vec6& x) const {
        Eigen::Matrix<double, 7, 1> y;
        y.head<6>() = floor_square_root_factors(x);
        y[6] = 1.0;
        const Eigen::Matrix<double, 36, 1> v = G_ * y;
        Mat6 Z = Eigen::Map<const Mat6>(v.data());
        return 0.5 * (Z + Z.transpose());
    }

    const Eigen::Matrix<double, 36, 7>& loading() const { return G_; }

private:
    Eigen::Matrix<double, 36, 7> G_;
};

inline Mat6 conditional_covariance_Z(const ModelParams& p, const Vec6& mean, double dt) {
    return CovarianceMap(reduced_dynamics(p, Measure::P), dt)(mean);
}

/// Solves K P + P K' = Q by the Kronecker form.
inline Mat6 solve_lyapunov(const Mat6& K, const Mat6& Q) {
    const Mat6 I = Mat6::Identity();
    Eigen::Matrix<double, 36, 36> L;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) L.block<6, 6>(6 * i, 6 * j) = K(i, j) * I + (i == j ? K : Mat6::Zero());
    const Eigen::Map<const Eigen::Matrix<double, 36, 1>> q(Q.data());
    const Eigen::Matrix<double, 36, 1> v = L.fullPivLu().solve(q);
    Mat6 P = Eigen::Map<const Mat6>(v.data());
    return 0.5 * (P + P.transpose());
}

/// Unconditional mean and covariance of the reduced state under P (the
/// diffusion frozen at the stationary mean).
inline std::pair<Vec6, Mat6> stationary_moments(const ModelParams& p) {
    const auto pm = to_p_measure(p);
    if (!pm.stationary) throw ModelError("P-drift violates stationarity");
    const auto d = reduced_dynamics(p, Measure::P);
    const Vec6 m = floor_square_root_factors(pm.theta);
    Vec6 g;
    g << 1.0, 1.0, 1.0, m[3], m[4], m[5];
    const Mat6 Q = d.Sigma * g.asDiagonal() * d.Sigma.transpose();
    return {m, solve_lyapunov(pm.K, Q)};
}

/// Symmetrizes and clips negative eigenvalues.
inline Mat6 make_psd(const Mat6& P) {
    Mat6 S = 0.5 * (P + P.transpose());
    Eigen::SelfAdjointEigenSolver<Mat6> es(S);
    if (es.eigenvalues().minCoeff() >= 0.0) return S;
    const Vec6 l = es.eigenvalues().cwiseMax(0.0);
    S = es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (S + S.transpose());
}

struct KalmanUpdate {
    Vec6 mean;
    Mat6 cov;
    VecX innovation;
    MatX innovation_cov;
    double loglik = 0.0;
    std::size_t n_obs = 0;
};

/// Selection matrix W(t_i): the rows of I_N flagged present.
inline MatX selection_matrix(const std::vector<unsigned char>& present) {
    std::size_t n = 0;
    for (auto v : present) n += v != 0;
    MatX W = MatX::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(present.size()));
    Eigen::Index r = 0;
    for (std::size_t k = 0; k < present.size(); ++k)
        if (present[k]) W(r++, static_cast<Eigen::Index>(k)) = 1.0;
    return W;
}

/// Measurement update y* = W(A + B x) + eps, eps ~ N(0, W H W'). Throws
/// ModelError if the innovation covariance is not positive definite.
inline KalmanUpdate kalman_step(const Vec6& prior_mean, const Mat6& prior_cov, const VecX& y, const VecX& A,
                                const MatX6& B, const VecX& h_diag, const std::vector<unsigned char>& present) {
    KalmanUpdate out;
    const MatX W = selection_matrix(present);
    out.n_obs = static_cast<std::size_t>(W.rows());
    if (out.n_obs == 0) {
        out.mean = prior_mean;
        out.cov = prior_cov;
        return out;
    }
    const VecX ys = W * y;
    const VecX As = W * A;
    const MatX6 Bs = W * B;
    const MatX Hs = W * MatX(h_diag.asDiagonal()) * W.transpose();

    out.innovation = ys - (As + Bs * prior_mean);
    MatX S = Bs * prior_cov * Bs.transpose() + Hs;
    S = 0.5 * (S + S.transpose());
    Eigen::LLT<MatX> llt(S);
    if (llt.info() != Eigen::Success) throw ModelError("innovation covariance not positive definite");
    out.innovation_cov = S;

    const MatX L = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index k = 0; k < L.rows(); ++k) logdet += 2.0 * std::log(L(k, k));
    const VecX Sinv_v = llt.solve(out.innovation);
    const double n = static_cast<double>(out.n_obs);
    out.loglik = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * (logdet + out.innovation.dot(Sinv_v));

    // Gain K = P B' S^{-1}
    const MatX6 SinvBP = llt.solve(Bs * prior_cov);
    const Eigen::Matrix<double, 6, Eigen::Dynamic> gain = SinvBP.transpose();
    out.mean = prior_mean + gain * out.innovation;
    out.cov = make_psd((Mat6::Identity() - gain * Bs) * prior_cov);
    return out;
}

struct FilterOptions {
    double dt = kPanelDt;
    PricingOptions pricing;
    bool keep_innovations = false;
};

struct FilterOutput {
    std::vector<Vec6> predicted_mean;
    std::vector<Mat6> predicted_cov;
    std::vector<Vec6> filtered_mean;
    std::vector<Mat6> filtered_cov;
    std::vector<VecX> innovations;
    std::vector<MatX> innovation_cov;
    std::vector<double> loglik_terms;
    std::vector<std::size_t> n_obs;
    double loglik = 0.0;
};

/// Measurement system of one date over all measurement columns.
struct MeasurementSystem {
    VecX y;
    VecX A;
    MatX6 B;
    VecX h;
    std::vector<unsigned char> present;
};

inline MeasurementSystem measurement_system(const MeasurementModel& mm, const PreparedPanel& pp, std::size_t i) {
    const auto m = static_cast<Eigen::Index>(pp.cols());
    MeasurementSystem s;
    s.y = VecX::Zero(m);
    s.A = VecX::Zero(m);
    s.B = MatX6::Zero(m, 6);
    s.h = VecX::Ones(m);
    s.present.assign(pp.cols(), 0);
    for (std::size_t k = 0; k < pp.cols(); ++k) {
        if (!pp.is_present(i, k)) continue;
        const auto& c = pp.cell(i, k);
        const auto [a, b] = mm.row(c);
        const auto r = static_cast<Eigen::Index>(k);
        s.y[r] = pp.y(i, k);
        s.A[r] = a;
        s.B.row(r) = b.transpose();
        const double sg = mm.sigma(c.group);
        s.h[r] = sg * sg;
        s.present[k] = 1;
    }
    return s;
}

/// Runs the filter; throws on infeasible parameters.
inline FilterOutput run_filter(const ModelParams& p, const PreparedPanel& pp, const FilterOptions& o = {}) {
    require_valid(p);
    auto [x, P] = stationary_moments(p);
    const auto d = reduced_dynamics(p, Measure::P);
    const auto [F, C] = mean_propagator<6>(d.K, d.c, o.dt);
    const CovarianceMap Z(d, o.dt);
    const MeasurementModel mm(p, MeasurementModel::horizons_of(pp), o.pricing);

    FilterOutput out;
    const std::size_t n = pp.rows();
    out.predicted_mean.reserve(n);
    out.predicted_cov.reserve(n);
    out.filtered_mean.reserve(n);
    out.filtered_cov.reserve(n);
    out.loglik_terms.reserve(n);
    out.n_obs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const Mat6 Zi = Z(x);
            x = F * x + C;
            P = make_psd(F * P * F.transpose() + Zi);
        }
        out.predicted_mean.push_back(x);
        out.predicted_cov.push_back(P);
        const auto sys = measurement_system(mm, pp, i);
        auto u = kalman_step(x, P, sys.y, sys.A, sys.B, sys.h, sys.present);
        if (!std::isfinite(u.loglik) || !u.mean.allFinite()) throw ModelError("filter produced non-finite values");
        x = u.mean;
        P = u.cov;
        out.filtered_mean.push_back(x);
        out.filtered_cov.push_back(P);
        out.loglik_terms.push_back(u.loglik);
        out.n_obs.push_back(u.n_obs);
        out.loglik += u.loglik;
        if (o.keep_innovations) {
            out.innovations.push_back(std::move(u.innovation));
            out.innovation_cov.push_back(std::move(u.innovation_cov));
        }
    }
    return out;
}

struct LoglikResult {
    double value = -std::numeric_limits<double>::infinity();
    bool feasible = false;
    std::string reason;
};

/// Quasi log-likelihood; infeasible parameters give -inf with a reason and
/// never throw.
inline LoglikResult quasi_loglik(const ModelParams& p, const PreparedPanel& pp, const FilterOptions& o = {}) {
    LoglikResult r;
    try {
        const auto report = validate_params(p);
        if (!report.ok()) {
            r.reason = report.to_string();
            return r;
        }
        const double v = run_filter(p, pp, o).loglik;
        if (!std::isfinite(v)) {
            r.reason = "non-finite log-likelihood";
            return r;
        }
        r.value = v;
        r.feasible = true;
    } catch (const std::exception& e) {
        r.reason = e.what();
    }
    return r;
}

inline LoglikResult quasi_loglik(const ModelParams& p, const ObservationPanel& panel, const FilterOptions& o = {}) {
    return quasi_loglik(p, prepare_panel(panel), o);
}

}  // namespace affine_curves
