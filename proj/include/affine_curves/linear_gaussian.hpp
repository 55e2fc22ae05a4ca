#pragma once

// Exact transition moments of linear SDEs dY = (c - M Y) du + G dW.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace affine_curves {

template <int N>
struct LinearTransition {
    Eigen::Matrix<double, N, N> F;    // e^{-M dt}
    Eigen::Matrix<double, N, 1> C;    // int_0^dt e^{-M u} du c
    Eigen::Matrix<double, N, N> Cov;  // int_0^dt e^{-M u} G G' e^{-M' u} du
};

/// Mean map of dY = (c - M Y) du over dt via the augmented exponential.
template <int N>
std::pair<Eigen::Matrix<double, N, N>, Eigen::Matrix<double, N, 1>> mean_propagator(
    const Eigen::Matrix<double, N, N>& M, const Eigen::Matrix<double, N, 1>& c, double dt) {
    Eigen::Matrix<double, N + 1, N + 1> aug = Eigen::Matrix<double, N + 1, N + 1>::Zero();
    aug.template topLeftCorner<N, N>() = -M * dt;
    aug.template topRightCorner<N, 1>() = c * dt;
    const Eigen::Matrix<double, N + 1, N + 1> e = aug.exp();
    return {e.template topLeftCorner<N, N>(), e.template topRightCorner<N, 1>()};
}

/// Van Loan block exponential for the transition covariance.
template <int N>
LinearTransition<N> linear_transition(const Eigen::Matrix<double, N, N>& M, const Eigen::Matrix<double, N, 1>& c,
                                      const Eigen::Matrix<double, N, N>& GGt, double dt) {
    LinearTransition<N> out;
    auto [F, C] = mean_propagator<N>(M, c, dt);
    out.F = F;
    out.C = C;

    Eigen::Matrix<double, 2 * N, 2 * N> vl = Eigen::Matrix<double, 2 * N, 2 * N>::Zero();
    vl.template topLeftCorner<N, N>() = M * dt;
    vl.template topRightCorner<N, N>() = GGt * dt;
    vl.template bottomRightCorner<N, N>() = -M.transpose() * dt;
    const Eigen::Matrix<double, 2 * N, 2 * N> e = vl.exp();
    const Eigen::Matrix<double, N, N> phi = e.template bottomRightCorner<N, N>().transpose();
    Eigen::Matrix<double, N, N> cov = phi * e.template topRightCorner<N, N>();
    out.Cov = 0.5 * (cov + cov.transpose());
    return out;
}

/// Symmetric square root factor L with L L' = S, negative eigenvalues clipped.
template <int N>
Eigen::Matrix<double, N, N> psd_factor(const Eigen::Matrix<double, N, N>& S) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(S);
    Eigen::Matrix<double, N, 1> d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

}  // namespace affine_curves
