#pragma once

// Parameter set, state vector and affine coefficient matrices of the joint
// SOFR / EFFR / LIBOR / term-repo model.
//
// Full state ordering (8 coordinates):
//   0 r_s    SOFR short rate              (Gaussian)
//   1 theta  stochastic mean of r_s       (Gaussian)
//   2 zeta   EFFR - SOFR spread           (Gaussian)
//   3 lambda credit-downgrade jump spread (pure jump, exponential decay)
//   4 phi    funding-liquidity jump spread(pure jump, exponential decay)
//   5 xi     intensity of lambda jumps    (square root)
//   6 eta    stochastic mean of xi        (square root)
//   7 nu     intensity of phi jumps       (square root)
//
// The reduced state used for time-series work drops lambda and phi:
//   (r_s, theta, zeta, xi, eta, nu).

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "affine_curves/error.hpp"

namespace affine_curves {

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

namespace idx {
inline constexpr int r = 0;
inline constexpr int theta = 1;
inline constexpr int zeta = 2;
inline constexpr int lambda = 3;
inline constexpr int phi = 4;
inline constexpr int xi = 5;
inline constexpr int eta = 6;
inline constexpr int nu = 7;
}  // namespace idx

/// Positions of the reduced-state coordinates inside the full state.
inline constexpr std::array<int, 6> kReducedToFull{idx::r, idx::theta, idx::zeta, idx::xi, idx::eta, idx::nu};

inline constexpr double kDefaultMeanJump = 0.02;

struct ModelParams {
    double kappa_r = 0.0;
    double kappa_theta = 0.0;
    double kappa_zeta = 0.0;
    double kappa_xi = 0.0;
    double kappa_eta = 0.0;
    double kappa_nu = 0.0;

    double theta_theta = 0.0;
    double theta_zeta = 0.0;
    double theta_eta = 0.0;
    double theta_nu = 0.0;

    double sigma_r = 0.0;
    double sigma_theta = 0.0;
    double sigma_zeta = 0.0;
    double sigma_xi = 0.0;
    double sigma_eta = 0.0;
    double sigma_nu = 0.0;

    double rho = 0.0;

    double beta_lambda = 0.0;
    double beta_phi = 0.0;

    // Fixed, never estimated.
    double mean_jump = kDefaultMeanJump;

    double mu_r = 0.0;
    double mu_theta = 0.0;
    double mu_zeta = 0.0;
    double mu_xi = 0.0;
    double mu_eta = 0.0;
    double mu_nu = 0.0;

    double meas_sigma_sofr = 0.0;
    double meas_sigma_effr = 0.0;
    double meas_sigma_libor = 0.0;

    /// Published full-sample estimates (measurement sigmas converted from bp).
    static ModelParams reference() {
        ModelParams p;
        p.kappa_r = 1.2394;
        p.kappa_theta = 0.0273;
        p.kappa_zeta = 0.5945;
        p.kappa_xi = 8.2375;
        p.kappa_eta = 0.1299;
        p.kappa_nu = 1.6624;
        p.theta_theta = 0.0306;
        p.theta_zeta = 0.0;
        p.theta_eta = 0.0163;
        p.theta_nu = 2.4408;
        p.sigma_r = 0.0032;
        p.sigma_theta = 0.0071;
        p.sigma_zeta = 0.0006;
        p.sigma_xi = 2.8610;
        p.sigma_eta = 0.7715;
        p.sigma_nu = 3.1921;
        p.rho = 0.0650;
        p.beta_lambda = 5.1952;
        p.beta_phi = 37.3898;
        p.mean_jump = kDefaultMeanJump;
        p.mu_r = -1.3117;
        p.mu_theta = 0.0003;
        p.mu_zeta = -0.1095;
        p.mu_xi = 0.8202;
        p.mu_eta = 0.1451;
        p.mu_nu = -0.2445;
        p.meas_sigma_sofr = 2.3094e-4;
        p.meas_sigma_effr = 2.0621e-4;
        p.meas_sigma_libor = 2.8949e-4;
        return p;
    }

    bool operator==(const ModelParams&) const = default;
};

enum class Constraint { Positive, NonNegative, Unbounded, Correlation };

struct ParamDescriptor {
    std::string_view name;
    double ModelParams::*member;
    Constraint constraint;
    double scale;     // typical magnitude, used for optimizer steps and finite differences
    bool estimable;
};

inline constexpr std::array<ParamDescriptor, 29> kParamTable{{
    {"kappa_r", &ModelParams::kappa_r, Constraint::Positive, 1.0, true},
    {"kappa_theta", &ModelParams::kappa_theta, Constraint::Positive, 0.1, true},
    {"kappa_zeta", &ModelParams::kappa_zeta, Constraint::Positive, 1.0, true},
    {"kappa_xi", &ModelParams::kappa_xi, Constraint::Positive, 1.0, true},
    {"kappa_eta", &ModelParams::kappa_eta, Constraint::Positive, 0.1, true},
    {"kappa_nu", &ModelParams::kappa_nu, Constraint::Positive, 1.0, true},
    {"theta_theta", &ModelParams::theta_theta, Constraint::Unbounded, 0.01, true},
    {"theta_zeta", &ModelParams::theta_zeta, Constraint::Unbounded, 0.001, true},
    {"theta_eta", &ModelParams::theta_eta, Constraint::NonNegative, 0.01, true},
    {"theta_nu", &ModelParams::theta_nu, Constraint::NonNegative, 1.0, true},
    {"sigma_r", &ModelParams::sigma_r, Constraint::NonNegative, 0.001, true},
    {"sigma_theta", &ModelParams::sigma_theta, Constraint::NonNegative, 0.001, true},
    {"sigma_zeta", &ModelParams::sigma_zeta, Constraint::NonNegative, 0.001, true},
    {"sigma_xi", &ModelParams::sigma_xi, Constraint::NonNegative, 1.0, true},
    {"sigma_eta", &ModelParams::sigma_eta, Constraint::NonNegative, 1.0, true},
    {"sigma_nu", &ModelParams::sigma_nu, Constraint::NonNegative, 1.0, true},
    {"rho", &ModelParams::rho, Constraint::Correlation, 0.1, true},
    {"beta_lambda", &ModelParams::beta_lambda, Constraint::Positive, 1.0, true},
    {"beta_phi", &ModelParams::beta_phi, Constraint::Positive, 10.0, true},
    {"mean_jump", &ModelParams::mean_jump, Constraint::Positive, 0.01, false},
    {"mu_r", &ModelParams::mu_r, Constraint::Unbounded, 1.0, true},
    {"mu_theta", &ModelParams::mu_theta, Constraint::Unbounded, 1.0, true},
    {"mu_zeta", &ModelParams::mu_zeta, Constraint::Unbounded, 1.0, true},
    {"mu_xi", &ModelParams::mu_xi, Constraint::Unbounded, 1.0, true},
    {"mu_eta", &ModelParams::mu_eta, Constraint::Unbounded, 1.0, true},
    {"mu_nu", &ModelParams::mu_nu, Constraint::Unbounded, 1.0, true},
    {"meas_sigma_sofr", &ModelParams::meas_sigma_sofr, Constraint::Positive, 1e-4, true},
    {"meas_sigma_effr", &ModelParams::meas_sigma_effr, Constraint::Positive, 1e-4, true},
    {"meas_sigma_libor", &ModelParams::meas_sigma_libor, Constraint::Positive, 1e-4, true},
}};

inline const ParamDescriptor* find_param(std::string_view name) {
    for (const auto& d : kParamTable)
        if (d.name == name) return &d;
    return nullptr;
}

struct ValidationReport {
    std::vector<std::string> findings;

    bool ok() const { return findings.empty(); }

    bool contains(std::string_view text) const {
        for (const auto& f : findings)
            if (f.find(text) != std::string::npos) return true;
        return false;
    }

    std::string to_string() const {
        std::string out;
        for (const auto& f : findings) {
            if (!out.empty()) out += "; ";
            out += f;
        }
        return out;
    }
};

inline ValidationReport validate_params(const ModelParams& p) {
    ValidationReport report;
    for (const auto& d : kParamTable) {
        const double v = p.*d.member;
        const std::string name(d.name);
        if (!std::isfinite(v)) {
            report.findings.push_back(name + " is not finite");
            continue;
        }
        switch (d.constraint) {
            case Constraint::Positive:
                if (!(v > 0.0)) report.findings.push_back(name + " must be > 0");
                break;
            case Constraint::NonNegative:
                if (!(v >= 0.0)) report.findings.push_back(name + " must be >= 0");
                break;
            case Constraint::Correlation:
                if (v < -1.0 || v > 1.0) report.findings.push_back(name + " out of [-1,1]");
                break;
            case Constraint::Unbounded:
                break;
        }
    }
    return report;
}

inline void require_valid(const ModelParams& p) {
    const auto report = validate_params(p);
    if (!report.ok()) throw ValidationError("invalid model parameters: " + report.to_string());
}

struct StateVector {
    double r_s = 0.0;
    double theta_s = 0.0;
    double zeta = 0.0;
    double lambda = 0.0;
    double phi = 0.0;
    double xi = 0.0;
    double eta = 0.0;
    double nu = 0.0;

    Vec8 vec() const {
        Vec8 v;
        v << r_s, theta_s, zeta, lambda, phi, xi, eta, nu;
        return v;
    }

    Vec6 reduced() const {
        Vec6 v;
        v << r_s, theta_s, zeta, xi, eta, nu;
        return v;
    }

    static StateVector from_vec(const Vec8& v) {
        return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
    }

    /// Expands a reduced state; the jump spreads are set to zero (panel renewal).
    static StateVector from_reduced(const Vec6& v) {
        return {v[0], v[1], v[2], 0.0, 0.0, v[3], v[4], v[5]};
    }

    bool at_renewal() const { return lambda == 0.0 && phi == 0.0; }

    bool operator==(const StateVector&) const = default;
};

/// Integrand selector R of the transform E[exp(-int R'X du)]. Instruments whose
/// exponent is +int(...) pass negated entries.
class SelectorVector {
public:
    SelectorVector() { coeffs_.fill(0); }

    explicit SelectorVector(const std::array<int, 8>& coeffs) : coeffs_(coeffs) {
        for (int c : coeffs_)
            if (c < -1 || c > 1) throw InputError("selector entries must lie in {-1, 0, 1}");
    }

    int operator[](std::size_t i) const { return coeffs_[i]; }
    const std::array<int, 8>& coeffs() const { return coeffs_; }

    Vec8 vec() const {
        Vec8 v;
        for (int i = 0; i < 8; ++i) v[i] = coeffs_[static_cast<std::size_t>(i)];
        return v;
    }

    bool operator==(const SelectorVector&) const = default;
    auto operator<=>(const SelectorVector&) const = default;

    static SelectorVector zero() { return SelectorVector{}; }
    /// exp(+int r_s + zeta + lambda + phi)
    static SelectorVector libor() { return SelectorVector({-1, 0, -1, -1, -1, 0, 0, 0}); }
    /// LIBOR exponent with the credit spread switched off
    static SelectorVector libor_ex_credit() { return SelectorVector({-1, 0, -1, 0, -1, 0, 0, 0}); }
    /// exp(+int r_s + phi)
    static SelectorVector repo() { return SelectorVector({-1, 0, 0, 0, -1, 0, 0, 0}); }
    /// exp(+int r_s): SOFR accumulation account
    static SelectorVector sofr_accrual() { return SelectorVector({-1, 0, 0, 0, 0, 0, 0, 0}); }
    /// exp(-int r_s): SOFR pseudo zero-coupon bond
    static SelectorVector sofr_discount() { return SelectorVector({1, 0, 0, 0, 0, 0, 0, 0}); }
    /// exp(+int zeta)
    static SelectorVector effr_spread_accrual() { return SelectorVector({0, 0, -1, 0, 0, 0, 0, 0}); }
    /// exp(-int r_s + lambda): survival-weighted discounting
    static SelectorVector cds() { return SelectorVector({1, 0, 0, 1, 0, 0, 0, 0}); }
    /// exp(-int lambda): survival probability
    static SelectorVector survival() { return SelectorVector({0, 0, 0, 1, 0, 0, 0, 0}); }

private:
    std::array<int, 8> coeffs_;
};

/// dX = (drift - K X) du + Sigma D(X) dW + dJ, drift = K theta.
struct AffineCoefficients {
    Mat8 K = Mat8::Zero();
    Vec8 theta = Vec8::Zero();
    Vec8 drift = Vec8::Zero();
    Mat8 Sigma = Mat8::Zero();
    double mean_jump = kDefaultMeanJump;

    /// Diagonal of D(X): unit loading on Gaussian factors, none on jump
    /// spreads, sqrt of the (floored) level on square-root factors.
    static Vec8 diffusion_loading(const StateVector& x) {
        Vec8 d;
        d << 1.0, 1.0, 1.0, 0.0, 0.0, std::sqrt(std::max(x.xi, 0.0)), std::sqrt(std::max(x.eta, 0.0)),
            std::sqrt(std::max(x.nu, 0.0));
        return d;
    }
};

inline Mat8 volatility_matrix(const ModelParams& p) {
    Mat8 S = Mat8::Zero();
    S(idx::r, idx::r) = p.sigma_r;
    S(idx::theta, idx::r) = p.sigma_theta * p.rho;
    S(idx::theta, idx::theta) = p.sigma_theta * std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    S(idx::zeta, idx::zeta) = p.sigma_zeta;
    S(idx::xi, idx::xi) = p.sigma_xi;
    S(idx::eta, idx::eta) = p.sigma_eta;
    S(idx::nu, idx::nu) = p.sigma_nu;
    return S;
}

/// Risk-neutral coefficients; throws ValidationError on invalid parameters.
inline AffineCoefficients build_affine_coefficients(const ModelParams& p) {
    require_valid(p);
    AffineCoefficients c;
    c.K(idx::r, idx::r) = p.kappa_r;
    c.K(idx::r, idx::theta) = -p.kappa_r;
    c.K(idx::theta, idx::theta) = p.kappa_theta;
    c.K(idx::zeta, idx::zeta) = p.kappa_zeta;
    c.K(idx::lambda, idx::lambda) = p.beta_lambda;
    c.K(idx::phi, idx::phi) = p.beta_phi;
    c.K(idx::xi, idx::xi) = p.kappa_xi;
    c.K(idx::xi, idx::eta) = -p.kappa_xi;
    c.K(idx::eta, idx::eta) = p.kappa_eta;
    c.K(idx::nu, idx::nu) = p.kappa_nu;

    c.theta << p.theta_theta, p.theta_theta, p.theta_zeta, 0.0, 0.0, p.theta_eta, p.theta_eta, p.theta_nu;
    c.drift = c.K * c.theta;
    c.Sigma = volatility_matrix(p);
    c.mean_jump = p.mean_jump;
    return c;
}

template <typename Derived>
Mat6 reduce_matrix(const Eigen::MatrixBase<Derived>& m) {
    Mat6 out;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) out(i, j) = m(kReducedToFull[i], kReducedToFull[j]);
    return out;
}

template <typename Derived>
Vec6 reduce_vector(const Eigen::MatrixBase<Derived>& v) {
    Vec6 out;
    for (int i = 0; i < 6; ++i) out[i] = v[kReducedToFull[i]];
    return out;
}

inline Vec6 market_price_of_risk(const ModelParams& p) {
    Vec6 mu;
    mu << p.mu_r, p.mu_theta, p.mu_zeta, p.mu_xi, p.mu_eta, p.mu_nu;
    return mu;
}

/// Physical-measure drift of the reduced state, dX = K (theta - X) du + ...
struct PMeasureDrift {
    Mat6 K;
    Vec6 theta;
    Vec6 drift;  // K * theta, available even if K is singular
    bool stationary = false;
};

inline bool eigenvalues_have_positive_real_part(const Mat6& K) {
    Eigen::EigenSolver<Mat6> es(K, false);
    for (int i = 0; i < 6; ++i)
        if (!(es.eigenvalues()[i].real() > 0.0)) return false;
    return true;
}

/// Drift matrix and drift constant of the reduced state under P without
/// inverting K^P. Used where stationarity is not required.
inline std::pair<Mat6, Vec6> p_measure_drift_unchecked(const ModelParams& p) {
    const AffineCoefficients q = build_affine_coefficients(p);
    const Mat6 Kq = reduce_matrix(q.K);
    const Vec6 thq = reduce_vector(q.theta);
    const Mat6 S = reduce_matrix(q.Sigma);
    const Vec6 mu = market_price_of_risk(p);

    Vec6 delta1;
    delta1 << 1, 1, 1, 0, 0, 0;
    Mat6 delta2 = Mat6::Zero();
    delta2.diagonal() << 0, 0, 0, 1, 1, 1;

    const Mat6 S_mu = S * mu.asDiagonal();
    const Mat6 Kp = Kq - S_mu * delta2;
    const Vec6 drift = Kq * thq + S_mu * delta1;
    return {Kp, drift};
}

/// K^P = K^Q - Sigma diag(mu) delta2, theta^P = (K^P)^{-1}[K^Q theta^Q + Sigma diag(mu) delta1]
/// on the reduced state. Throws ModelError("non-invertible P-drift") if K^P is singular.
inline PMeasureDrift to_p_measure(const ModelParams& p) {
    auto [Kp, drift] = p_measure_drift_unchecked(p);
    Eigen::FullPivLU<Mat6> lu(Kp);
    lu.setThreshold(1e-14);
    if (!lu.isInvertible()) throw ModelError("non-invertible P-drift");
    PMeasureDrift out;
    out.K = Kp;
    out.drift = drift;
    out.theta = lu.solve(drift);
    out.stationary = eigenvalues_have_positive_real_part(Kp);
    return out;
}

/// Full 8-dimensional coefficients with the reduced block replaced by its
/// P-measure counterpart. The jump-spread rows keep their Q form.
inline AffineCoefficients build_p_coefficients(const ModelParams& p) {
    AffineCoefficients c = build_affine_coefficients(p);
    auto [Kp, drift] = p_measure_drift_unchecked(p);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) c.K(kReducedToFull[i], kReducedToFull[j]) = Kp(i, j);
        c.drift[kReducedToFull[i]] = drift[i];
    }
    Eigen::FullPivLU<Mat6> lu(Kp);
    const Vec6 th = lu.isInvertible() ? Vec6(lu.solve(drift)) : Vec6::Constant(std::nan(""));
    for (int i = 0; i < 6; ++i) c.theta[kReducedToFull[i]] = th[i];
    return c;
}

/// Linear reduced-state dynamics dX = (c - K X) du + Sigma D(X) dW under one measure.
struct ReducedDynamics {
    Mat6 K;
    Vec6 c;
    Mat6 Sigma;
};

enum class Measure { P, Q };

inline ReducedDynamics reduced_dynamics(const ModelParams& p, Measure m) {
    const AffineCoefficients q = build_affine_coefficients(p);
    ReducedDynamics d;
    d.Sigma = reduce_matrix(q.Sigma);
    if (m == Measure::Q) {
        d.K = reduce_matrix(q.K);
        d.c = reduce_vector(q.drift);
    } else {
        auto [Kp, drift] = p_measure_drift_unchecked(p);
        d.K = Kp;
        d.c = drift;
    }
    return d;
}

}  // namespace affine_curves
