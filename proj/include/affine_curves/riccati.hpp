#pragma once

// Riccati system for E[exp(-int_0^tau R'X du + initial_A + initial_B'X_tau)] = exp(A(tau) + B(tau)'X_0)
// under exponential jumps in lambda (intensity xi) and phi (intensity nu), plus
// the extended transform (a, b) and the closed-form Gaussian average integrals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "affine_curves/error.hpp"
#include "affine_curves/model.hpp"

namespace affine_curves {

inline constexpr double kDefaultOdeStep = 1.0 / 3650.0;
/// Abort once a jump coordinate of B passes this fraction of 1/mean_jump.
inline constexpr double kSingularityGuard = 0.9;

namespace detail {

inline void riccati_rhs(const AffineCoefficients& c, const Vec8& R, const Vec8& B, double& dA, Vec8& dB) {
    const double pole = 1.0 / c.mean_jump;
    const Vec8 v = c.Sigma.transpose() * B;
    dB = -R - c.K.transpose() * B;
    for (int j = idx::xi; j <= idx::nu; ++j) dB[j] += 0.5 * v[j] * v[j];
    dB[idx::xi] += B[idx::lambda] / (pole - B[idx::lambda]);
    dB[idx::nu] += B[idx::phi] / (pole - B[idx::phi]);
    dA = c.drift.dot(B) + 0.5 * v.head<3>().squaredNorm();
}

inline void extended_rhs(const AffineCoefficients& c, const Vec8& B, const Vec8& b, double& da, Vec8& db) {
    const double pole = 1.0 / c.mean_jump;
    const Vec8 v = c.Sigma.transpose() * B;
    const Vec8 w = c.Sigma.transpose() * b;
    db = -c.K.transpose() * b;
    for (int j = idx::xi; j <= idx::nu; ++j) db[j] += v[j] * w[j];
    const double gl = pole - B[idx::lambda];
    const double gp = pole - B[idx::phi];
    db[idx::xi] += pole * b[idx::lambda] / (gl * gl);
    db[idx::nu] += pole * b[idx::phi] / (gp * gp);
    da = c.drift.dot(b) + v.head<3>().dot(w.head<3>());
}

inline void check_guard(const AffineCoefficients& c, const Vec8& B, double tau) {
    const double limit = kSingularityGuard / c.mean_jump;
    if (!(B[idx::lambda] < limit) || !(B[idx::phi] < limit))
        throw SingularityError("Riccati jump coordinate reached the transform singularity at tau=" + std::to_string(tau),
                               tau);
}

inline std::size_t step_count(double tau_max, double step) {
    if (!(tau_max > 0.0) || !std::isfinite(tau_max)) throw InputError("tau_max must be > 0");
    if (!(step > 0.0) || !std::isfinite(step)) throw InputError("step must be > 0");
    return static_cast<std::size_t>(std::max(1.0, std::ceil(tau_max / step - 1e-9)));
}

inline double hermite(double y0, double y1, double d0, double d1, double h, double s) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

}  // namespace detail

struct RiccatiSolution {
    std::vector<double> tau_grid;
    std::vector<double> A_values;
    std::vector<Vec8> B_values;
    std::vector<double> dA_values;
    std::vector<Vec8> dB_values;
    SelectorVector selector;
    double initial_A = 0.0;
    Vec8 initial_B = Vec8::Zero();

    double tau_max() const { return tau_grid.back(); }

    /// Locates the grid interval containing tau and its local coordinate in [0,1].
    std::pair<std::size_t, double> locate(double tau) const {
        if (tau < 0.0 || tau > tau_max() * (1.0 + 1e-12))
            throw InputError("tau " + std::to_string(tau) + " outside the solved range [0, " +
                             std::to_string(tau_max()) + "]");
        const std::size_t n = tau_grid.size() - 1;
        const double h = tau_max() / static_cast<double>(n);
        std::size_t i = std::min(n - 1, static_cast<std::size_t>(tau / h));
        return {i, std::clamp((tau - tau_grid[i]) / (tau_grid[i + 1] - tau_grid[i]), 0.0, 1.0)};
    }

    double A(double tau) const {
        auto [i, s] = locate(tau);
        if (s == 0.0) return A_values[i];
        if (s == 1.0) return A_values[i + 1];
        return detail::hermite(A_values[i], A_values[i + 1], dA_values[i], dA_values[i + 1],
                               tau_grid[i + 1] - tau_grid[i], s);
    }

    Vec8 B(double tau) const {
        auto [i, s] = locate(tau);
        if (s == 0.0) return B_values[i];
        if (s == 1.0) return B_values[i + 1];
        Vec8 out;
        const double h = tau_grid[i + 1] - tau_grid[i];
        for (int k = 0; k < 8; ++k)
            out[k] = detail::hermite(B_values[i][k], B_values[i + 1][k], dB_values[i][k], dB_values[i + 1][k], h, s);
        return out;
    }

    /// A(tau) + B(tau)'x
    double exponent(double tau, const Vec8& x) const { return A(tau) + B(tau).dot(x); }

    void write_csv(std::ostream& os) const {
        os << "tau,A,B1,B2,B3,B4,B5,B6,B7,B8\n";
        char buf[64];
        for (std::size_t i = 0; i < tau_grid.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", tau_grid[i]);
            os << buf;
            std::snprintf(buf, sizeof buf, ",%.17g", A_values[i]);
            os << buf;
            for (int k = 0; k < 8; ++k) {
                std::snprintf(buf, sizeof buf, ",%.17g", B_values[i][k]);
                os << buf;
            }
            os << '\n';
        }
    }
};

struct ExtendedSolution {
    std::vector<double> a_values;
    std::vector<Vec8> b_values;
    std::vector<double> da_values;
    std::vector<Vec8> db_values;
    RiccatiSolution base;

    double a(double tau) const {
        auto [i, s] = base.locate(tau);
        return detail::hermite(a_values[i], a_values[i + 1], da_values[i], da_values[i + 1],
                               base.tau_grid[i + 1] - base.tau_grid[i], s);
    }

    Vec8 b(double tau) const {
        auto [i, s] = base.locate(tau);
        Vec8 out;
        const double h = base.tau_grid[i + 1] - base.tau_grid[i];
        for (int k = 0; k < 8; ++k)
            out[k] = detail::hermite(b_values[i][k], b_values[i + 1][k], db_values[i][k], db_values[i + 1][k], h, s);
        return out;
    }

    /// (a + b'x) exp(A + B'x)
    double integrand(double tau, const Vec8& x) const {
        return (a(tau) + b(tau).dot(x)) * std::exp(base.exponent(tau, x));
    }
};

/// Fixed-step RK4 over [0, tau_max]; the step is shortened uniformly so the
/// grid ends exactly at tau_max.
inline RiccatiSolution solve_riccati(const AffineCoefficients& c, const SelectorVector& selector, double initial_A,
                                     const Vec8& initial_B, double tau_max, double step = kDefaultOdeStep) {
    const std::size_t n = detail::step_count(tau_max, step);
    const double h = tau_max / static_cast<double>(n);
    const Vec8 R = selector.vec();
    detail::check_guard(c, initial_B, 0.0);

    RiccatiSolution sol;
    sol.selector = selector;
    sol.initial_A = initial_A;
    sol.initial_B = initial_B;
    sol.tau_grid.resize(n + 1);
    sol.A_values.resize(n + 1);
    sol.B_values.resize(n + 1);
    sol.dA_values.resize(n + 1);
    sol.dB_values.resize(n + 1);

    double A = initial_A;
    Vec8 B = initial_B;
    double dA;
    Vec8 dB;
    detail::riccati_rhs(c, R, B, dA, dB);
    sol.tau_grid[0] = 0.0;
    sol.A_values[0] = A;
    sol.B_values[0] = B;
    sol.dA_values[0] = dA;
    sol.dB_values[0] = dB;

    for (std::size_t i = 0; i < n; ++i) {
        double a1 = dA, a2, a3, a4;
        Vec8 k1 = dB, k2, k3, k4;
        detail::riccati_rhs(c, R, B + 0.5 * h * k1, a2, k2);
        detail::riccati_rhs(c, R, B + 0.5 * h * k2, a3, k3);
        detail::riccati_rhs(c, R, B + h * k3, a4, k4);
        A += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
        B += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        const double tau = (i + 1 == n) ? tau_max : h * static_cast<double>(i + 1);
        detail::check_guard(c, B, tau);
        detail::riccati_rhs(c, R, B, dA, dB);
        sol.tau_grid[i + 1] = tau;
        sol.A_values[i + 1] = A;
        sol.B_values[i + 1] = B;
        sol.dA_values[i + 1] = dA;
        sol.dB_values[i + 1] = dB;
    }
    return sol;
}

inline RiccatiSolution solve_riccati(const ModelParams& p, const SelectorVector& selector, double initial_A,
                                     const Vec8& initial_B, double tau_max, double step = kDefaultOdeStep) {
    return solve_riccati(build_affine_coefficients(p), selector, initial_A, initial_B, tau_max, step);
}

/// Joint integration of (A, B) and the extended coefficients (a, b) with
/// b(0) = e_lambda. The selector and initial condition of `base` are reused
/// and the base is re-solved on the same grid.
inline ExtendedSolution solve_extended(const AffineCoefficients& c, const RiccatiSolution& base) {
    const std::size_t n = base.tau_grid.size() - 1;
    const double tau_max = base.tau_max();
    const double h = tau_max / static_cast<double>(n);
    const Vec8 R = base.selector.vec();

    ExtendedSolution ext;
    RiccatiSolution& sol = ext.base;
    sol.selector = base.selector;
    sol.initial_A = base.initial_A;
    sol.initial_B = base.initial_B;
    sol.tau_grid = base.tau_grid;
    sol.A_values.resize(n + 1);
    sol.B_values.resize(n + 1);
    sol.dA_values.resize(n + 1);
    sol.dB_values.resize(n + 1);
    ext.a_values.resize(n + 1);
    ext.b_values.resize(n + 1);
    ext.da_values.resize(n + 1);
    ext.db_values.resize(n + 1);

    double A = base.initial_A, a = 0.0;
    Vec8 B = base.initial_B;
    Vec8 b = Vec8::Zero();
    b[idx::lambda] = 1.0;

    auto rhs = [&](const Vec8& Bs, const Vec8& bs, double& dA, Vec8& dB, double& da, Vec8& db) {
        detail::riccati_rhs(c, R, Bs, dA, dB);
        detail::extended_rhs(c, Bs, bs, da, db);
    };
    auto store = [&](std::size_t i, double dA, const Vec8& dB, double da, const Vec8& db) {
        sol.A_values[i] = A;
        sol.B_values[i] = B;
        sol.dA_values[i] = dA;
        sol.dB_values[i] = dB;
        ext.a_values[i] = a;
        ext.b_values[i] = b;
        ext.da_values[i] = da;
        ext.db_values[i] = db;
    };

    double dA, da;
    Vec8 dB, db;
    rhs(B, b, dA, dB, da, db);
    store(0, dA, dB, da, db);
    for (std::size_t i = 0; i < n; ++i) {
        double A1 = dA, A2, A3, A4, a1 = da, a2, a3, a4;
        Vec8 B1 = dB, B2, B3, B4, b1 = db, b2, b3, b4;
        rhs(B + 0.5 * h * B1, b + 0.5 * h * b1, A2, B2, a2, b2);
        rhs(B + 0.5 * h * B2, b + 0.5 * h * b2, A3, B3, a3, b3);
        rhs(B + h * B3, b + h * b3, A4, B4, a4, b4);
        A += h / 6.0 * (A1 + 2 * A2 + 2 * A3 + A4);
        B += h / 6.0 * (B1 + 2 * B2 + 2 * B3 + B4);
        a += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
        b += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
        detail::check_guard(c, B, sol.tau_grid[i + 1]);
        rhs(B, b, dA, dB, da, db);
        store(i + 1, dA, dB, da, db);
    }
    return ext;
}

inline ExtendedSolution solve_extended(const ModelParams& p, const RiccatiSolution& base) {
    return solve_extended(build_affine_coefficients(p), base);
}

/// Integrals over [S, T] of the risk-neutral conditional means of r_s and zeta given time-t states.
struct GaussianIntegrals {
    double I_r = 0.0;
    double I_zeta = 0.0;
};

/// Affine form I_r = r0 + r_r * r_s + r_theta * theta_s, I_zeta = z0 + z_zeta * zeta.
struct GaussianIntegralLoadings {
    double r0 = 0.0, r_r = 0.0, r_theta = 0.0;
    double z0 = 0.0, z_zeta = 0.0;

    GaussianIntegrals evaluate(const StateVector& x) const {
        return {r0 + r_r * x.r_s + r_theta * x.theta_s, z0 + z_zeta * x.zeta};
    }
};

inline constexpr double kKappaDegeneracy = 1e-8;

/// Loadings for the window [a, b] measured from the conditioning time.
inline GaussianIntegralLoadings gaussian_integral_loadings(const ModelParams& p, double a, double b) {
    if (!(a >= 0.0) || !(b > a)) throw InputError("gaussian integrals need t <= S < T");
    const double kr = p.kappa_r, kt = p.kappa_theta, kz = p.kappa_zeta;
    const double ea = std::exp(-kr * a), eb = std::exp(-kr * b);
    const double g_r = (ea - eb) / kr;
    double c_theta;
    if (std::abs(kr - kt) < kKappaDegeneracy) {
        c_theta = (a * ea - b * eb) + (ea - eb) / kr;
    } else {
        const double g_t = (std::exp(-kt * a) - std::exp(-kt * b)) / kt;
        c_theta = kr * (g_t - g_r) / (kr - kt);
    }
    GaussianIntegralLoadings L;
    L.r_r = g_r;
    L.r_theta = c_theta;
    L.r0 = (b - a) * p.theta_theta - g_r * p.theta_theta - c_theta * p.theta_theta;
    L.z_zeta = (std::exp(-kz * a) - std::exp(-kz * b)) / kz;
    L.z0 = (b - a) * p.theta_zeta - L.z_zeta * p.theta_zeta;
    return L;
}

inline GaussianIntegrals gaussian_average_integrals(const ModelParams& p, const StateVector& x, double t, double S,
                                                    double T) {
    if (!(t <= S) || !(S < T)) throw InputError("gaussian integrals need t <= S < T");
    return gaussian_integral_loadings(p, S - t, T - t).evaluate(x);
}

}  // namespace affine_curves
