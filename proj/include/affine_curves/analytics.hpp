#pragma once

// LIBOR-OIS spread decomposition, OLS decomposition and futures risk premia.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "affine_curves/error.hpp"
#include "affine_curves/linear_gaussian.hpp"
#include "affine_curves/model.hpp"
#include "affine_curves/pricing.hpp"
#include "affine_curves/riccati.hpp"

namespace affine_curves {

enum class Tenor { M3, M6 };

inline double tenor_years(Tenor t) { return t == Tenor::M3 ? 0.25 : 0.5; }
inline const char* to_string(Tenor t) { return t == Tenor::M3 ? "3M" : "6M"; }

struct DecompositionRow {
    double date = 0.0;
    Tenor tenor = Tenor::M3;
    double libor_ois_spread = 0.0;
    double credit_component = 0.0;
    double funding_component = 0.0;
};

/// Single-period EFFR OIS rate over [t, t + tau]: (E[e^{int zeta}] / p^s - 1) / tau.
inline double single_period_ois_ff(const ModelParams& p, const StateVector& x, double t, double tau,
                                   const PricingOptions& o = {}) {
    const std::array<double, 1> schedule{t + tau};
    return ois_ff_rate(p, x, t, schedule, o);
}

/// spread = L - OIS^FF at the LIBOR tenor, credit = L - L(lambda off),
/// funding = spread - credit.
inline DecompositionRow decompose_libor_ois(const ModelParams& p, const StateVector& x, double t, Tenor tenor,
                                            const PricingOptions& o = {}) {
    const double tau = tenor_years(tenor);
    const double L = spot_libor(p, x, t, t + tau, o);
    const double L_ex = spot_libor_ex_credit(p, x, t, t + tau, o);
    const double ois = single_period_ois_ff(p, x, t, tau, o);
    DecompositionRow row;
    row.date = t;
    row.tenor = tenor;
    row.libor_ois_spread = L - ois;
    row.credit_component = L - L_ex;
    row.funding_component = row.libor_ois_spread - row.credit_component;
    return row;
}

struct RegressionResult {
    double alpha = 0.0;
    double beta = 0.0;
    double alpha_stderr = 0.0;
    double beta_stderr = 0.0;
    std::vector<double> credit;  // beta * spread_repo
};

/// OLS of spread_ois on spread_repo with intercept.
inline RegressionResult regression_decomposition(std::span<const double> spread_ois,
                                                 std::span<const double> spread_repo) {
    const std::size_t n = spread_ois.size();
    if (n != spread_repo.size()) throw InputError("regression series differ in length");
    if (n < 3) throw InputError("regression needs at least 3 observations");
    const auto [lo, hi] = std::minmax_element(spread_repo.begin(), spread_repo.end());
    if (*lo == *hi) throw InputError("regressor has no variation");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += spread_repo[i];
        my += spread_ois[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = spread_repo[i] - mx;
        sxx += dx * dx;
        sxy += dx * (spread_ois[i] - my);
    }
    if (!(sxx > 0.0)) throw InputError("regressor has no variation");
    RegressionResult r;
    r.beta = sxy / sxx;
    r.alpha = my - r.beta * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = spread_ois[i] - r.alpha - r.beta * spread_repo[i];
        ssr += e * e;
    }
    const double s2 = ssr / static_cast<double>(n - 2);
    r.beta_stderr = std::sqrt(s2 / sxx);
    r.alpha_stderr = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    r.credit.reserve(n);
    for (double x : spread_repo) r.credit.push_back(r.beta * x);
    return r;
}

inline constexpr std::array<double, 4> kRiskPremiumHorizons{90.0 / 360.0, 180.0 / 360.0, 270.0 / 360.0,
                                                            360.0 / 360.0};
inline constexpr double kOneMonthAccrual = 1.0 / 12.0;

/// Annualized f(t;S,T) - E^P[f(S;S,T)] with S = t + horizon, per contract.
struct RiskPremiumRow {
    double horizon = 0.0;
    double sofr3m = 0.0;
    double eurodollar = 0.0;
    double sofr1m = 0.0;
    double fedfunds = 0.0;
    double portfolio() const { return eurodollar - sofr3m; }
};

/// Expected futures values at S under P. The 3M contracts are
/// exponential-affine in X_S and use the P-measure transform with R = 0; the
/// 1M contracts are affine in X_S and use the P conditional mean.
struct ExpectedFuturesP {
    double sofr3m = 0.0;
    double eurodollar = 0.0;
    double sofr1m = 0.0;
    double fedfunds = 0.0;
};

inline void require_stationary(const ModelParams& p) {
    const auto pm = to_p_measure(p);
    if (!pm.stationary) throw ModelError("P-drift violates stationarity");
}

inline ExpectedFuturesP expected_futures_at_expiry_p(const ModelParams& p, const StateVector& x, double horizon,
                                                     const PricingOptions& o = {}) {
    if (!(horizon > 0.0)) throw InputError("risk premium horizon must be > 0");
    detail::require_renewal(x);
    const auto q = build_affine_coefficients(p);
    const auto pc = build_p_coefficients(p);
    const Vec8 xv = x.vec();
    const double d3 = kThreeMonthAccrual;

    ExpectedFuturesP e;
    const auto libor = detail::solve_terminal(q, SelectorVector::libor(), 0.0, Vec8::Zero(), d3, o.ode_step);
    const auto ed = detail::solve_terminal(pc, SelectorVector::zero(), libor.A, detail::zero_jumps(libor.B), horizon,
                                           o.ode_step);
    e.eurodollar = std::expm1(ed.at(xv)) / d3;

    const auto acc = detail::solve_terminal(q, SelectorVector::sofr_accrual(), 0.0, Vec8::Zero(), d3, o.ode_step);
    const auto s3 = detail::solve_terminal(pc, SelectorVector::zero(), acc.A, acc.B, horizon, o.ode_step);
    e.sofr3m = std::expm1(s3.at(xv)) / d3;

    const auto rd = reduced_dynamics(p, Measure::P);
    const Eigen::Matrix3d Kg = rd.K.topLeftCorner<3, 3>();
    const Eigen::Vector3d cg = rd.c.head<3>();
    auto [F, C] = mean_propagator<3>(Kg, cg, horizon);
    const Eigen::Vector3d m = F * Eigen::Vector3d(x.r_s, x.theta_s, x.zeta) + C;
    StateVector mean = x;
    mean.r_s = m[0];
    mean.theta_s = m[1];
    mean.zeta = m[2];
    const auto L = gaussian_integral_loadings(p, 0.0, kOneMonthAccrual);
    const auto I = L.evaluate(mean);
    e.sofr1m = I.I_r / kOneMonthAccrual;
    e.fedfunds = (I.I_r + I.I_zeta) / kOneMonthAccrual;
    return e;
}

inline RiskPremiumRow risk_premium_row(const ModelParams& p, const StateVector& x, double t, double horizon,
                                       const PricingOptions& o = {}) {
    require_stationary(p);
    const double S = t + horizon;
    const auto e = expected_futures_at_expiry_p(p, x, horizon, o);
    RiskPremiumRow row;
    row.horizon = horizon;
    row.sofr3m = (sofr3m_futures(p, x, t, S, S + kThreeMonthAccrual, {}, o) - e.sofr3m) / horizon;
    row.eurodollar = (eurodollar_futures(p, x, t, S, S + kThreeMonthAccrual, o) - e.eurodollar) / horizon;
    row.sofr1m = (sofr1m_futures(p, x, t, S, S + kOneMonthAccrual) - e.sofr1m) / horizon;
    row.fedfunds = (fedfunds_futures(p, x, t, S, S + kOneMonthAccrual) - e.fedfunds) / horizon;
    return row;
}

/// Annualized premium of the long-ED, short-3M-SOFR futures portfolio.
inline double risk_premium(const ModelParams& p, const StateVector& x, double t, double horizon,
                           const PricingOptions& o = {}) {
    return risk_premium_row(p, x, t, horizon, o).portfolio();
}

}  // namespace affine_curves
