#pragma once

// Exponential-affine prices of spot term rates, futures, swaps and CDS.
//
// Times are year fractions (ACT/360) on a common axis. Every transform is
// written as E[exp(-int R'X)], so instruments with exp(+int ...) exponents
// pass negated selectors (see SelectorVector).

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "affine_curves/error.hpp"
#include "affine_curves/model.hpp"
#include "affine_curves/riccati.hpp"

namespace affine_curves {

inline constexpr double kThreeMonthAccrual = 91.0 / 360.0;
inline constexpr double kCdsGridStep = 1.0 / 365.0;

struct PricingOptions {
    double ode_step = kDefaultOdeStep;
    double cds_grid_step = kCdsGridStep;
};

/// One realized overnight fixing with its day-count weight d_i.
struct Fixing {
    double rate = 0.0;
    double weight = 0.0;
};

inline double compounded_factor(std::span<const Fixing> fixings) {
    double f = 1.0;
    for (const auto& x : fixings) f *= 1.0 + x.weight * x.rate;
    return f;
}

/// log prod(1 + d_i R_i), accumulated term by term.
inline double log_compounded_factor(std::span<const Fixing> fixings) {
    double s = 0.0;
    for (const auto& x : fixings) s += std::log1p(x.weight * x.rate);
    return s;
}

inline double weighted_sum(std::span<const Fixing> fixings) {
    double s = 0.0;
    for (const auto& x : fixings) s += x.weight * x.rate;
    return s;
}

namespace detail {

inline Vec8 zero_jumps(Vec8 B) {
    B[idx::lambda] = 0.0;
    B[idx::phi] = 0.0;
    return B;
}

inline void require_renewal(const StateVector& x) {
    if (!x.at_renewal()) throw InputError("pricing state must be at panel renewal (lambda = phi = 0)");
}

struct Exponent {
    double A = 0.0;
    Vec8 B = Vec8::Zero();
    double at(const Vec8& x) const { return A + B.dot(x); }
};

/// Terminal (A, B) of a single solve; tau = 0 returns the initial condition.
inline Exponent solve_terminal(const AffineCoefficients& c, const SelectorVector& sel, double A0, const Vec8& B0,
                               double tau, double step) {
    if (tau < 0.0) throw InputError("negative horizon");
    if (tau == 0.0) return {A0, B0};
    const auto s = solve_riccati(c, sel, A0, B0, tau, step);
    return {s.A_values.back(), s.B_values.back()};
}

inline void check_times(double t, double T) {
    if (!std::isfinite(t) || !std::isfinite(T) || !(T > t)) throw InputError("maturity must be after valuation time");
}

inline void check_schedule(double t, std::span<const double> schedule) {
    if (schedule.empty()) throw InputError("empty payment schedule");
    double prev = t;
    for (double x : schedule) {
        if (!(x > prev)) throw InputError("payment schedule must be strictly increasing and after valuation time");
        prev = x;
    }
}

}  // namespace detail

/// LIBOR exponent exp(A^L(tau) + B^L(tau)'X) = E[exp(int r_s + zeta + lambda + phi)].
inline double spot_libor(const ModelParams& p, const StateVector& x, double t, double T, const PricingOptions& o = {}) {
    detail::check_times(t, T);
    detail::require_renewal(x);
    const double tau = T - t;
    const auto e = detail::solve_terminal(build_affine_coefficients(p), SelectorVector::libor(), 0.0, Vec8::Zero(), tau,
                                          o.ode_step);
    return std::expm1(e.at(x.vec())) / tau;
}

inline double term_repo(const ModelParams& p, const StateVector& x, double t, double T, const PricingOptions& o = {}) {
    detail::check_times(t, T);
    detail::require_renewal(x);
    const double tau = T - t;
    const auto e = detail::solve_terminal(build_affine_coefficients(p), SelectorVector::repo(), 0.0, Vec8::Zero(), tau,
                                          o.ode_step);
    return std::expm1(e.at(x.vec())) / tau;
}

/// LIBOR with the credit-downgrade spread removed from the exponent.
inline double spot_libor_ex_credit(const ModelParams& p, const StateVector& x, double t, double T,
                                   const PricingOptions& o = {}) {
    detail::check_times(t, T);
    detail::require_renewal(x);
    const double tau = T - t;
    const auto e = detail::solve_terminal(build_affine_coefficients(p), SelectorVector::libor_ex_credit(), 0.0,
                                          Vec8::Zero(), tau, o.ode_step);
    return std::expm1(e.at(x.vec())) / tau;
}

inline double eurodollar_futures(const ModelParams& p, const StateVector& x, double t, double S, double T,
                                 const PricingOptions& o = {}) {
    if (!(t <= S)) throw InputError("eurodollar futures need t <= S");
    detail::check_times(S, T);
    detail::require_renewal(x);
    const auto c = build_affine_coefficients(p);
    const auto inner = detail::solve_terminal(c, SelectorVector::libor(), 0.0, Vec8::Zero(), T - S, o.ode_step);
    const auto outer =
        detail::solve_terminal(c, SelectorVector::zero(), inner.A, detail::zero_jumps(inner.B), S - t, o.ode_step);
    return std::expm1(outer.at(x.vec())) / (T - S);
}

/// Three-month SOFR futures. Forward contracts (t <= S) take no fixings; in
/// accrual (S < t <= T) the realized fixings over [S, t) are compounded in.
inline double sofr3m_futures(const ModelParams& p, const StateVector& x, double t, double S, double T,
                             std::span<const Fixing> realized = {}, const PricingOptions& o = {}) {
    detail::check_times(S, T);
    if (t > T) throw InputError("valuation after contract end");
    const auto c = build_affine_coefficients(p);
    if (t <= S) {
        if (!realized.empty()) throw InputError("realized fixings supplied for a forward contract");
        const auto inner =
            detail::solve_terminal(c, SelectorVector::sofr_accrual(), 0.0, Vec8::Zero(), T - S, o.ode_step);
        const auto outer = detail::solve_terminal(c, SelectorVector::zero(), inner.A, inner.B, S - t, o.ode_step);
        return std::expm1(outer.at(x.vec())) / (T - S);
    }
    if (realized.empty()) throw InputError("in-accrual contract requires realized fixings");
    const double log_realized = log_compounded_factor(realized);
    const auto rest = detail::solve_terminal(c, SelectorVector::sofr_accrual(), 0.0, Vec8::Zero(), T - t, o.ode_step);
    return std::expm1(log_realized + rest.at(x.vec())) / (T - S);
}

inline double sofr1m_futures(const ModelParams& p, const StateVector& x, double t, double S, double T,
                             std::span<const Fixing> realized = {}) {
    detail::check_times(S, T);
    if (t > T) throw InputError("valuation after contract end");
    if (t <= S) {
        if (!realized.empty()) throw InputError("realized fixings supplied for a forward contract");
        return gaussian_average_integrals(p, x, t, S, T).I_r / (T - S);
    }
    if (realized.empty()) throw InputError("in-accrual contract requires realized fixings");
    double sum = weighted_sum(realized);
    if (t < T) sum += gaussian_average_integrals(p, x, t, t, T).I_r;
    return sum / (T - S);
}

/// Fed funds futures; in accrual the realized fixings are EFFR fixings.
inline double fedfunds_futures(const ModelParams& p, const StateVector& x, double t, double S, double T,
                               std::span<const Fixing> realized = {}) {
    detail::check_times(S, T);
    if (t > T) throw InputError("valuation after contract end");
    if (t <= S) {
        if (!realized.empty()) throw InputError("realized fixings supplied for a forward contract");
        const auto I = gaussian_average_integrals(p, x, t, S, T);
        return (I.I_r + I.I_zeta) / (T - S);
    }
    if (realized.empty()) throw InputError("in-accrual contract requires realized fixings");
    double sum = weighted_sum(realized);
    if (t < T) {
        const auto I = gaussian_average_integrals(p, x, t, t, T);
        sum += I.I_r + I.I_zeta;
    }
    return sum / (T - S);
}

/// SOFR pseudo zero-coupon bonds p^s(t, T_i) for every T_i in `times`.
inline std::vector<double> sofr_discount_factors(const AffineCoefficients& c, const StateVector& x, double t,
                                                 std::span<const double> times, double step) {
    double horizon = 0.0;
    for (double T : times) horizon = std::max(horizon, T - t);
    std::vector<double> out;
    out.reserve(times.size());
    if (horizon <= 0.0) {
        out.assign(times.size(), 1.0);
        return out;
    }
    const auto sol = solve_riccati(c, SelectorVector::sofr_discount(), 0.0, Vec8::Zero(), horizon, step);
    const Vec8 xv = x.vec();
    for (double T : times) out.push_back(T - t == 0.0 ? 1.0 : std::exp(sol.exponent(T - t, xv)));
    return out;
}

struct SwapLegs {
    double floating = 0.0;  // value of the floating leg per unit notional
    double annuity = 0.0;   // value of the fixed leg per unit rate
    double rate() const { return floating / annuity; }
};

inline SwapLegs ois_sofr_legs(const ModelParams& p, const StateVector& x, double t, std::span<const double> schedule,
                              const PricingOptions& o = {}) {
    detail::check_schedule(t, schedule);
    const auto c = build_affine_coefficients(p);
    const auto ps = sofr_discount_factors(c, x, t, schedule, o.ode_step);
    SwapLegs legs;
    double prev = t;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        legs.annuity += (schedule[i] - prev) * ps[i];
        prev = schedule[i];
    }
    legs.floating = 1.0 - ps.back();
    return legs;
}

/// (1 - p^s(t,T_n)) / sum delta_i p^s(t,T_i)
inline double ois_sofr_rate(const ModelParams& p, const StateVector& x, double t, std::span<const double> schedule,
                            const PricingOptions& o = {}) {
    return ois_sofr_legs(p, x, t, schedule, o).rate();
}

inline SwapLegs ois_ff_legs(const ModelParams& p, const StateVector& x, double t, std::span<const double> schedule,
                            const PricingOptions& o = {}) {
    detail::check_schedule(t, schedule);
    const auto c = build_affine_coefficients(p);
    const auto ps = sofr_discount_factors(c, x, t, schedule, o.ode_step);
    const Vec8 xv = x.vec();
    SwapLegs legs;
    double prev = t;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const double delta = schedule[i] - prev;
        const auto aux =
            detail::solve_terminal(c, SelectorVector::effr_spread_accrual(), 0.0, Vec8::Zero(), delta, o.ode_step);
        const auto outer =
            detail::solve_terminal(c, SelectorVector::sofr_discount(), aux.A, aux.B, prev - t, o.ode_step);
        legs.floating += std::exp(outer.at(xv)) - ps[i];
        legs.annuity += delta * ps[i];
        prev = schedule[i];
    }
    return legs;
}

inline double ois_ff_rate(const ModelParams& p, const StateVector& x, double t, std::span<const double> schedule,
                          const PricingOptions& o = {}) {
    return ois_ff_legs(p, x, t, schedule, o).rate();
}

/// Fixed-vs-LIBOR swap. The LIBOR tenor of each period is its float accrual,
/// so quarterly float dates give the 3M swap and semiannual ones the 6M swap.
inline SwapLegs irs_legs(const ModelParams& p, const StateVector& x, double t, std::span<const double> float_schedule,
                         std::span<const double> fixed_schedule, const PricingOptions& o = {}) {
    detail::check_schedule(t, float_schedule);
    detail::check_schedule(t, fixed_schedule);
    detail::require_renewal(x);
    const auto c = build_affine_coefficients(p);
    const Vec8 xv = x.vec();
    const auto p_float = sofr_discount_factors(c, x, t, float_schedule, o.ode_step);
    const auto p_fixed = sofr_discount_factors(c, x, t, fixed_schedule, o.ode_step);
    SwapLegs legs;
    double prev = t;
    for (std::size_t i = 0; i < float_schedule.size(); ++i) {
        const double delta = float_schedule[i] - prev;
        const auto disc =
            detail::solve_terminal(c, SelectorVector::sofr_discount(), 0.0, Vec8::Zero(), delta, o.ode_step);
        const auto libor = detail::solve_terminal(c, SelectorVector::libor(), 0.0, Vec8::Zero(), delta, o.ode_step);
        const auto outer = detail::solve_terminal(c, SelectorVector::sofr_discount(), disc.A + libor.A,
                                                  detail::zero_jumps(disc.B + libor.B), prev - t, o.ode_step);
        legs.floating += std::exp(outer.at(xv)) - p_float[i];
        prev = float_schedule[i];
    }
    prev = t;
    for (std::size_t j = 0; j < fixed_schedule.size(); ++j) {
        legs.annuity += (fixed_schedule[j] - prev) * p_fixed[j];
        prev = fixed_schedule[j];
    }
    return legs;
}

inline double irs_rate(const ModelParams& p, const StateVector& x, double t, std::span<const double> float_schedule,
                       std::span<const double> fixed_schedule, const PricingOptions& o = {}) {
    return irs_legs(p, x, t, float_schedule, fixed_schedule, o).rate();
}

/// 6M-LIBOR swap rate from the 3M swap rate and the 3M/6M basis.
inline double irs6m_from_basis(double irs3m, double basis_3m_6m) { return irs3m + basis_3m_6m; }

/// Regular schedule t + k*period for k = 1..n with n*period = length.
inline std::vector<double> regular_schedule(double t, double length, double period) {
    if (!(length > 0.0) || !(period > 0.0)) throw InputError("schedule length and period must be > 0");
    const long n = std::lround(length / period);
    if (n < 1 || std::abs(n * period - length) > 1e-9) throw InputError("length must be a multiple of the period");
    std::vector<double> out;
    for (long k = 1; k <= n; ++k) out.push_back(t + period * static_cast<double>(k));
    out.back() = t + length;
    return out;
}

struct CdsLegs {
    double protection = 0.0;
    double premium_annuity = 0.0;  // value of the premium leg per unit spread
    double spread() const { return protection / premium_annuity; }
};

namespace detail {

/// Composite Simpson of f over [a, b] with an even number of panels of size <= h.
template <typename F>
double simpson(F&& f, double a, double b, double h) {
    if (!(b > a)) return 0.0;
    std::size_t n = static_cast<std::size_t>(std::ceil((b - a) / h - 1e-9));
    if (n < 2) n = 2;
    if (n % 2) ++n;
    const double w = (b - a) / static_cast<double>(n);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + w * static_cast<double>(i));
    return s * w / 3.0;
}

}  // namespace detail

/// Zero-recovery CDS on the credit-downgrade intensity; `schedule` holds the
/// premium dates T_1..T_n with T_n the protection end.
inline CdsLegs cds_legs(const ModelParams& p, const StateVector& x, double t, std::span<const double> schedule,
                        const PricingOptions& o = {}) {
    detail::check_schedule(t, schedule);
    const auto c = build_affine_coefficients(p);
    const double horizon = schedule.back() - t;
    const auto base = solve_riccati(c, SelectorVector::cds(), 0.0, Vec8::Zero(), horizon, o.ode_step);
    const auto ext = solve_extended(c, base);
    const Vec8 xv = x.vec();
    auto density = [&](double u) { return ext.integrand(u - t, xv); };

    CdsLegs legs;
    legs.protection = detail::simpson(density, t, schedule.back(), o.cds_grid_step);
    double prev = t;
    for (double Ti : schedule) {
        legs.premium_annuity += (Ti - prev) * std::exp(base.exponent(Ti - t, xv));
        legs.premium_annuity += detail::simpson([&](double u) { return (u - prev) * density(u); }, prev, Ti,
                                                o.cds_grid_step);
        prev = Ti;
    }
    if (!(legs.premium_annuity > 0.0)) throw InputError("degenerate CDS schedule: premium annuity is not positive");
    return legs;
}

inline double cds_spread(const ModelParams& p, const StateVector& x, double t, std::span<const double> schedule,
                         const PricingOptions& o = {}) {
    return cds_legs(p, x, t, schedule, o).spread();
}

enum class InstrumentKind {
    SpotLibor,
    TermRepo,
    EurodollarFut,
    Sofr3mFut,
    Sofr1mFut,
    FedFundsFut,
    OisSofr,
    OisFf,
    Irs3m,
    Irs6m,
    Cds,
};

inline const char* to_string(InstrumentKind k) {
    switch (k) {
        case InstrumentKind::SpotLibor: return "SpotLibor";
        case InstrumentKind::TermRepo: return "TermRepo";
        case InstrumentKind::EurodollarFut: return "EurodollarFut";
        case InstrumentKind::Sofr3mFut: return "Sofr3mFut";
        case InstrumentKind::Sofr1mFut: return "Sofr1mFut";
        case InstrumentKind::FedFundsFut: return "FedFundsFut";
        case InstrumentKind::OisSofr: return "OisSofr";
        case InstrumentKind::OisFf: return "OisFf";
        case InstrumentKind::Irs3m: return "Irs3m";
        case InstrumentKind::Irs6m: return "Irs6m";
        case InstrumentKind::Cds: return "Cds";
    }
    return "?";
}

/// Contract terms on the year-fraction axis. Spot rates use [t, T]; futures
/// use [S, T]; swaps and CDS use `schedule` (and `fixed_schedule` for IRS).
struct InstrumentSpec {
    InstrumentKind kind = InstrumentKind::SpotLibor;
    double t = 0.0;
    double S = 0.0;
    double T = 0.0;
    std::vector<double> schedule;
    std::vector<double> fixed_schedule;
    std::vector<Fixing> realized_fixings;
};

inline double price(const ModelParams& p, const StateVector& x, const InstrumentSpec& s, const PricingOptions& o = {}) {
    switch (s.kind) {
        case InstrumentKind::SpotLibor: return spot_libor(p, x, s.t, s.T, o);
        case InstrumentKind::TermRepo: return term_repo(p, x, s.t, s.T, o);
        case InstrumentKind::EurodollarFut: return eurodollar_futures(p, x, s.t, s.S, s.T, o);
        case InstrumentKind::Sofr3mFut: return sofr3m_futures(p, x, s.t, s.S, s.T, s.realized_fixings, o);
        case InstrumentKind::Sofr1mFut: return sofr1m_futures(p, x, s.t, s.S, s.T, s.realized_fixings);
        case InstrumentKind::FedFundsFut: return fedfunds_futures(p, x, s.t, s.S, s.T, s.realized_fixings);
        case InstrumentKind::OisSofr: return ois_sofr_rate(p, x, s.t, s.schedule, o);
        case InstrumentKind::OisFf: return ois_ff_rate(p, x, s.t, s.schedule, o);
        case InstrumentKind::Irs3m:
        case InstrumentKind::Irs6m: return irs_rate(p, x, s.t, s.schedule, s.fixed_schedule, o);
        case InstrumentKind::Cds: return cds_spread(p, x, s.t, s.schedule, o);
    }
    throw InputError("unsupported instrument kind");
}

}  // namespace affine_curves
