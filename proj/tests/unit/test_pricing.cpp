#include <catch2/catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <random>

#include "affine_curves/analytics.hpp"
#include "affine_curves/calendar.hpp"
#include "affine_curves/mc_pricing.hpp"
#include "affine_curves/pricing.hpp"
#include "support.hpp"

using namespace affine_curves;

namespace {

/// Reference dynamics with no diffusion and intensities that stay at zero.
ModelParams deterministic_params() {
    ModelParams p = testing_support::zero_vol(ModelParams::reference());
    p.theta_eta = 0.0;
    p.theta_nu = 0.0;
    p.theta_zeta = 0.0015;
    return p;
}

StateVector quiet_state(double r, double th, double z) {
    StateVector x;
    x.r_s = r;
    x.theta_s = th;
    x.zeta = z;
    return x;
}

/// Closed-form deterministic paths of r_s and zeta under Q.
struct DeterministicPath {
    ModelParams p;
    StateVector x;
    double r(double u) const {
        const double kr = p.kappa_r, kt = p.kappa_theta, tt = p.theta_theta;
        return tt + (x.theta_s - tt) * kr / (kr - kt) * (std::exp(-kt * u) - std::exp(-kr * u)) +
               (x.r_s - tt) * std::exp(-kr * u);
    }
    double zeta(double u) const { return p.theta_zeta + (x.zeta - p.theta_zeta) * std::exp(-p.kappa_zeta * u); }
    double int_r(double a, double b) const {
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate([&](double u) { return r(u); }, a, b, 10,
                                                                              1e-15);
    }
    double int_zeta(double a, double b) const {
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate([&](double u) { return zeta(u); }, a, b,
                                                                              10, 1e-15);
    }
};

std::vector<Fixing> random_fixings(std::mt19937_64& rng, int days) {
    std::uniform_real_distribution<double> rate(0.0, 0.06);
    std::vector<Fixing> f;
    for (int d = 0; d < days; ++d) f.push_back({rate(rng), 1.0 / 360.0});
    return f;
}

}  // namespace

TEST_CASE("deterministic limit: prices equal integrals of the closed-form paths") {
    const ModelParams p = deterministic_params();
    for (const auto& x : {quiet_state(0.02, 0.03, 0.001), quiet_state(0.0, 0.05, -0.002), quiet_state(0.04, 0.01, 0.0)}) {
        const DeterministicPath path{p, x};
        const double d3 = kThreeMonthAccrual;
        for (double tau : {0.25, 0.5}) {
            const double ir = path.int_r(0, tau), iz = path.int_zeta(0, tau);
            CHECK(spot_libor(p, x, 0, tau) == Catch::Approx(std::expm1(ir + iz) / tau).epsilon(1e-10));
            CHECK(term_repo(p, x, 0, tau) == Catch::Approx(std::expm1(ir) / tau).epsilon(1e-10));
            CHECK(spot_libor_ex_credit(p, x, 0, tau) == Catch::Approx(std::expm1(ir + iz) / tau).epsilon(1e-10));
        }
        const double S = 0.6;
        CHECK(eurodollar_futures(p, x, 0, S, S + d3) ==
              Catch::Approx(std::expm1(path.int_r(S, S + d3) + path.int_zeta(S, S + d3)) / d3).epsilon(1e-10));
        CHECK(sofr3m_futures(p, x, 0, S, S + d3) == Catch::Approx(std::expm1(path.int_r(S, S + d3)) / d3).epsilon(1e-10));
        CHECK(sofr1m_futures(p, x, 0, S, S + 1.0 / 12) ==
              Catch::Approx(path.int_r(S, S + 1.0 / 12) * 12).epsilon(1e-10));
        CHECK(fedfunds_futures(p, x, 0, S, S + 1.0 / 12) ==
              Catch::Approx((path.int_r(S, S + 1.0 / 12) + path.int_zeta(S, S + 1.0 / 12)) * 12).epsilon(1e-10));

        const auto sched = regular_schedule(0, 1, 0.25);
        double ann = 0, prev = 0, ff = 0;
        for (double T : sched) {
            ann += (T - prev) * std::exp(-path.int_r(0, T));
            ff += std::exp(-path.int_r(0, prev)) * std::expm1(path.int_zeta(prev, T));
            prev = T;
        }
        const double sofr = -std::expm1(-path.int_r(0, 1)) / ann;
        CHECK(ois_sofr_rate(p, x, 0, sched) == Catch::Approx(sofr).epsilon(1e-10));
        CHECK(ois_ff_rate(p, x, 0, sched) == Catch::Approx(sofr + ff / ann).epsilon(1e-10));
        CHECK(std::abs(cds_spread(p, x, 0, regular_schedule(0, 0.5, 0.25))) <= 1e-15);
    }
}

TEST_CASE("a deterministic jump spread enters LIBOR through its decay integral") {
    ModelParams p = deterministic_params();
    StateVector x = quiet_state(0.01, 0.02, 0.0);
    // lambda and phi start at zero at renewal and stay there without intensity.
    CHECK(spot_libor(p, x, 0, 0.25) == Catch::Approx(spot_libor_ex_credit(p, x, 0, 0.25)).epsilon(1e-15));
    // A positive jump intensity raises LIBOR above the credit-free rate.
    x.xi = 2.0;
    x.eta = 2.0;
    p.theta_eta = 2.0;
    CHECK(spot_libor(p, x, 0, 0.25) > spot_libor_ex_credit(p, x, 0, 0.25));
    CHECK(spot_libor(p, x, 0, 0.25) > term_repo(p, x, 0, 0.25));
}

TEST_CASE("expiry consistency over random configurations") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double d3 = kThreeMonthAccrual;
    for (int n = 0; n < 50; ++n) {
        const ModelParams p = testing_support::random_params(rng);
        const StateVector x = testing_support::random_state(rng);
        const double S = 2.0 * u(rng);
        CHECK(std::abs(eurodollar_futures(p, x, S, S, S + d3) - spot_libor(p, x, S, S + d3)) <= 1e-12);

        const auto fx = random_fixings(rng, 91);
        boost::multiprecision::cpp_dec_float_50 prod = 1;
        for (const auto& f : fx) prod *= 1 + boost::multiprecision::cpp_dec_float_50(f.weight) * f.rate;
        const double realized = static_cast<double>((prod - 1) / boost::multiprecision::cpp_dec_float_50(d3));
        CHECK(std::abs(sofr3m_futures(p, x, S + d3, S, S + d3, fx) - realized) <= 1e-12);

        const auto f1 = random_fixings(rng, 30);
        const double T1 = S + 30.0 / 360.0;
        CHECK(std::abs(sofr1m_futures(p, x, T1, S, T1, f1) - average_fixings(f1)) <= 1e-12);
        CHECK(std::abs(fedfunds_futures(p, x, T1, S, T1, f1) - average_fixings(f1)) <= 1e-12);
    }
}

TEST_CASE("in-accrual futures blend realized fixings with the remaining expectation") {
    const ModelParams p = ModelParams::reference();
    std::mt19937_64 rng(7);
    const StateVector x = testing_support::random_state(rng);
    const double d3 = kThreeMonthAccrual, S = 0.0, t = 40.0 / 360.0;
    const auto fx = random_fixings(rng, 40);
    const auto rest = solve_riccati(p, SelectorVector::sofr_accrual(), 0.0, Vec8::Zero(), d3 - t);
    const double expect = std::expm1(log_compounded_factor(fx) + rest.exponent(d3 - t, x.vec())) / d3;
    CHECK(sofr3m_futures(p, x, t, S, d3, fx) == Catch::Approx(expect).epsilon(1e-14));
    // Partially realized 1M contract: realized sum plus the forward average.
    const double T1 = 30.0 / 360.0, t1 = 12.0 / 360.0;
    const auto f1 = random_fixings(rng, 12);
    const auto I = gaussian_average_integrals(p, x, t1, t1, T1);
    CHECK(sofr1m_futures(p, x, t1, 0.0, T1, f1) == Catch::Approx((weighted_sum(f1) + I.I_r) / T1).epsilon(1e-14));
    CHECK(fedfunds_futures(p, x, t1, 0.0, T1, f1) ==
          Catch::Approx((weighted_sum(f1) + I.I_r + I.I_zeta) / T1).epsilon(1e-14));
}

TEST_CASE("pricing rejects inconsistent contract timing") {
    const ModelParams p = ModelParams::reference();
    const StateVector x;
    const std::vector<Fixing> fx{{0.01, 1.0 / 360}};
    CHECK_THROWS_AS(spot_libor(p, x, 0.5, 0.25), InputError);
    CHECK_THROWS_AS(eurodollar_futures(p, x, 0.3, 0.2, 0.45), InputError);
    CHECK_THROWS_AS(sofr3m_futures(p, x, 0.5, 0.0, 0.25, fx), InputError);
    CHECK_THROWS_AS(sofr3m_futures(p, x, 0.1, 0.2, 0.45, fx), InputError);
    CHECK_THROWS_AS(sofr3m_futures(p, x, 0.1, 0.0, 0.25), InputError);
    CHECK_THROWS_AS(sofr1m_futures(p, x, 0.05, 0.0, 1.0 / 12), InputError);
    StateVector jumped;
    jumped.lambda = 0.01;
    CHECK_THROWS_AS(spot_libor(p, jumped, 0, 0.25), InputError);
    const std::vector<double> bad{0.5, 0.25};
    CHECK_THROWS_AS(ois_sofr_rate(p, x, 0, bad), InputError);
    CHECK_THROWS_AS(regular_schedule(0, 1, 0.3), InputError);
}

TEST_CASE("OIS legs telescope and single-period rates reduce to bond ratios") {
    std::mt19937_64 rng(17);
    for (int n = 0; n < 10; ++n) {
        const ModelParams p = testing_support::random_params(rng);
        const StateVector x = testing_support::random_state(rng);
        const auto sched = regular_schedule(0, 1, 0.25);
        const auto ps = sofr_discount_factors(build_affine_coefficients(p), x, 0, sched, kDefaultOdeStep);
        double tele = 0, prev = 1;
        for (double v : ps) {
            tele += prev - v;
            prev = v;
        }
        const auto legs = ois_sofr_legs(p, x, 0, sched);
        CHECK(legs.floating == Catch::Approx(tele).epsilon(1e-13));
        const std::vector<double> one{0.5};
        const double p5 = sofr_discount_factors(build_affine_coefficients(p), x, 0, one, kDefaultOdeStep)[0];
        CHECK(ois_sofr_rate(p, x, 0, one) == Catch::Approx((1.0 / p5 - 1.0) / 0.5).epsilon(1e-13));
    }
    // With zeta pinned at zero the FF leg is the SOFR leg.
    ModelParams p = ModelParams::reference();
    p.theta_zeta = 0.0;
    p.sigma_zeta = 0.0;
    const StateVector x = quiet_state(0.02, 0.025, 0.0);
    const auto sched = regular_schedule(0, 1, 0.25);
    CHECK(ois_ff_rate(p, x, 0, sched) == Catch::Approx(ois_sofr_rate(p, x, 0, sched)).epsilon(1e-12));
}

TEST_CASE("IRS and basis helpers") {
    const ModelParams p = ModelParams::reference();
    std::mt19937_64 rng(23);
    const StateVector x = testing_support::random_state(rng);
    const auto q = regular_schedule(0, 1, 0.25);
    const auto a = regular_schedule(0, 1, 1.0);
    const double irs3 = irs_rate(p, x, 0, q, a);
    const double irs6 = irs_rate(p, x, 0, regular_schedule(0, 1, 0.5), a);
    CHECK(std::isfinite(irs3));
    CHECK(irs6m_from_basis(irs3, irs6 - irs3) == Catch::Approx(irs6).epsilon(1e-15));
    // A one-period swap fixed against one LIBOR period prices like the LIBOR rate
    // paid at T and discounted at SOFR, divided by the same discount factor.
    const std::vector<double> one{0.25};
    CHECK(irs_rate(p, x, 0, one, one) == Catch::Approx(spot_libor(p, x, 0, 0.25)).epsilon(1e-12));
}

TEST_CASE("CDS with a decaying deterministic intensity") {
    // lambda starts at zero at renewal, so with no jump intensity the spread is zero;
    // positive intensity gives a positive spread increasing with the intensity level.
    ModelParams p = ModelParams::reference();
    StateVector x = quiet_state(0.02, 0.02, 0.0);
    x.xi = 0.0;
    x.eta = 0.0;
    p.theta_eta = 0.0;
    const auto sched = regular_schedule(0, 0.5, 0.25);
    CHECK(std::abs(cds_spread(p, x, 0, sched)) <= 1e-15);
    x.xi = 0.5;
    const double s1 = cds_spread(p, x, 0, sched);
    x.xi = 1.0;
    const double s2 = cds_spread(p, x, 0, sched);
    CHECK(s1 > 0.0);
    CHECK(s2 > s1);
    const auto legs = cds_legs(p, x, 0, sched);
    CHECK(legs.premium_annuity < 0.5);
    CHECK(legs.premium_annuity > 0.45);
}

TEST_CASE("survival transform of a pure decay intensity") {
    ModelParams p = deterministic_params();
    StateVector x;
    x.lambda = 0.05;
    for (double T : {0.25, 1.0, 3.0}) {
        const auto s = solve_riccati(p, SelectorVector::survival(), 0.0, Vec8::Zero(), T);
        const double b = p.beta_lambda;
        CHECK(std::exp(s.exponent(T, x.vec())) ==
              Catch::Approx(std::exp(-x.lambda * -std::expm1(-b * T) / b)).epsilon(1e-12));
    }
}

TEST_CASE("decomposition closes and both components are nonnegative") {
    std::mt19937_64 rng(29);
    for (int n = 0; n < 30; ++n) {
        const ModelParams p = testing_support::random_params(rng);
        const StateVector x = testing_support::random_state(rng);
        for (Tenor t : {Tenor::M3, Tenor::M6}) {
            const auto row = decompose_libor_ois(p, x, 0.0, t);
            CHECK(std::abs(row.credit_component + row.funding_component - row.libor_ois_spread) <= 1e-10);
            CHECK(row.credit_component >= -1e-12);
            CHECK(row.funding_component >= -1e-12);
            const double tau = tenor_years(t);
            CHECK(row.libor_ois_spread ==
                  Catch::Approx(spot_libor(p, x, 0, tau) - single_period_ois_ff(p, x, 0, tau)).epsilon(1e-15));
        }
    }
}

TEST_CASE("regression recovers a known slope and the degenerate case is exact") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> z;
    const double alpha = 0.0004, beta = 0.85;
    std::vector<double> xs, ys;
    for (int i = 0; i < 400; ++i) {
        const double xv = 0.002 + 0.001 * z(rng);
        xs.push_back(xv);
        ys.push_back(alpha + beta * xv + 0.0002 * z(rng));
    }
    const auto r = regression_decomposition(ys, xs);
    CHECK(std::abs(r.beta - beta) <= 2.0 * r.beta_stderr);
    CHECK(std::abs(r.alpha - alpha) <= 2.0 * r.alpha_stderr);
    REQUIRE(r.credit.size() == xs.size());
    CHECK(r.credit[5] == r.beta * xs[5]);

    const auto d = regression_decomposition(xs, xs);
    CHECK(d.beta == 1.0);
    CHECK(d.alpha == 0.0);
    CHECK(d.beta_stderr == 0.0);

    const std::vector<double> flat(10, 0.01);
    CHECK_THROWS_AS(regression_decomposition(flat, flat), InputError);
    CHECK_THROWS_AS(regression_decomposition(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InputError);
}

TEST_CASE("risk premia vanish without market prices of risk or intensities") {
    ModelParams p = ModelParams::reference();
    p.mu_r = p.mu_theta = p.mu_zeta = p.mu_xi = p.mu_eta = p.mu_nu = 0.0;
    p.theta_eta = p.theta_nu = 0.0;
    std::mt19937_64 rng(37);
    for (int n = 0; n < 5; ++n) {
        StateVector x = testing_support::random_state(rng);
        x.xi = x.eta = x.nu = 0.0;
        for (double h : kRiskPremiumHorizons) {
            const auto row = risk_premium_row(p, x, 0.0, h);
            CHECK(std::abs(row.sofr3m) <= 1e-5);
            CHECK(std::abs(row.eurodollar) <= 1e-5);
            CHECK(std::abs(row.sofr1m) <= 1e-5);
            CHECK(std::abs(row.fedfunds) <= 1e-5);
            CHECK(std::abs(risk_premium(p, x, 0.0, h)) <= 1e-5);
        }
    }
    ModelParams bad = ModelParams::reference();
    bad.mu_eta = 1.0;
    CHECK_THROWS_AS(risk_premium(bad, StateVector{}, 0.0, 0.25), ModelError);
}

TEST_CASE("P expectation of futures at expiry agrees with a small simulation") {
    const ModelParams p = ModelParams::reference();
    std::mt19937_64 rng(41);
    const StateVector x = testing_support::random_state(rng);
    const double h = 0.5;
    const auto e = expected_futures_at_expiry_p(p, x, h);
    McOptions o;
    o.dt = 1.0 / 250.0;
    const auto mc = mc_expected_futures_p(p, x, h, 4000, 5, o);
    CHECK(std::abs(e.sofr3m - mc.sofr3m.estimate) <= 4.0 * mc.sofr3m.stderr_);
    CHECK(std::abs(e.eurodollar - mc.eurodollar.estimate) <= 4.0 * mc.eurodollar.stderr_);
    CHECK(std::abs(e.sofr1m - mc.sofr1m.estimate) <= 4.0 * mc.sofr1m.stderr_);
    CHECK(std::abs(e.fedfunds - mc.fedfunds.estimate) <= 4.0 * mc.fedfunds.stderr_);
}

TEST_CASE("instrument dispatch matches the direct functions") {
    const ModelParams p = ModelParams::reference();
    std::mt19937_64 rng(43);
    const StateVector x = testing_support::random_state(rng);
    InstrumentSpec s;
    s.kind = InstrumentKind::EurodollarFut;
    s.S = 0.5;
    s.T = 0.5 + kThreeMonthAccrual;
    CHECK(price(p, x, s) == eurodollar_futures(p, x, 0, s.S, s.T));
    s.kind = InstrumentKind::Cds;
    s.schedule = regular_schedule(0, 0.5, 0.25);
    CHECK(price(p, x, s) == cds_spread(p, x, 0, s.schedule));
    CHECK(std::string(to_string(InstrumentKind::OisFf)) == "OisFf");
}
