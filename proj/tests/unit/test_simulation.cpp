#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <random>
#include <sstream>

#include "affine_curves/mc_pricing.hpp"
#include "affine_curves/simulation.hpp"
#include "support.hpp"

using namespace affine_curves;

namespace {

struct ThreadsGuard {
    explicit ThreadsGuard(const char* n) { ::setenv("AFFINE_CURVES_THREADS", n, 1); }
    ~ThreadsGuard() { ::unsetenv("AFFINE_CURVES_THREADS"); }
};

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("paths are reproducible and independent of the thread count") {
    const ModelParams p = ModelParams::reference();
    std::mt19937_64 rng(1);
    const StateVector x = testing_support::random_state(rng);
    PathSet a, b, c;
    {
        ThreadsGuard g("1");
        a = simulate_paths(p, x, Measure::Q, 0.01, 50, 17, 99);
        b = simulate_paths(p, x, Measure::Q, 0.01, 50, 17, 99);
    }
    {
        ThreadsGuard g("3");
        c = simulate_paths(p, x, Measure::Q, 0.01, 50, 17, 99);
    }
    CHECK(a.states == b.states);
    CHECK(a.states == c.states);
    std::ostringstream s1, s2;
    a.write_binary(s1);
    c.write_binary(s2);
    CHECK(s1.str() == s2.str());
    CHECK(s1.str().size() == 4 + 4 + 8 + 8 + 8 + 17 * 51 * 8 * 8);
    const auto d = simulate_paths(p, x, Measure::Q, 0.01, 50, 17, 100);
    CHECK(d.states != a.states);
    for (std::size_t i = 0; i < a.n_paths; ++i) CHECK(a.at(i, 0) == x);
}

TEST_CASE("square-root factors are never negative") {
    ModelParams p = ModelParams::reference();
    p.sigma_xi = 6.0;
    p.sigma_eta = 2.0;
    p.sigma_nu = 8.0;
    StateVector x;
    x.xi = 0.01;
    x.eta = 0.001;
    x.nu = 0.05;
    const auto ps = simulate_paths(p, x, Measure::Q, 1.0 / 252, 500, 200, 3);
    double lo = 0.0;
    std::size_t zeros = 0;
    for (const auto& s : ps.states) {
        lo = std::min({lo, s.xi, s.eta, s.nu, s.lambda, s.phi});
        zeros += s.nu == 0.0;
    }
    CHECK(lo == 0.0);
    CHECK(zeros > 0);  // the truncation is exercised
}

TEST_CASE("zero volatility paths follow the deterministic solution") {
    ModelParams p = testing_support::zero_vol(ModelParams::reference());
    p.theta_eta = p.theta_nu = 0.0;
    StateVector x;
    x.r_s = 0.01;
    x.theta_s = 0.04;
    x.zeta = 0.002;
    const auto ps = simulate_paths(p, x, Measure::Q, 0.05, 40, 2, 1);
    const double kr = p.kappa_r, kt = p.kappa_theta, tt = p.theta_theta;
    for (std::size_t k = 0; k <= 40; ++k) {
        const double u = 0.05 * static_cast<double>(k);
        const double th = tt + (x.theta_s - tt) * std::exp(-kt * u);
        const double r = tt + (x.theta_s - tt) * kr / (kr - kt) * (std::exp(-kt * u) - std::exp(-kr * u)) +
                         (x.r_s - tt) * std::exp(-kr * u);
        const double z = p.theta_zeta + (x.zeta - p.theta_zeta) * std::exp(-p.kappa_zeta * u);
        CHECK(ps.at(1, k).r_s == Catch::Approx(r).epsilon(1e-12));
        CHECK(ps.at(1, k).theta_s == Catch::Approx(th).epsilon(1e-12));
        CHECK(ps.at(1, k).zeta == Catch::Approx(z).margin(1e-15));
        CHECK(ps.at(1, k).lambda == 0.0);
        CHECK(ps.at(1, k).xi == 0.0);
    }
    CHECK(ps.jump_events[0].empty());
}

TEST_CASE("zeta reverts to its stationary mean") {
    const ModelParams p = ModelParams::reference();
    StateVector x;
    x.zeta = p.theta_zeta + 0.002;
    const auto ps = simulate_paths(p, x, Measure::Q, 0.5, 10, 4000, 8);
    std::vector<double> z;
    for (std::size_t i = 0; i < ps.n_paths; ++i) z.push_back(ps.at(i, 10).zeta);
    const double T = 5.0, k = p.kappa_zeta, s = p.sigma_zeta;
    const double m = p.theta_zeta + 0.002 * std::exp(-k * T);
    const double v = s * s * -std::expm1(-2 * k * T) / (2 * k);
    CHECK(std::abs(mean(z) - m) <= 3.0 * std::sqrt(v / 4000.0));
    CHECK(variance(z) == Catch::Approx(v).epsilon(0.1));
}

TEST_CASE("jump counts at constant intensity are Poisson") {
    ModelParams p = ModelParams::reference();
    p.sigma_xi = p.sigma_eta = p.sigma_nu = 0.0;
    p.theta_eta = 3.0;
    p.theta_nu = 5.0;
    StateVector x;
    x.xi = x.eta = 3.0;
    x.nu = 5.0;
    const double T = 2.0;
    const auto ps = simulate_paths(p, x, Measure::Q, 0.01, 200, 3000, 12);
    std::vector<double> nl, np, sizes;
    for (const auto& ev : ps.jump_events) {
        double a = 0, b = 0;
        for (const auto& e : ev) {
            (e.coordinate == idx::lambda ? a : b) += 1;
            sizes.push_back(e.size);
            CHECK(e.time > 0.0);
            CHECK(e.time <= T);
        }
        nl.push_back(a);
        np.push_back(b);
    }
    const double n = 3000;
    CHECK(std::abs(mean(nl) - 3.0 * T) <= 4.0 * std::sqrt(3.0 * T / n));
    CHECK(std::abs(mean(np) - 5.0 * T) <= 4.0 * std::sqrt(5.0 * T / n));
    CHECK(variance(nl) == Catch::Approx(3.0 * T).epsilon(0.1));
    CHECK(variance(np) == Catch::Approx(5.0 * T).epsilon(0.1));
    CHECK(std::abs(mean(sizes) - p.mean_jump) <= 4.0 * p.mean_jump / std::sqrt(static_cast<double>(sizes.size())));
}

TEST_CASE("discounted SOFR bond is a martingale") {
    const ModelParams p = ModelParams::reference();
    std::mt19937_64 rng(2);
    const StateVector x = testing_support::random_state(rng);
    const double T = 2.0;
    PathEngine engine(p, Measure::Q, 0.05);
    std::vector<double> d;
    for (std::size_t i = 0; i < 20000; ++i) {
        Rng r(5, i);
        PathState s = engine.start(x, 0.0, r);
        engine.advance(s, T, r);
        d.push_back(std::exp(-s.int_r));
    }
    const auto sched = std::vector<double>{T};
    const double bond = sofr_discount_factors(build_affine_coefficients(p), x, 0, sched, kDefaultOdeStep)[0];
    CHECK(std::abs(mean(d) - bond) <= 3.0 * std::sqrt(variance(d) / 20000.0));
}

TEST_CASE("small Monte Carlo agrees with closed-form prices") {
    const ModelParams p = ModelParams::reference();
    std::mt19937_64 rng(4);
    const StateVector x = testing_support::random_state(rng);
    std::vector<InstrumentSpec> specs(4);
    specs[0].kind = InstrumentKind::SpotLibor;
    specs[0].T = 0.25;
    specs[1].kind = InstrumentKind::TermRepo;
    specs[1].T = 0.5;
    specs[2].kind = InstrumentKind::Sofr1mFut;
    specs[2].S = 0.25;
    specs[2].T = 0.25 + 1.0 / 12;
    specs[3].kind = InstrumentKind::EurodollarFut;
    specs[3].S = 0.25;
    specs[3].T = 0.25 + kThreeMonthAccrual;
    McOptions o;
    o.dt = 1.0 / 500;
    const auto mc = mc_price_all(specs, p, x, 3000, 21, o);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        INFO(to_string(specs[i].kind));
        CHECK(std::abs(mc[i].estimate - price(p, x, specs[i])) <= 3.5 * mc[i].stderr_);
        CHECK(mc[i].stderr_ > 0.0);
    }
}

TEST_CASE("Monte Carlo standard errors shrink like one over root n") {
    const ModelParams p = ModelParams::reference();
    std::mt19937_64 rng(6);
    const StateVector x = testing_support::random_state(rng);
    InstrumentSpec s;
    s.kind = InstrumentKind::Sofr1mFut;
    s.S = 0.25;
    s.T = 0.25 + 1.0 / 12;
    McOptions o;
    o.dt = 1.0 / 250;
    const auto a = mc_price(s, p, x, 1000, 1, o);
    const auto b = mc_price(s, p, x, 4000, 2, o);
    CHECK(b.stderr_ / a.stderr_ == Catch::Approx(0.5).margin(0.1));
    CHECK(a.n_paths == 1000);
}

TEST_CASE("survival with a decaying intensity and no jumps") {
    ModelParams p = ModelParams::reference();
    p.theta_eta = 0.0;
    p.sigma_xi = p.sigma_eta = 0.0;
    StateVector x;
    x.lambda = 0.8;
    const double T = 1.0, b = p.beta_lambda;
    const double exact = std::exp(-x.lambda * -std::expm1(-b * T) / b);
    const auto s = solve_riccati(p, SelectorVector::survival(), 0.0, Vec8::Zero(), T);
    CHECK(std::exp(s.exponent(T, x.vec())) == Catch::Approx(exact).epsilon(1e-12));
    McOptions o;
    o.dt = 1.0 / 200;
    const auto mc = mc_survival(p, x, T, 20000, 3, o);
    CHECK(std::abs(mc.estimate - exact) <= 3.0 * mc.stderr_);
}

TEST_CASE("default times on stored paths at a constant intensity") {
    // A flat lambda path gives an exponential default time.
    const double L = 0.5, dt = 0.01;
    std::vector<StateVector> path(501);
    for (auto& s : path) s.lambda = L;
    std::size_t defaults = 0;
    const std::size_t n = 20000;
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = simulate_default_time(path, dt, 0, 2.0, i);
        if (t) {
            ++defaults;
            CHECK(*t > 0.0);
            CHECK(*t <= 2.0 + 1e-12);
        }
    }
    const double q = -std::expm1(-L * 2.0);
    CHECK(std::abs(static_cast<double>(defaults) / n - q) <= 3.0 * std::sqrt(q * (1 - q) / n));
    CHECK_THROWS_AS(simulate_default_time(path, dt, 600, 2.0, 1), InputError);
}

TEST_CASE("simulation input validation") {
    const ModelParams p = ModelParams::reference();
    const StateVector x;
    CHECK_THROWS_AS(simulate_paths(p, x, Measure::Q, 0.0, 10, 1, 1), InputError);
    CHECK_THROWS_AS(simulate_paths(p, x, Measure::Q, 0.01, 10, 0, 1), InputError);
    ModelParams bad = p;
    bad.kappa_r = -1;
    CHECK_THROWS_AS(simulate_paths(bad, x, Measure::Q, 0.01, 10, 1, 1), ValidationError);
    const auto ps = simulate_paths(p, x, Measure::P, 0.01, 3, 2, 1);
    std::ostringstream os;
    ps.write_csv(os);
    std::size_t lines = 0;
    for (char ch : os.str()) lines += ch == '\n';
    CHECK(lines == 1 + 2 * 4);
}
