#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "affine_curves/estimation.hpp"
#include "affine_curves/kalman.hpp"
#include "affine_curves/measurement.hpp"
#include "affine_curves/nelder_mead.hpp"
#include "affine_curves/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace affine_curves;
using testing_support::filter_by_reduction;
using testing_support::z_by_quadrature;

namespace {

const std::vector<std::string> kGaussianBlock{"kappa_r",     "kappa_theta", "theta_theta", "sigma_r",
                                              "sigma_theta", "rho",         "kappa_zeta",  "sigma_zeta"};

SyntheticPanel make_panel(std::size_t n, std::uint64_t seed, double mask = 0.0, bool noise = true) {
    SyntheticOptions o;
    o.seed = seed;
    o.mask_repo6m = mask;
    o.noise = noise;
    return generate_synthetic_panel(ModelParams::reference(), default_panel_dates(n), o);
}

}  // namespace

TEST_CASE("measurement loadings equal finite differences of model yields") {
    const ModelParams p = testing_support::zero_vol(ModelParams::reference());
    std::mt19937_64 rng(11);
    const StateVector x = testing_support::random_state(rng);
    MeasurementModel::Horizons hz;
    hz.eurodollar = 1.0;
    hz.sofr3m_forward = 1.0;
    const MeasurementModel mm(p, hz);

    struct Case {
        MeasurementCell cell;
        std::function<double(const StateVector&)> rate;
    };
    const double d3 = kThreeMonthAccrual;
    std::vector<Case> cases;
    cases.push_back({{CellForm::SpotLibor, MeasurementGroup::Libor, 0.25, 0.25, 0, 0, 0, true},
                     [&](const StateVector& s) { return spot_libor(p, s, 0.0, 0.25); }});
    cases.push_back({{CellForm::SpotRepo, MeasurementGroup::Libor, 0.5, 0.5, 0, 0, 0, true},
                     [&](const StateVector& s) { return term_repo(p, s, 0.0, 0.5); }});
    cases.push_back({{CellForm::EurodollarFwd, MeasurementGroup::Libor, d3, 0.4, 0, 0, 0, true},
                     [&](const StateVector& s) { return eurodollar_futures(p, s, 0.0, 0.4, 0.4 + d3); }});
    cases.push_back({{CellForm::Sofr3mFwd, MeasurementGroup::Sofr, d3, 0.7, 0, 0, 0, true},
                     [&](const StateVector& s) { return sofr3m_futures(p, s, 0.0, 0.7, 0.7 + d3); }});
    for (const auto& c : cases) {
        auto y = [&](const StateVector& s) { return c.cell.to_measurement(c.rate(s)); };
        const auto [a, b] = mm.row(c.cell);
        CHECK(std::abs(a + b.dot(x.reduced()) - y(x)) <= 1e-12);
        for (int k = 0; k < 6; ++k) {
            const double h = 1e-6;
            Vec6 up = x.reduced(), dn = x.reduced();
            up[k] += h;
            dn[k] -= h;
            const double fd = (y(StateVector::from_reduced(up)) - y(StateVector::from_reduced(dn))) / (2.0 * h);
            CHECK(std::abs(fd - b[k]) <= 1e-8);
        }
    }
}

TEST_CASE("1M contracts far from accrual reproduce the Gaussian integrals") {
    const ModelParams p = ModelParams::reference();
    const MeasurementModel mm(p, {});
    std::mt19937_64 rng(5);
    for (int n = 0; n < 20; ++n) {
        const StateVector x = testing_support::random_state(rng);
        const double S = 0.3 + 0.05 * n, T = S + 31.0 / 360.0;
        const auto I = gaussian_average_integrals(p, x, 0.0, S, T);
        MeasurementCell c{CellForm::Sofr1m, MeasurementGroup::Sofr, T - S, 0.0, S, T, 0.0, false};
        CHECK(mm.evaluate(c, x.reduced()) == Catch::Approx(I.I_r / (T - S)).epsilon(1e-14));
        CHECK(mm.evaluate(c, x.reduced()) == Catch::Approx(sofr1m_futures(p, x, 0.0, S, T)).epsilon(1e-14));
        c.form = CellForm::FedFunds;
        CHECK(mm.evaluate(c, x.reduced()) ==
              Catch::Approx((I.I_r + I.I_zeta) / (T - S)).epsilon(1e-14));
    }
}

TEST_CASE("Eurodollar cell at settlement is the 91-day LIBOR exponent over the accrual") {
    const ModelParams p = ModelParams::reference();
    const MeasurementModel mm(p, {});
    const auto sol = solve_riccati(p, SelectorVector::libor(), 0.0, Vec8::Zero(), kThreeMonthAccrual);
    const MeasurementCell c{CellForm::EurodollarFwd, MeasurementGroup::Libor, kThreeMonthAccrual, 0.0, 0, 0, 0, true};
    const auto [a, b] = mm.row(c);
    CHECK(a == sol.A_values.back() / kThreeMonthAccrual);
    for (int k = 0; k < 6; ++k) CHECK(b[k] == sol.B_values.back()[kReducedToFull[k]] / kThreeMonthAccrual);
}

TEST_CASE("synthetic quotes at zero noise equal the pricing functions") {
    const ModelParams p = ModelParams::reference();
    const auto sp = make_panel(160, 3, 0.0, false);
    const auto& panel = sp.panel;
    std::size_t checked = 0, in_accrual = 0;
    for (std::size_t i = 0; i < panel.rows(); ++i) {
        const Date d = panel.dates[i];
        const StateVector x = StateVector::from_reduced(sp.states[i]);
        for (std::size_t j = 0; j < panel.cols(); ++j) {
            const auto& col = panel.columns[j];
            const double v = panel.value(i, j);
            if (col.is_fixing() || is_missing(v)) continue;
            double expect = 0.0;
            if (col.kind == ColumnKind::Libor) {
                expect = spot_libor(p, x, 0.0, col.tenor_years());
            } else if (col.kind == ColumnKind::Repo) {
                expect = term_repo(p, x, 0.0, col.tenor_years());
            } else {
                const auto terms = resolve_contract(col, d);
                REQUIRE(terms);
                const double S = year_fraction(d, terms->S), T = year_fraction(d, terms->T);
                std::vector<Fixing> fx;
                if (S < 0.0) {
                    fx = *panel.realized_fixings(fixing_kind_for(col.kind), terms->S, d);
                    ++in_accrual;
                }
                switch (col.kind) {
                    case ColumnKind::Eurodollar: expect = eurodollar_futures(p, x, 0.0, S, S + kThreeMonthAccrual); break;
                    case ColumnKind::Sofr3m: expect = sofr3m_futures(p, x, 0.0, S, S + kThreeMonthAccrual, fx); break;
                    case ColumnKind::Sofr1m: expect = sofr1m_futures(p, x, 0.0, S, T, fx); break;
                    case ColumnKind::FedFunds: expect = fedfunds_futures(p, x, 0.0, S, T, fx); break;
                    default: FAIL("unexpected column");
                }
            }
            CHECK(std::abs(v - expect) <= 1e-12);
            ++checked;
        }
    }
    CHECK(checked > 160 * 20);
    CHECK(in_accrual > 100);
}

TEST_CASE("synthetic panels: masking ratio, determinism and filter smoke") {
    const auto a = make_panel(1000, 9, 0.1);
    const auto b = make_panel(1000, 9, 0.1);
    CHECK(a.panel.values.size() == b.panel.values.size());
    CHECK(std::equal(a.panel.values.begin(), a.panel.values.end(), b.panel.values.begin(),
                     [](double u, double v) { return (is_missing(u) && is_missing(v)) || u == v; }));
    const auto j = *a.panel.find_column({ColumnKind::Repo, 0, 0, 0, 6});
    std::size_t missing = 0;
    for (std::size_t i = 0; i < a.panel.rows(); ++i) missing += is_missing(a.panel.value(i, j));
    const double n = 1000.0, sd = std::sqrt(n * 0.1 * 0.9);
    CHECK(std::abs(static_cast<double>(missing) - 0.1 * n) <= 3.0 * sd);
    const auto ll = quasi_loglik(ModelParams::reference(), a.panel);
    CHECK(ll.feasible);
    CHECK(std::isfinite(ll.value));
    for (const auto& x : a.states)
        for (int k = 3; k < 6; ++k) CHECK(x[k] >= 0.0);
}

TEST_CASE("Z vanishes linearly as dt -> 0") {
    const ModelParams p = ModelParams::reference();
    std::mt19937_64 rng(2);
    const Vec6 x = testing_support::random_state(rng).reduced();
    const auto d = reduced_dynamics(p, Measure::P);
    Vec6 g;
    g << 1, 1, 1, x[3], x[4], x[5];
    const double rate = (d.Sigma * g.asDiagonal() * d.Sigma.transpose()).norm();
    for (double dt : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const double z = conditional_covariance_Z(p, x, dt).norm();
        CHECK(z <= 1.1 * rate * dt);
    }
    CHECK(conditional_covariance_Z(p, x, 1e-6).norm() / 1e-6 == Catch::Approx(rate).epsilon(1e-3));
}

TEST_CASE("Z of the zeta factor matches the OU variance") {
    std::mt19937_64 rng(4);
    for (int n = 0; n < 20; ++n) {
        const ModelParams p = testing_support::random_params(rng);
        const Vec6 x = testing_support::random_state(rng).reduced();
        const double k = p.kappa_zeta, s = p.sigma_zeta;
        for (double dt : {1.0 / 252.0, 0.25, 2.0}) {
            const double ou = s * s * -std::expm1(-2.0 * k * dt) / (2.0 * k);
            CHECK(conditional_covariance_Z(p, x, dt)(2, 2) == Catch::Approx(ou).epsilon(1e-12));
        }
    }
}

TEST_CASE("Z matches quadrature of its integrand") {
    std::mt19937_64 rng(8);
    for (int n = 0; n < 10; ++n) {
        const ModelParams p = testing_support::random_params(rng);
        if (!to_p_measure(p).stationary) continue;
        const Vec6 x = testing_support::random_state(rng).reduced();
        for (double dt : {1.0 / 252.0, 0.1}) {
            const Mat6 Z = conditional_covariance_Z(p, x, dt);
            const Mat6 Q = z_by_quadrature(p, x, dt);
            CHECK((Z - Q).norm() <= 1e-8 * Q.norm());
        }
    }
}

TEST_CASE("Lyapunov solution and stationary moments") {
    const ModelParams p = ModelParams::reference();
    const auto [m, P] = stationary_moments(p);
    const auto pm = to_p_measure(p);
    const auto d = reduced_dynamics(p, Measure::P);
    Vec6 g;
    g << 1, 1, 1, m[3], m[4], m[5];
    const Mat6 Q = d.Sigma * g.asDiagonal() * d.Sigma.transpose();
    CHECK((pm.K * P + P * pm.K.transpose() - Q).norm() <= 1e-12 * Q.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<Mat6>(P).eigenvalues().minCoeff() > 0.0);
    ModelParams bad = p;
    bad.mu_eta = 1.0;
    CHECK_THROWS_AS(stationary_moments(bad), ModelError);
}

TEST_CASE("kalman step: no observations leaves the prior untouched") {
    std::mt19937_64 rng(1);
    const Vec6 m = testing_support::random_state(rng).reduced();
    const Mat6 P = Mat6::Identity() * 1e-4;
    const auto u = kalman_step(m, P, VecX::Ones(4), VecX::Zero(4), MatX6::Ones(4, 6), VecX::Ones(4), {0, 0, 0, 0});
    CHECK(u.mean == m);
    CHECK(u.cov == P);
    CHECK(u.loglik == 0.0);
    CHECK(u.n_obs == 0);
}

TEST_CASE("kalman step: W selection equals the hand-reduced system") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 50; ++trial) {
        const int N = 12;
        VecX y(N), A(N), h(N);
        MatX6 B(N, 6);
        for (int r = 0; r < N; ++r) {
            y[r] = 0.01 * z(rng);
            A[r] = 0.01 * z(rng);
            h[r] = 1e-8 * (1.0 + std::abs(z(rng)));
            for (int k = 0; k < 6; ++k) B(r, k) = z(rng);
        }
        Vec6 m;
        for (int k = 0; k < 6; ++k) m[k] = 0.01 * z(rng);
        Mat6 L;
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b) L(a, b) = 0.01 * z(rng);
        const Mat6 P = L * L.transpose() + 1e-6 * Mat6::Identity();
        std::vector<unsigned char> mask(N);
        std::vector<int> keep;
        for (int r = 0; r < N; ++r) {
            mask[r] = (rng() % 3) != 0;
            if (mask[r]) keep.push_back(r);
        }
        const auto n = static_cast<Eigen::Index>(keep.size());
        VecX yr(n), Ar(n), hr(n);
        MatX6 Br(n, 6);
        for (Eigen::Index r = 0; r < n; ++r) {
            yr[r] = y[keep[r]];
            Ar[r] = A[keep[r]];
            hr[r] = h[keep[r]];
            Br.row(r) = B.row(keep[r]);
        }
        const auto w = kalman_step(m, P, y, A, B, h, mask);
        const auto hand = kalman_step(m, P, yr, Ar, Br, hr, std::vector<unsigned char>(keep.size(), 1));
        CHECK(w.n_obs == keep.size());
        CHECK((w.mean - hand.mean).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK((w.cov - hand.cov).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK(std::abs(w.loglik - hand.loglik) <= 1e-14 * std::max(1.0, std::abs(hand.loglik)));
    }
}

TEST_CASE("kalman step: an uninformative row has no influence") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    const int N = 5;
    VecX y(N), A = VecX::Zero(N), h = VecX::Constant(N, 1e-6);
    MatX6 B(N, 6);
    for (int r = 0; r < N; ++r) {
        y[r] = 0.01 * z(rng);
        for (int k = 0; k < 6; ++k) B(r, k) = z(rng);
    }
    const Vec6 m = Vec6::Zero();
    const Mat6 P = 1e-4 * Mat6::Identity();
    std::vector<unsigned char> all(N, 1), drop(N, 1);
    drop[2] = 0;
    const auto dropped = kalman_step(m, P, y, A, B, h, drop);
    h[2] = 1e30;
    const auto flat = kalman_step(m, P, y, A, B, h, all);
    CHECK((flat.mean - dropped.mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((flat.cov - dropped.cov).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("masked filtering equals filtering the physically reduced system") {
    const ModelParams p = ModelParams::reference();
    const auto sp = make_panel(500, 21, 0.1);
    const auto pp = prepare_panel(sp.panel);
    const auto w = run_filter(p, pp);
    const auto hand = filter_by_reduction(p, pp);
    REQUIRE(w.filtered_mean.size() == hand.filtered_mean.size());
    double dm = 0.0, dc = 0.0;
    for (std::size_t i = 0; i < w.filtered_mean.size(); ++i) {
        dm = std::max(dm, (w.filtered_mean[i] - hand.filtered_mean[i]).cwiseAbs().maxCoeff());
        dc = std::max(dc, (w.filtered_cov[i] - hand.filtered_cov[i]).cwiseAbs().maxCoeff());
    }
    CHECK(dm <= 1e-14);
    CHECK(dc <= 1e-14);
    CHECK(std::abs(w.loglik - hand.loglik) <= 1e-14 * std::abs(hand.loglik));

    // A column that is missing everywhere is the same as no column.
    ObservationPanel masked = sp.panel;
    const auto j = *masked.find_column({ColumnKind::Repo, 0, 0, 0, 6});
    for (std::size_t i = 0; i < masked.rows(); ++i) masked.value(i, j) = kMissing;
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < masked.cols(); ++k)
        if (k != j) others.push_back(k);
    const auto l1 = quasi_loglik(p, masked);
    const auto l2 = quasi_loglik(p, masked.select_columns(others));
    CHECK(l1.value == l2.value);
}

TEST_CASE("log-likelihood does not depend on column order") {
    const ModelParams p = ModelParams::reference();
    const auto sp = make_panel(300, 13, 0.1);
    std::vector<std::size_t> idx(sp.panel.cols());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(1);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto a = quasi_loglik(p, sp.panel);
    const auto b = quasi_loglik(p, sp.panel.select_columns(idx));
    REQUIRE(a.feasible);
    CHECK(b.value == Catch::Approx(a.value).epsilon(1e-10));
}

TEST_CASE("filter covariances stay symmetric PSD over 10^4 dates") {
    const ModelParams p = ModelParams::reference();
    const auto sp = make_panel(10000, 17, 0.1);
    FilterOptions fo;
    const auto out = run_filter(p, prepare_panel(sp.panel), fo);
    double asym = 0.0, min_eig = 0.0;
    for (const auto* covs : {&out.filtered_cov, &out.predicted_cov})
        for (const auto& P : *covs) {
            asym = std::max(asym, (P - P.transpose()).cwiseAbs().maxCoeff());
            min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat6>(P).eigenvalues().minCoeff());
        }
    CHECK(asym <= 1e-12);
    CHECK(min_eig >= -1e-10);
    CHECK(std::isfinite(out.loglik));
}

TEST_CASE("zero-noise panel at the true parameters: small innovations") {
    const ModelParams p = ModelParams::reference();
    const auto sp = make_panel(400, 23, 0.0, false);
    FilterOptions fo;
    fo.keep_innovations = true;
    const auto out = run_filter(p, prepare_panel(sp.panel), fo);
    double quad = 0.0, logdet = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 1; i < out.innovations.size(); ++i) {
        if (out.n_obs[i] == 0) continue;
        Eigen::LLT<MatX> llt(out.innovation_cov[i]);
        quad += out.innovations[i].dot(llt.solve(out.innovations[i]));
        const MatX L = llt.matrixL();
        for (Eigen::Index k = 0; k < L.rows(); ++k) logdet += 2.0 * std::log(L(k, k));
        n += out.n_obs[i];
    }
    CHECK(quad < 0.5 * static_cast<double>(n));
    CHECK(std::abs(logdet) > 10.0 * quad);
}

TEST_CASE("infeasible parameters give -inf with a reason and never throw") {
    const auto sp = make_panel(50, 1);
    const auto pp = prepare_panel(sp.panel);
    ModelParams p = ModelParams::reference();
    p.mu_eta = 1.0;
    LoglikResult r;
    CHECK_NOTHROW(r = quasi_loglik(p, pp));
    CHECK_FALSE(r.feasible);
    CHECK(r.value == -std::numeric_limits<double>::infinity());
    CHECK(r.reason.find("stationarity") != std::string::npos);

    p = ModelParams::reference();
    p.kappa_r = -1.0;
    p.sigma_nu = -0.5;
    r = quasi_loglik(p, pp);
    CHECK_FALSE(r.feasible);
    CHECK(r.reason.find("kappa_r must be > 0") != std::string::npos);
    CHECK(r.reason.find("sigma_nu must be >= 0") != std::string::npos);

    p = ModelParams::reference();
    p.mu_nu = p.kappa_nu / p.sigma_nu;
    r = quasi_loglik(p, pp);
    CHECK_FALSE(r.feasible);
}

TEST_CASE("the true parameters are a local maximum on synthetic data") {
    const ModelParams p = ModelParams::reference();
    const auto sp = make_panel(500, 31);
    const auto pp = prepare_panel(sp.panel);
    const auto tr = ParameterTransform::from_names(kGaussianBlock);
    const auto se = opg_standard_errors(p, pp, tr, 1e-5);
    for (double s : se) REQUIRE(std::isfinite(s));
    const double base = quasi_loglik(p, pp).value;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> sign(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        ModelParams q = p;
        for (std::size_t k = 0; k < tr.size(); ++k) {
            const auto* d = tr.free()[k];
            q.*d->member += (sign(rng) ? 10.0 : -10.0) * se[k];
        }
        q.rho = std::clamp(q.rho, -1.0, 1.0);
        const auto r = quasi_loglik(q, pp);
        CHECK((!r.feasible || r.value <= base));
    }
}

TEST_CASE("fit started at the truth stays there") {
    const ModelParams p = ModelParams::reference();
    const auto sp = make_panel(300, 41);
    FitOptions o;
    o.free_params = {"kappa_r", "sigma_r", "kappa_zeta"};
    const auto r = fit(sp.panel, p, o);
    const double truth = quasi_loglik(p, sp.panel).value;
    CHECK(r.converged);
    CHECK(r.loglik >= truth - o.f_tol);
    CHECK(r.filtered_states.size() == 300);
    CHECK(r.free_params.size() == 3);
    for (double s : r.standard_errors) CHECK(s > 0.0);
    std::ostringstream os;
    write_estimation_result(os, r);
    std::istringstream in(os.str());
    CHECK(read_params(in) == r.params);
}

TEST_CASE("fit rejects an infeasible start with the violated constraints") {
    const auto sp = make_panel(40, 2);
    ModelParams p = ModelParams::reference();
    p.kappa_theta = -0.1;
    try {
        fit(sp.panel, p);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("kappa_theta must be > 0") != std::string::npos);
    }
    FitOptions o;
    o.free_params = {"mean_jump"};
    CHECK_THROWS_AS(fit(sp.panel, ModelParams::reference(), o), InputError);
}

TEST_CASE("parameter transform round-trips") {
    std::mt19937_64 rng(9);
    const auto tr = ParameterTransform::from_names({});
    for (int n = 0; n < 20; ++n) {
        const ModelParams p = testing_support::random_params(rng);
        const ModelParams q = tr.to_params(tr.to_unconstrained(p), ModelParams{});
        for (const auto& d : kParamTable) {
            if (!d.estimable) continue;
            CHECK(q.*d.member == Catch::Approx(p.*d.member).epsilon(1e-13).margin(1e-300));
        }
    }
}

TEST_CASE("nelder-mead minimizes smooth test functions") {
    auto rosen = [](const Eigen::VectorXd& x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    NelderMeadOptions o;
    o.f_tol = 1e-14;
    o.initial_step = 0.5;
    const auto r = nelder_mead(rosen, Eigen::Vector2d(-1.2, 1.0), o);
    CHECK(r.converged);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-4);
    CHECK(std::abs(r.x[1] - 1.0) < 1e-4);

    Eigen::VectorXd c(8);
    c << 1, -2, 3, -4, 5, -6, 7, -8;
    auto quad = [&](const Eigen::VectorXd& x) { return (x - c).squaredNorm(); };
    const auto q = nelder_mead(quad, Eigen::VectorXd::Zero(8), o);
    CHECK((q.x - c).norm() < 1e-5);

    auto wall = [](const Eigen::VectorXd& x) {
        return x[0] < 0.0 ? std::numeric_limits<double>::infinity() : (x[0] - 1.0) * (x[0] - 1.0);
    };
    const auto w = nelder_mead(wall, Eigen::VectorXd::Constant(1, 0.1), o);
    CHECK(std::abs(w.x[0] - 1.0) < 1e-5);
    CHECK_THROWS_AS(nelder_mead(wall, Eigen::VectorXd::Constant(1, -1.0), o), InputError);
}
