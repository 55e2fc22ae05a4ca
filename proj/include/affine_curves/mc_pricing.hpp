#pragma once

// Brute-force Monte Carlo prices of the instrument set, used as an oracle for
// the transform prices. Nested expectations are handled by fresh jump cohorts
// (eurodollar, by the tower property) or by independent branch paths (LIBOR
// legs of an IRS, where the fixing multiplies a discount factor).

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "affine_curves/analytics.hpp"
#include "affine_curves/pricing.hpp"
#include "affine_curves/simulation.hpp"

namespace affine_curves {

struct McEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
};

struct McOptions {
    double dt = kOracleDt;
    /// CDS legs by integrating out the unit-exponential default clock along each
    /// path; false draws explicit default times.
    bool cds_conditional = true;
};

namespace detail {

inline McEstimate sample_mean(const std::vector<double>& x) {
    const std::size_t n = x.size();
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    return {m, std::sqrt(var / static_cast<double>(n)), n};
}

/// mean(num) / mean(den) with a delta-method standard error.
inline McEstimate ratio_mean(const std::vector<double>& num, const std::vector<double>& den) {
    const std::size_t n = num.size();
    double mn = 0.0, md = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mn += num[i];
        md += den[i];
    }
    mn /= static_cast<double>(n);
    md /= static_cast<double>(n);
    const double r = mn / md;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = num[i] - r * den[i];
        ss += e * e;
    }
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    return {r, std::sqrt(var / static_cast<double>(n)) / std::abs(md), n};
}

struct Checkpoint {
    double int_r = 0.0;
    double int_zeta = 0.0;
    std::vector<double> int_lambda;  // per track
    std::vector<double> int_phi;
};

}  // namespace detail

/// Prices several instruments sharing the valuation time on common paths.
/// Each estimate is individually valid; estimates are correlated across instruments.
inline std::vector<McEstimate> mc_price_all(const std::vector<InstrumentSpec>& specs, const ModelParams& p,
                                            const StateVector& x, std::size_t n_paths, std::uint64_t seed,
                                            const McOptions& o = {}) {
    if (specs.empty()) return {};
    if (n_paths == 0) throw InputError("n_paths must be > 0");
    const double t = specs.front().t;
    for (const auto& s : specs)
        if (s.t != t) throw InputError("instruments priced together must share the valuation time");

    // Event grid and cohort start times.
    std::vector<double> times{t};
    std::vector<double> cohort_starts{t};
    std::vector<double> branch_starts;
    for (const auto& s : specs) {
        switch (s.kind) {
            case InstrumentKind::SpotLibor:
            case InstrumentKind::TermRepo: times.push_back(s.T); break;
            case InstrumentKind::EurodollarFut:
                times.insert(times.end(), {s.S, s.T});
                cohort_starts.push_back(s.S);
                break;
            case InstrumentKind::Sofr3mFut:
            case InstrumentKind::Sofr1mFut:
            case InstrumentKind::FedFundsFut: times.insert(times.end(), {std::max(s.S, t), s.T}); break;
            case InstrumentKind::OisSofr:
            case InstrumentKind::OisFf:
            case InstrumentKind::Cds: times.insert(times.end(), s.schedule.begin(), s.schedule.end()); break;
            case InstrumentKind::Irs3m:
            case InstrumentKind::Irs6m: {
                times.insert(times.end(), s.schedule.begin(), s.schedule.end());
                times.insert(times.end(), s.fixed_schedule.begin(), s.fixed_schedule.end());
                double prev = t;
                for (double Ti : s.schedule) {
                    branch_starts.push_back(prev);
                    prev = Ti;
                }
                break;
            }
        }
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::sort(cohort_starts.begin(), cohort_starts.end());
    cohort_starts.erase(std::unique(cohort_starts.begin(), cohort_starts.end()), cohort_starts.end());
    std::sort(branch_starts.begin(), branch_starts.end());
    branch_starts.erase(std::unique(branch_starts.begin(), branch_starts.end()), branch_starts.end());

    auto time_index = [&](double u) {
        return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), u) - times.begin());
    };
    auto cohort_index = [&](double u) {
        return static_cast<std::size_t>(std::lower_bound(cohort_starts.begin(), cohort_starts.end(), u) -
                                        cohort_starts.begin());
    };
    auto branch_index = [&](double u) {
        return static_cast<std::size_t>(std::lower_bound(branch_starts.begin(), branch_starts.end(), u) -
                                        branch_starts.begin());
    };
    // Branch lengths: first float period starting at each branch start.
    std::vector<double> branch_len(branch_starts.size(), 0.0);
    for (const auto& s : specs) {
        if (s.kind != InstrumentKind::Irs3m && s.kind != InstrumentKind::Irs6m) continue;
        double prev = t;
        for (double Ti : s.schedule) {
            auto& len = branch_len[branch_index(prev)];
            if (len != 0.0 && std::abs(len - (Ti - prev)) > 1e-12)
                throw InputError("IRS float periods starting on the same date must share their length");
            len = Ti - prev;
            prev = Ti;
        }
    }

    const std::size_t m = specs.size();
    std::vector<std::vector<double>> num(m, std::vector<double>(n_paths)), den(m, std::vector<double>(n_paths, 1.0));

    parallel_chunks(n_paths, [&](std::size_t b, std::size_t e) {
        PathEngine engine(p, Measure::Q, o.dt);
        std::vector<detail::Checkpoint> cps(times.size());
        std::vector<double> branch_value(branch_starts.size());
        std::vector<double> cds_prot(m), cds_acc(m);
        auto observe = [&](double u0, double r0, double l0, const PathState& st) {
            const double u1 = st.time;
            const double dF = std::exp(-l0) - std::exp(-st.tracks[0].int_lambda);
            const double Dmid = 0.5 * (std::exp(-r0) + std::exp(-st.int_r));
            const double mid = 0.5 * (u0 + u1);
            for (std::size_t i = 0; i < m; ++i) {
                if (specs[i].kind != InstrumentKind::Cds) continue;
                const auto& sch = specs[i].schedule;
                if (u1 > sch.back() + 1e-12) continue;
                const auto it = std::upper_bound(sch.begin(), sch.end(), u0 + 1e-12);
                const double prev = it == sch.begin() ? t : *(it - 1);
                cds_prot[i] += Dmid * dF;
                cds_acc[i] += (mid - prev) * Dmid * dF;
            }
        };
        const bool conditional = o.cds_conditional && std::any_of(specs.begin(), specs.end(), [](const auto& sp) {
                                     return sp.kind == InstrumentKind::Cds;
                                 });
        for (std::size_t path = b; path < e; ++path) {
            Rng rng(seed, path, 0);
            PathState s = engine.start(x, t, rng, true);
            std::fill(cds_prot.begin(), cds_prot.end(), 0.0);
            std::fill(cds_acc.begin(), cds_acc.end(), 0.0);
            std::size_t next_cohort = 1;
            auto record = [&](std::size_t k) {
                auto& c = cps[k];
                c.int_r = s.int_r;
                c.int_zeta = s.int_zeta;
                c.int_lambda.assign(cohort_starts.size(), 0.0);
                c.int_phi.assign(cohort_starts.size(), 0.0);
                for (std::size_t j = 0; j < s.tracks.size(); ++j) {
                    c.int_lambda[j] = s.tracks[j].int_lambda;
                    c.int_phi[j] = s.tracks[j].int_phi;
                }
            };
            for (std::size_t k = 0; k < times.size(); ++k) {
                if (conditional)
                    engine.advance(s, times[k], rng, nullptr, observe);
                else
                    engine.advance(s, times[k], rng);
                while (next_cohort < cohort_starts.size() && cohort_starts[next_cohort] <= times[k]) {
                    engine.add_track(s, rng);
                    ++next_cohort;
                }
                record(k);
                const std::size_t bi = branch_index(times[k]);
                if (bi < branch_starts.size() && branch_starts[bi] == times[k]) {
                    Rng brng(seed, path, 1 + bi);
                    PathState br = s;
                    br.tracks.clear();
                    br.int_r = br.int_zeta = 0.0;
                    engine.add_track(br, brng);
                    engine.advance(br, times[k] + branch_len[bi], brng);
                    branch_value[bi] =
                        std::expm1(br.int_r + br.int_zeta + br.tracks[0].int_lambda + br.tracks[0].int_phi) /
                        branch_len[bi];
                }
            }
            const JumpTrack& t0 = s.tracks[0];

            auto I_r = [&](double a, double c) { return cps[time_index(c)].int_r - cps[time_index(a)].int_r; };
            auto I_z = [&](double a, double c) { return cps[time_index(c)].int_zeta - cps[time_index(a)].int_zeta; };
            auto I_l = [&](std::size_t j, double a, double c) {
                return cps[time_index(c)].int_lambda[j] - cps[time_index(a)].int_lambda[j];
            };
            auto I_p = [&](std::size_t j, double a, double c) {
                return cps[time_index(c)].int_phi[j] - cps[time_index(a)].int_phi[j];
            };
            auto D = [&](double u) { return std::exp(-I_r(t, u)); };

            for (std::size_t i = 0; i < m; ++i) {
                const auto& sp = specs[i];
                double& N = num[i][path];
                double& Dn = den[i][path];
                switch (sp.kind) {
                    case InstrumentKind::SpotLibor:
                        N = std::expm1(I_r(t, sp.T) + I_z(t, sp.T) + I_l(0, t, sp.T) + I_p(0, t, sp.T)) / (sp.T - t);
                        break;
                    case InstrumentKind::TermRepo: N = std::expm1(I_r(t, sp.T) + I_p(0, t, sp.T)) / (sp.T - t); break;
                    case InstrumentKind::EurodollarFut: {
                        const std::size_t j = cohort_index(sp.S);
                        N = std::expm1(I_r(sp.S, sp.T) + I_z(sp.S, sp.T) + I_l(j, sp.S, sp.T) + I_p(j, sp.S, sp.T)) /
                            (sp.T - sp.S);
                        break;
                    }
                    case InstrumentKind::Sofr3mFut: {
                        const double a = std::max(sp.S, t);
                        N = std::expm1(log_compounded_factor(sp.realized_fixings) + I_r(a, sp.T)) /
                            (sp.T - sp.S);
                        break;
                    }
                    case InstrumentKind::Sofr1mFut: {
                        const double a = std::max(sp.S, t);
                        N = (weighted_sum(sp.realized_fixings) + I_r(a, sp.T)) / (sp.T - sp.S);
                        break;
                    }
                    case InstrumentKind::FedFundsFut: {
                        const double a = std::max(sp.S, t);
                        N = (weighted_sum(sp.realized_fixings) + I_r(a, sp.T) + I_z(a, sp.T)) / (sp.T - sp.S);
                        break;
                    }
                    case InstrumentKind::OisSofr:
                    case InstrumentKind::OisFf: {
                        N = 0.0;
                        Dn = 0.0;
                        double prev = t;
                        for (double Ti : sp.schedule) {
                            const double delta = Ti - prev;
                            double expo = I_r(prev, Ti);
                            if (sp.kind == InstrumentKind::OisFf) expo += I_z(prev, Ti);
                            N += D(Ti) * std::expm1(expo);
                            Dn += delta * D(Ti);
                            prev = Ti;
                        }
                        break;
                    }
                    case InstrumentKind::Irs3m:
                    case InstrumentKind::Irs6m: {
                        N = 0.0;
                        Dn = 0.0;
                        double prev = t;
                        for (double Ti : sp.schedule) {
                            N += (Ti - prev) * D(Ti) * branch_value[branch_index(prev)];
                            prev = Ti;
                        }
                        prev = t;
                        for (double Tj : sp.fixed_schedule) {
                            Dn += (Tj - prev) * D(Tj);
                            prev = Tj;
                        }
                        break;
                    }
                    case InstrumentKind::Cds: {
                        if (conditional) {
                            N = cds_prot[i];
                            Dn = cds_acc[i];
                            double prev = t;
                            for (double Ti : sp.schedule) {
                                Dn += (Ti - prev) * D(Ti) * std::exp(-cps[time_index(Ti)].int_lambda[0]);
                                prev = Ti;
                            }
                            break;
                        }
                        const double T = sp.schedule.back();
                        const bool dflt = t0.defaulted() && t0.default_time <= T;
                        N = dflt ? std::exp(-t0.default_int_r) : 0.0;
                        Dn = 0.0;
                        double prev = t;
                        for (double Ti : sp.schedule) {
                            if (!dflt || t0.default_time > Ti)
                                Dn += (Ti - prev) * D(Ti);
                            else if (t0.default_time > prev)
                                Dn += (t0.default_time - prev) * std::exp(-t0.default_int_r);
                            prev = Ti;
                        }
                        break;
                    }
                }
            }
        }
    });

    std::vector<McEstimate> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        switch (specs[i].kind) {
            case InstrumentKind::OisSofr:
            case InstrumentKind::OisFf:
            case InstrumentKind::Irs3m:
            case InstrumentKind::Irs6m:
            case InstrumentKind::Cds: out.push_back(detail::ratio_mean(num[i], den[i])); break;
            default: out.push_back(detail::sample_mean(num[i])); break;
        }
    }
    return out;
}

inline McEstimate mc_price(const InstrumentSpec& spec, const ModelParams& p, const StateVector& x,
                           std::size_t n_paths, std::uint64_t seed, const McOptions& o = {}) {
    return mc_price_all({spec}, p, x, n_paths, seed, o).front();
}

/// Survival frequency over [0, T] of the doubly stochastic default time driven by lambda.
inline McEstimate mc_survival(const ModelParams& p, const StateVector& x, double T, std::size_t n_paths,
                              std::uint64_t seed, const McOptions& o = {}) {
    if (n_paths == 0) throw InputError("n_paths must be > 0");
    std::vector<double> alive(n_paths);
    parallel_chunks(n_paths, [&](std::size_t b, std::size_t e) {
        PathEngine engine(p, Measure::Q, o.dt);
        for (std::size_t i = b; i < e; ++i) {
            Rng rng(seed, i);
            PathState s = engine.start(x, 0.0, rng, true);
            engine.advance(s, T, rng);
            alive[i] = s.tracks[0].defaulted() ? 0.0 : 1.0;
        }
    });
    return detail::sample_mean(alive);
}

/// Expected futures values at S = t + horizon under P by simulation of X_S.
struct McExpectedFutures {
    McEstimate sofr3m, eurodollar, sofr1m, fedfunds;
};

inline McExpectedFutures mc_expected_futures_p(const ModelParams& p, const StateVector& x, double horizon,
                                               std::size_t n_paths, std::uint64_t seed, const McOptions& o = {},
                                               const PricingOptions& po = {}) {
    if (n_paths == 0) throw InputError("n_paths must be > 0");
    const auto q = build_affine_coefficients(p);
    const double d3 = kThreeMonthAccrual;
    const auto libor = detail::solve_terminal(q, SelectorVector::libor(), 0.0, Vec8::Zero(), d3, po.ode_step);
    const auto acc = detail::solve_terminal(q, SelectorVector::sofr_accrual(), 0.0, Vec8::Zero(), d3, po.ode_step);
    const Vec8 Bl = detail::zero_jumps(libor.B);
    const auto L1 = gaussian_integral_loadings(p, 0.0, kOneMonthAccrual);

    std::vector<double> ed(n_paths), s3(n_paths), s1(n_paths), ff(n_paths);
    parallel_chunks(n_paths, [&](std::size_t b, std::size_t e) {
        PathEngine engine(p, Measure::P, o.dt);
        for (std::size_t i = b; i < e; ++i) {
            Rng rng(seed, i);
            PathState s = engine.start(x, 0.0, rng);
            engine.advance(s, horizon, rng);
            StateVector xs = s.state();
            xs.lambda = xs.phi = 0.0;
            const Vec8 v = xs.vec();
            ed[i] = std::expm1(libor.A + Bl.dot(v)) / d3;
            s3[i] = std::expm1(acc.A + acc.B.dot(v)) / d3;
            const auto I = L1.evaluate(xs);
            s1[i] = I.I_r / kOneMonthAccrual;
            ff[i] = (I.I_r + I.I_zeta) / kOneMonthAccrual;
        }
    });
    return {detail::sample_mean(s3), detail::sample_mean(ed), detail::sample_mean(s1), detail::sample_mean(ff)};
}

}  // namespace affine_curves
