// affine_curves: batch workflows over the library.
//
//   simulate     synthetic panel, true parameters and true states
//   price        fitted values, residuals and RMSE by group (optional MC check)
//   estimate     quasi-ML fit, filtered states and convergence log
//   decompose    LIBOR-OIS credit/funding decomposition and OLS regression
//   riskpremium  annualized futures premia per date and averages by horizon
//
// Every run writes <out>/manifest.txt listing inputs, options and outputs.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "affine_curves/affine_curves.hpp"

namespace fs = std::filesystem;
using namespace affine_curves;

namespace {

struct RunConfig {
    std::string subcommand;
    std::string panel;
    std::string params;
    std::string states;
    std::string holidays;
    std::string out;
    std::uint64_t seed = 1;
    std::size_t paths = 10000;
    double mc_dt = kOracleDt;
    double ode_step = kDefaultOdeStep;
    double f_tol = 0.01;
    int max_iter = 5000;
    int restarts = 2;
    double initial_step = 0.1;
    double fd_step = 1e-5;
    std::vector<std::string> free_params;
    bool no_stderr = false;
    std::size_t dates = 500;
    std::string start_date = "2018-04-02";
    double mask_repo = 0.0;
    bool no_noise = false;
    bool mc_check = false;
    bool percent = false;
    bool futures_prices = false;
};

std::string fmt(double v, const char* spec = "%.12g") {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

/// Shortest representation that round-trips.
std::string fmt17(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// Output file that fails loudly on any write error.
class OutFile {
public:
    OutFile(const RunConfig& c, const std::string& name, std::vector<std::string>& written)
        : path_((fs::path(c.out) / name).string()), os_(path_, std::ios::binary) {
        if (!os_) throw InputError("cannot write " + path_);
        written.push_back(name);
    }
    std::ofstream& os() { return os_; }
    void close() {
        os_.close();
        if (!os_) throw InputError("write failed: " + path_);
    }

private:
    std::string path_;
    std::ofstream os_;
};

void write_manifest(const RunConfig& c, const std::vector<std::string>& outputs) {
    std::vector<std::string> w;
    OutFile f(c, "manifest.txt", w);
    auto& o = f.os();
    o << "command = " << c.subcommand << '\n';
    o << "panel = " << c.panel << '\n';
    o << "params = " << (c.params.empty() ? "<reference>" : c.params) << '\n';
    o << "states = " << (c.states.empty() ? "<filtered>" : c.states) << '\n';
    o << "holidays = " << (c.holidays.empty() ? "<weekends>" : c.holidays) << '\n';
    o << "seed = " << c.seed << '\n';
    o << "paths = " << c.paths << '\n';
    o << "mc_dt = " << fmt17(c.mc_dt) << '\n';
    o << "ode_step = " << fmt17(c.ode_step) << '\n';
    o << "f_tol = " << fmt17(c.f_tol) << '\n';
    o << "max_iter = " << c.max_iter << '\n';
    o << "restarts = " << c.restarts << '\n';
    o << "initial_step = " << fmt17(c.initial_step) << '\n';
    o << "fd_step = " << fmt17(c.fd_step) << '\n';
    o << "free = ";
    for (std::size_t i = 0; i < c.free_params.size(); ++i) o << (i ? "," : "") << c.free_params[i];
    o << '\n';
    o << "standard_errors = " << (c.no_stderr ? "off" : "on") << '\n';
    o << "dates = " << c.dates << '\n';
    o << "start_date = " << c.start_date << '\n';
    o << "mask_repo = " << fmt17(c.mask_repo) << '\n';
    o << "noise = " << (c.no_noise ? "off" : "on") << '\n';
    o << "mc_check = " << (c.mc_check ? "on" : "off") << '\n';
    o << "quotes_in_percent = " << (c.percent ? "on" : "off") << '\n';
    o << "futures_as_prices = " << (c.futures_prices ? "on" : "off") << '\n';
    for (const auto& name : outputs) o << "output = " << name << '\n';
    f.close();
}

Calendar calendar_of(const RunConfig& c) { return c.holidays.empty() ? Calendar{} : Calendar::load(c.holidays); }

ModelParams params_of(const RunConfig& c) { return c.params.empty() ? ModelParams::reference() : load_params(c.params); }

ObservationPanel panel_of(const RunConfig& c) {
    if (c.panel.empty()) throw InputError("--panel is required");
    return load_panel(c.panel, PanelSchema{c.percent, c.futures_prices}, calendar_of(c));
}

PricingOptions pricing_of(const RunConfig& c) {
    PricingOptions o;
    o.ode_step = c.ode_step;
    return o;
}

/// Reduced states per panel date from --states, or the filtered means.
std::vector<Vec6> states_of(const RunConfig& c, const ModelParams& p, const ObservationPanel& panel) {
    if (c.states.empty()) {
        FilterOptions fo;
        fo.pricing = pricing_of(c);
        return run_filter(p, prepare_panel(panel), fo).filtered_mean;
    }
    std::ifstream in(c.states);
    if (!in) throw InputError("cannot open states file " + c.states);
    std::string line;
    std::getline(in, line);
    std::map<Date, Vec6> by_date;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 7) throw ParseError("expected date and six state coordinates", row, cells.size());
        Vec6 x;
        try {
            for (int k = 0; k < 6; ++k) x[k] = detail::parse_number(cells[k + 1], row, static_cast<std::size_t>(k) + 2);
            by_date[parse_date(cells[0])] = x;
        } catch (const InputError& e) {
            throw ParseError(e.what(), row, 1);
        }
    }
    std::vector<Vec6> out;
    for (const Date d : panel.dates) {
        const auto it = by_date.find(d);
        if (it == by_date.end()) throw InputError("states file has no row for " + format_date(d));
        out.push_back(it->second);
    }
    return out;
}

void check_out_dir(const RunConfig& c) {
    if (c.out.empty()) throw InputError("--out is required");
    fs::create_directories(c.out);
    if (!fs::is_directory(c.out)) throw InputError("output path is not a directory: " + c.out);
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const RunConfig& c) {
    const ModelParams p = params_of(c);
    const Calendar cal = calendar_of(c);
    if (c.dates == 0) throw InputError("--dates must be > 0");
    const auto dates = cal.business_days_from(parse_date(c.start_date), c.dates);
    SyntheticOptions o;
    o.seed = c.seed;
    o.noise = !c.no_noise;
    o.mask_repo6m = c.mask_repo;
    o.pricing = pricing_of(c);
    const auto sp = generate_synthetic_panel(p, dates, o, cal);

    std::vector<std::string> written;
    {
        OutFile f(c, "panel.csv", written);
        write_panel(f.os(), sp.panel);
        f.close();
    }
    {
        OutFile f(c, "params_true.txt", written);
        write_params(f.os(), p);
        f.close();
    }
    {
        OutFile f(c, "states_true.csv", written);
        write_filtered_states(f.os(), sp.panel.dates, sp.states);
        f.close();
    }
    write_manifest(c, written);

    std::size_t quotes = 0, missing = 0;
    for (std::size_t j = 0; j < sp.panel.cols(); ++j) {
        if (sp.panel.columns[j].is_fixing()) continue;
        for (std::size_t i = 0; i < sp.panel.rows(); ++i) ++(is_missing(sp.panel.value(i, j)) ? missing : quotes);
    }
    std::size_t repo6 = 0;
    if (const auto j = sp.panel.find_column({ColumnKind::Repo, 0, 0, 0, 6}))
        for (std::size_t i = 0; i < sp.panel.rows(); ++i) repo6 += is_missing(sp.panel.value(i, *j));
    std::cout << "dates " << sp.panel.rows() << " (" << format_date(sp.panel.dates.front()) << " to "
              << format_date(sp.panel.dates.back()) << ")\n"
              << "columns " << sp.panel.cols() << "\n"
              << "quotes " << quotes << ", missing " << missing << "\n"
              << "REPO:6M missing " << repo6 << "\n";
}

// ---------------------------------------------------------------- price

const char* rmse_group(ColumnKind k) {
    switch (k) {
        case ColumnKind::Sofr1m:
        case ColumnKind::Sofr3m: return "SOFR futures";
        case ColumnKind::FedFunds: return "EFFR futures";
        case ColumnKind::Eurodollar: return "ED futures";
        case ColumnKind::Libor: return "spot LIBOR";
        case ColumnKind::Repo: return "term repo";
        default: return nullptr;
    }
}

/// Instrument of panel column j on row i with the valuation date at t = 0.
std::optional<InstrumentSpec> instrument_of(const ObservationPanel& panel, std::size_t i, std::size_t j) {
    const auto& col = panel.columns[j];
    const Date d = panel.dates[i];
    InstrumentSpec s;
    if (col.is_spot()) {
        s.kind = col.kind == ColumnKind::Libor ? InstrumentKind::SpotLibor : InstrumentKind::TermRepo;
        s.T = col.tenor_years();
        return s;
    }
    const auto terms = resolve_contract(col, d);
    if (!terms) return std::nullopt;
    s.S = year_fraction(d, terms->S);
    s.T = year_fraction(d, terms->T);
    switch (col.kind) {
        case ColumnKind::Eurodollar:
            if (s.S < 0.0) return std::nullopt;
            s.kind = InstrumentKind::EurodollarFut;
            s.T = s.S + kThreeMonthAccrual;
            return s;
        case ColumnKind::Sofr3m: s.kind = InstrumentKind::Sofr3mFut; s.T = s.S + kThreeMonthAccrual; break;
        case ColumnKind::Sofr1m: s.kind = InstrumentKind::Sofr1mFut; break;
        case ColumnKind::FedFunds: s.kind = InstrumentKind::FedFundsFut; break;
        default: return std::nullopt;
    }
    if (s.S < 0.0) {
        auto f = panel.realized_fixings(fixing_kind_for(col.kind), terms->S, d);
        if (!f) return std::nullopt;
        s.realized_fixings = std::move(*f);
    }
    return s;
}

void cmd_price(const RunConfig& c) {
    const ModelParams p = params_of(c);
    const auto panel = panel_of(c);
    const auto states = states_of(c, p, panel);
    const auto pp = prepare_panel(panel);
    const MeasurementModel mm(p, MeasurementModel::horizons_of(pp), pricing_of(c));

    std::vector<std::string> written;
    std::map<std::string, std::pair<double, std::size_t>> sse;
    {
        OutFile f(c, "fit.csv", written);
        auto& o = f.os();
        o << "date,column,observed,fitted,residual_bp\n";
        for (std::size_t i = 0; i < pp.rows(); ++i)
            for (std::size_t k = 0; k < pp.cols(); ++k) {
                if (!pp.is_present(i, k)) continue;
                const std::size_t j = pp.panel_columns[k];
                const auto& cell = pp.cell(i, k);
                const double obs = panel.value(i, j);
                const double fitted = cell.to_rate(mm.evaluate(cell, states[i]));
                const double res = 1e4 * (obs - fitted);
                o << format_date(pp.dates[i]) << ',' << panel.columns[j].to_string() << ',' << fmt17(obs) << ','
                  << fmt17(fitted) << ',' << fmt(res) << '\n';
                auto& g = sse[rmse_group(panel.columns[j].kind)];
                g.first += res * res;
                ++g.second;
            }
        f.close();
    }
    {
        OutFile f(c, "rmse.csv", written);
        auto& o = f.os();
        o << "group,observations,rmse_bp\n";
        for (const char* g : {"SOFR futures", "EFFR futures", "ED futures", "spot LIBOR", "term repo"}) {
            const auto it = sse.find(g);
            const std::size_t n = it == sse.end() ? 0 : it->second.second;
            o << g << ',' << n << ',' << (n ? fmt(std::sqrt(it->second.first / static_cast<double>(n))) : "") << '\n';
        }
        f.close();
    }
    if (c.mc_check) {
        const std::size_t i = panel.rows() - 1;
        const StateVector x = StateVector::from_reduced(states[i]);
        std::vector<InstrumentSpec> specs;
        std::vector<std::size_t> cols;
        for (std::size_t j = 0; j < panel.cols(); ++j) {
            if (panel.columns[j].is_fixing()) continue;
            if (auto s = instrument_of(panel, i, j)) {
                specs.push_back(std::move(*s));
                cols.push_back(j);
            }
        }
        McOptions mo;
        mo.dt = c.mc_dt;
        const auto mc = mc_price_all(specs, p, x, c.paths, c.seed, mo);
        OutFile f(c, "mc_check.csv", written);
        auto& o = f.os();
        o << "date,column,model,mc,mc_stderr,z\n";
        for (std::size_t k = 0; k < specs.size(); ++k) {
            const double model = price(p, x, specs[k], pricing_of(c));
            o << format_date(panel.dates[i]) << ',' << panel.columns[cols[k]].to_string() << ',' << fmt17(model) << ','
              << fmt17(mc[k].estimate) << ',' << fmt17(mc[k].stderr_) << ','
              << fmt((mc[k].estimate - model) / mc[k].stderr_) << '\n';
        }
        f.close();
    }
    write_manifest(c, written);
    for (const auto& [g, v] : sse)
        std::cout << g << ": " << fmt(std::sqrt(v.first / static_cast<double>(v.second)), "%.4f") << " bp over "
                  << v.second << " quotes\n";
}

// ---------------------------------------------------------------- estimate

void cmd_estimate(const RunConfig& c) {
    const ModelParams start = params_of(c);
    const auto panel = panel_of(c);
    FitOptions o;
    o.max_iter = c.max_iter;
    o.f_tol = c.f_tol;
    o.restarts = c.restarts;
    o.initial_step = c.initial_step;
    o.free_params = c.free_params;
    o.standard_errors = !c.no_stderr;
    o.fd_relative_step = c.fd_step;
    o.filter.pricing = pricing_of(c);
    const auto r = fit(panel, start, o);

    std::vector<std::string> written;
    {
        OutFile f(c, "estimate.txt", written);
        write_estimation_result(f.os(), r);
        f.close();
    }
    {
        OutFile f(c, "filtered_states.csv", written);
        write_filtered_states(f.os(), r.dates, r.filtered_states);
        f.close();
    }
    {
        OutFile f(c, "convergence.csv", written);
        f.os() << "iteration,loglik\n";
        for (std::size_t k = 0; k < r.history.size(); ++k) f.os() << k + 1 << ',' << fmt17(r.history[k]) << '\n';
        f.close();
    }
    write_manifest(c, written);
    std::cout << "loglik " << fmt(r.loglik) << (r.converged ? " (converged" : " (not converged") << " after "
              << r.iterations << " iterations, " << r.evaluations << " evaluations)\n";
    for (std::size_t k = 0; k < r.free_params.size(); ++k) {
        const auto* d = find_param(r.free_params[k]);
        std::cout << "  " << r.free_params[k] << " = " << fmt(r.params.*d->member) << "  (" << fmt(r.standard_errors[k])
                  << ")\n";
    }
}

// ---------------------------------------------------------------- decompose

void cmd_decompose(const RunConfig& c) {
    const ModelParams p = params_of(c);
    const auto panel = panel_of(c);
    const auto states = states_of(c, p, panel);
    const PricingOptions po = pricing_of(c);

    std::vector<std::string> written;
    std::map<Tenor, std::pair<std::vector<double>, std::vector<double>>> series;
    {
        OutFile f(c, "decomposition.csv", written);
        auto& o = f.os();
        o << "date,tenor,libor_ois_bp,credit_bp,funding_bp\n";
        for (std::size_t i = 0; i < panel.rows(); ++i) {
            const StateVector x = StateVector::from_reduced(states[i]);
            for (Tenor t : {Tenor::M3, Tenor::M6}) {
                const auto row = decompose_libor_ois(p, x, 0.0, t, po);
                o << format_date(panel.dates[i]) << ',' << to_string(t) << ',' << fmt(1e4 * row.libor_ois_spread)
                  << ',' << fmt(1e4 * row.credit_component) << ',' << fmt(1e4 * row.funding_component) << '\n';
                const int m = t == Tenor::M3 ? 3 : 6;
                const auto jl = panel.find_column({ColumnKind::Libor, 0, 0, 0, m});
                const auto jr = panel.find_column({ColumnKind::Repo, 0, 0, 0, m});
                if (!jl || !jr) continue;
                const double l = panel.value(i, *jl), r = panel.value(i, *jr);
                if (is_missing(l) || is_missing(r)) continue;
                series[t].first.push_back(row.libor_ois_spread);
                series[t].second.push_back(l - r);
            }
        }
        f.close();
    }
    {
        OutFile f(c, "regression.csv", written);
        auto& o = f.os();
        o << "tenor,observations,alpha_bp,alpha_stderr_bp,beta,beta_stderr\n";
        for (Tenor t : {Tenor::M3, Tenor::M6}) {
            const auto& [ois, repo] = series[t];
            o << to_string(t) << ',' << ois.size();
            try {
                const auto r = regression_decomposition(ois, repo);
                o << ',' << fmt(1e4 * r.alpha) << ',' << fmt(1e4 * r.alpha_stderr) << ',' << fmt(r.beta) << ','
                  << fmt(r.beta_stderr) << '\n';
                std::cout << to_string(t) << ": beta " << fmt(r.beta, "%.4f") << " (" << fmt(r.beta_stderr, "%.4f")
                          << ")\n";
            } catch (const InputError& e) {
                o << ",,,,\n";
                std::cout << to_string(t) << ": regression skipped (" << e.what() << ")\n";
            }
        }
        f.close();
    }
    write_manifest(c, written);
}

// ---------------------------------------------------------------- riskpremium

void cmd_riskpremium(const RunConfig& c) {
    const ModelParams p = params_of(c);
    const auto panel = panel_of(c);
    const auto states = states_of(c, p, panel);
    const PricingOptions po = pricing_of(c);
    require_stationary(p);

    std::vector<std::string> written;
    std::array<std::array<double, 5>, kRiskPremiumHorizons.size()> sums{};
    {
        OutFile f(c, "risk_premium.csv", written);
        auto& o = f.os();
        o << "date,horizon_days,sofr3m_bp,eurodollar_bp,sofr1m_bp,fedfunds_bp,ed_minus_sofr3m_bp\n";
        for (std::size_t i = 0; i < panel.rows(); ++i) {
            const StateVector x = StateVector::from_reduced(states[i]);
            for (std::size_t h = 0; h < kRiskPremiumHorizons.size(); ++h) {
                const auto row = risk_premium_row(p, x, 0.0, kRiskPremiumHorizons[h], po);
                const std::array<double, 5> v{row.sofr3m, row.eurodollar, row.sofr1m, row.fedfunds, row.portfolio()};
                o << format_date(panel.dates[i]) << ',' << std::lround(360.0 * kRiskPremiumHorizons[h]);
                for (std::size_t k = 0; k < 5; ++k) {
                    o << ',' << fmt(1e4 * v[k]);
                    sums[h][k] += v[k];
                }
                o << '\n';
            }
        }
        f.close();
    }
    {
        OutFile f(c, "risk_premium_table.csv", written);
        auto& o = f.os();
        o << "contract";
        for (double h : kRiskPremiumHorizons) o << ',' << std::lround(360.0 * h) << "d_bp";
        o << '\n';
        const char* names[5] = {"3M SOFR", "Eurodollar", "1M SOFR", "Federal Funds", "ED - 3M SOFR"};
        for (std::size_t k = 0; k < 5; ++k) {
            o << names[k];
            for (std::size_t h = 0; h < kRiskPremiumHorizons.size(); ++h)
                o << ',' << fmt(1e4 * sums[h][k] / static_cast<double>(panel.rows()));
            o << '\n';
        }
        f.close();
    }
    if (c.mc_check) {
        const std::size_t i = panel.rows() - 1;
        const StateVector x = StateVector::from_reduced(states[i]);
        McOptions mo;
        mo.dt = c.mc_dt;
        OutFile f(c, "risk_premium_mc_check.csv", written);
        auto& o = f.os();
        o << "date,horizon_days,contract,expected_p,mc,mc_stderr,z\n";
        for (double h : kRiskPremiumHorizons) {
            const auto e = expected_futures_at_expiry_p(p, x, h, po);
            const auto m = mc_expected_futures_p(p, x, h, c.paths, c.seed, mo, po);
            const std::array<std::pair<const char*, std::pair<double, McEstimate>>, 4> rows{{
                {"3M SOFR", {e.sofr3m, m.sofr3m}},
                {"Eurodollar", {e.eurodollar, m.eurodollar}},
                {"1M SOFR", {e.sofr1m, m.sofr1m}},
                {"Federal Funds", {e.fedfunds, m.fedfunds}},
            }};
            for (const auto& [name, v] : rows)
                o << format_date(panel.dates[i]) << ',' << std::lround(360.0 * h) << ',' << name << ','
                  << fmt17(v.first) << ',' << fmt17(v.second.estimate) << ',' << fmt17(v.second.stderr_) << ','
                  << fmt((v.second.estimate - v.first) / v.second.stderr_) << '\n';
        }
        f.close();
    }
    write_manifest(c, written);
    std::cout << "ED - 3M SOFR, bp:";
    for (std::size_t h = 0; h < kRiskPremiumHorizons.size(); ++h)
        std::cout << ' ' << fmt(1e4 * sums[h][4] / static_cast<double>(panel.rows()), "%.3f");
    std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Affine SOFR/EFFR/LIBOR/repo term structure workflows"};
    app.require_subcommand(1);
    RunConfig c;

    auto common = [&](CLI::App* s, bool needs_panel) {
        s->add_option("--out", c.out, "Output directory")->required();
        s->add_option("--params", c.params, "Parameter file (default: reference parameters)")->check(CLI::ExistingFile);
        s->add_option("--holidays", c.holidays, "Holiday list, one YYYY-MM-DD per line")->check(CLI::ExistingFile);
        s->add_option("--seed", c.seed, "Random seed")->capture_default_str();
        s->add_option("--ode-step", c.ode_step, "Riccati RK4 step in years")->capture_default_str();
        if (needs_panel) {
            s->add_option("--panel", c.panel, "Observation panel CSV")->required()->check(CLI::ExistingFile);
            s->add_flag("--quotes-in-percent", c.percent, "Panel values are in percent");
            s->add_flag("--futures-as-prices", c.futures_prices, "Futures quoted as 100 - rate(%)");
        }
    };
    auto states_opt = [&](CLI::App* s) {
        s->add_option("--states", c.states, "Reduced states per date (default: filtered means)")
            ->check(CLI::ExistingFile);
    };
    auto mc_opts = [&](CLI::App* s) {
        s->add_flag("--mc-check", c.mc_check, "Compare against Monte Carlo on the last panel date");
        s->add_option("--paths", c.paths, "Monte Carlo paths")->capture_default_str();
        s->add_option("--mc-dt", c.mc_dt, "Monte Carlo time step in years")->capture_default_str();
    };

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic panel");
    common(sim, false);
    sim->add_option("--dates", c.dates, "Number of business dates")->capture_default_str();
    sim->add_option("--start-date", c.start_date, "First panel date")->capture_default_str();
    sim->add_option("--mask-repo", c.mask_repo, "Probability of a missing REPO:6M quote")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sim->add_flag("--no-noise", c.no_noise, "Omit measurement noise");

    auto* pr = app.add_subcommand("price", "Fitted values, residuals and RMSE by group");
    common(pr, true);
    states_opt(pr);
    mc_opts(pr);

    auto* est = app.add_subcommand("estimate", "Quasi-maximum-likelihood fit");
    common(est, true);
    est->add_option("--f-tol", c.f_tol, "Absolute log-likelihood tolerance")->capture_default_str();
    est->add_option("--max-iter", c.max_iter, "Nelder-Mead iteration cap")->capture_default_str();
    est->add_option("--restarts", c.restarts, "Nelder-Mead restarts")->capture_default_str();
    est->add_option("--initial-step", c.initial_step, "Initial simplex step (transformed space)")
        ->capture_default_str();
    est->add_option("--fd-step", c.fd_step, "Relative finite-difference step for standard errors")
        ->capture_default_str();
    est->add_option("--free", c.free_params, "Free parameters (default: all estimable)")->delimiter(',');
    est->add_flag("--no-stderr", c.no_stderr, "Skip standard errors");

    auto* dec = app.add_subcommand("decompose", "LIBOR-OIS decomposition and OLS regression");
    common(dec, true);
    states_opt(dec);

    auto* rp = app.add_subcommand("riskpremium", "Futures risk premia by horizon");
    common(rp, true);
    states_opt(rp);
    mc_opts(rp);

    CLI11_PARSE(app, argc, argv);

    try {
        check_out_dir(c);
        if (sim->parsed()) {
            c.subcommand = "simulate";
            cmd_simulate(c);
        } else if (pr->parsed()) {
            c.subcommand = "price";
            cmd_price(c);
        } else if (est->parsed()) {
            c.subcommand = "estimate";
            cmd_estimate(c);
        } else if (dec->parsed()) {
            c.subcommand = "decompose";
            cmd_decompose(c);
        } else if (rp->parsed()) {
            c.subcommand = "riskpremium";
            cmd_riskpremium(c);
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
