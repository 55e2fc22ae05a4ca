#pragma once

// Affine measurement equation y = a + b'X of the reduced state for every panel
// cell. LIBOR, repo, Eurodollar and 3M SOFR quotes enter as yields
// log(1 + tau f)/tau; 1M SOFR and fed funds futures enter as rates.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "affine_curves/calendar.hpp"
#include "affine_curves/model.hpp"
#include "affine_curves/panel.hpp"
#include "affine_curves/pricing.hpp"
#include "affine_curves/riccati.hpp"

namespace affine_curves {

enum class MeasurementGroup { Sofr, Effr, Libor };

enum class CellForm { SpotLibor, SpotRepo, EurodollarFwd, Sofr3mFwd, Sofr3mAccrual, Sofr1m, FedFunds };

/// Parameter-free description of one quote.
struct MeasurementCell {
    CellForm form = CellForm::SpotLibor;
    MeasurementGroup group = MeasurementGroup::Libor;
    double accrual = 0.0;   // tau of the yield transform, or T - S of an averaged contract
    double horizon = 0.0;   // S - t forward, T - t in accrual
    double window_a = 0.0;  // 1M contracts: averaging window [a, b] measured from t
    double window_b = 0.0;
    double realized = 0.0;  // log prod(1 + d R) for 3M SOFR, sum d R for 1M contracts
    bool log_transformed = false;

    /// Observed quote (a rate) mapped to the measurement scale.
    double to_measurement(double rate) const {
        return log_transformed ? yield_from_rate(rate, accrual) : rate;
    }
    double to_rate(double y) const { return log_transformed ? rate_from_yield(y, accrual) : y; }
};

inline MeasurementGroup group_of(ColumnKind k) {
    switch (k) {
        case ColumnKind::Sofr1m:
        case ColumnKind::Sofr3m: return MeasurementGroup::Sofr;
        case ColumnKind::FedFunds: return MeasurementGroup::Effr;
        default: return MeasurementGroup::Libor;
    }
}

/// Cell for column j on row i, or nullopt when the contract is expired or an
/// in-accrual contract lacks fixings. Ignores the quoted value itself.
inline std::optional<MeasurementCell> describe_cell(const ObservationPanel& panel, std::size_t i, std::size_t j) {
    const auto& c = panel.columns[j];
    const Date d = panel.dates[i];
    MeasurementCell cell;
    cell.group = group_of(c.kind);
    if (c.is_fixing()) return std::nullopt;
    if (c.is_spot()) {
        cell.form = c.kind == ColumnKind::Libor ? CellForm::SpotLibor : CellForm::SpotRepo;
        cell.accrual = c.tenor_years();
        cell.horizon = cell.accrual;
        cell.log_transformed = true;
        return cell;
    }
    const auto terms = resolve_contract(c, d);
    if (!terms) return std::nullopt;
    const bool forward = terms->S >= d;
    std::vector<Fixing> fixings;
    if (!forward) {
        auto f = panel.realized_fixings(fixing_kind_for(c.kind), terms->S, d);
        if (!f) return std::nullopt;
        fixings = std::move(*f);
    }
    switch (c.kind) {
        case ColumnKind::Eurodollar:
            if (!forward) return std::nullopt;
            cell.form = CellForm::EurodollarFwd;
            cell.accrual = kThreeMonthAccrual;
            cell.horizon = year_fraction(d, terms->S);
            cell.log_transformed = true;
            return cell;
        case ColumnKind::Sofr3m:
            cell.accrual = kThreeMonthAccrual;
            cell.log_transformed = true;
            if (forward) {
                cell.form = CellForm::Sofr3mFwd;
                cell.horizon = year_fraction(d, terms->S);
            } else {
                cell.form = CellForm::Sofr3mAccrual;
                cell.horizon = year_fraction(d, terms->T);
                cell.realized = log_compounded_factor(fixings);
            }
            return cell;
        case ColumnKind::Sofr1m:
        case ColumnKind::FedFunds:
            cell.form = c.kind == ColumnKind::Sofr1m ? CellForm::Sofr1m : CellForm::FedFunds;
            cell.accrual = year_fraction(terms->S, terms->T);
            cell.window_a = forward ? year_fraction(d, terms->S) : 0.0;
            cell.window_b = year_fraction(d, terms->T);
            cell.realized = weighted_sum(fixings);
            return cell;
        default: return std::nullopt;
    }
}

/// Measurement rows of a panel, one entry per (date, measurement column).
/// Fixing columns are not measurements and are skipped.
struct PreparedPanel {
    std::vector<Date> dates;
    std::vector<std::size_t> panel_columns;  // measurement column -> panel column
    std::vector<MeasurementCell> cells;      // rows x measurement columns
    std::vector<double> observed;            // measurement-scale values
    std::vector<unsigned char> present;      // 1 if observed and usable

    std::size_t rows() const { return dates.size(); }
    std::size_t cols() const { return panel_columns.size(); }
    const MeasurementCell& cell(std::size_t i, std::size_t k) const { return cells[i * cols() + k]; }
    double y(std::size_t i, std::size_t k) const { return observed[i * cols() + k]; }
    bool is_present(std::size_t i, std::size_t k) const { return present[i * cols() + k] != 0; }

    std::size_t count_present(std::size_t i) const {
        std::size_t n = 0;
        for (std::size_t k = 0; k < cols(); ++k) n += is_present(i, k);
        return n;
    }

    double max_horizon(CellForm f) const {
        double h = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i)
            if (present[i] && cells[i].form == f) h = std::max(h, cells[i].horizon);
        return h;
    }
};

inline PreparedPanel prepare_panel(const ObservationPanel& panel) {
    PreparedPanel out;
    out.dates = panel.dates;
    for (std::size_t j = 0; j < panel.cols(); ++j)
        if (!panel.columns[j].is_fixing()) out.panel_columns.push_back(j);
    const std::size_t m = out.cols();
    out.cells.resize(panel.rows() * m);
    out.observed.assign(panel.rows() * m, 0.0);
    out.present.assign(panel.rows() * m, 0);
    for (std::size_t i = 0; i < panel.rows(); ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t j = out.panel_columns[k];
            const double v = panel.value(i, j);
            if (is_missing(v)) continue;
            const auto cell = describe_cell(panel, i, j);
            if (!cell) continue;
            const double y = cell->to_measurement(v);
            if (!std::isfinite(y)) continue;
            out.cells[i * m + k] = *cell;
            out.observed[i * m + k] = y;
            out.present[i * m + k] = 1;
        }
    }
    return out;
}

/// Parameter-dependent Riccati cache. Loadings depend on time to maturity only,
/// so each transform is solved once per parameter set and read off by Hermite
/// interpolation.
class MeasurementModel {
public:
    struct Horizons {
        double eurodollar = 0.0;
        double sofr3m_forward = 0.0;
        double sofr3m_accrual = kThreeMonthAccrual;
    };

    static Horizons horizons_of(const PreparedPanel& pp) {
        Horizons h;
        h.eurodollar = pp.max_horizon(CellForm::EurodollarFwd);
        h.sofr3m_forward = pp.max_horizon(CellForm::Sofr3mFwd);
        return h;
    }

    MeasurementModel(const ModelParams& p, const Horizons& h, const PricingOptions& o = {})
        : params_(p), coeffs_(build_affine_coefficients(p)) {
        const double d3 = kThreeMonthAccrual;
        for (int m : {3, 6}) {
            const double tau = m / 12.0;
            libor_[m == 3 ? 0 : 1] =
                detail::solve_terminal(coeffs_, SelectorVector::libor(), 0.0, Vec8::Zero(), tau, o.ode_step);
            repo_[m == 3 ? 0 : 1] =
                detail::solve_terminal(coeffs_, SelectorVector::repo(), 0.0, Vec8::Zero(), tau, o.ode_step);
        }
        const auto ed_inner = detail::solve_terminal(coeffs_, SelectorVector::libor(), 0.0, Vec8::Zero(), d3, o.ode_step);
        ed_inner_ = {ed_inner.A, detail::zero_jumps(ed_inner.B)};
        if (h.eurodollar > 0.0)
            ed_outer_ = solve_riccati(coeffs_, SelectorVector::zero(), ed_inner_.A, ed_inner_.B, h.eurodollar,
                                      o.ode_step);
        const auto s3_inner =
            detail::solve_terminal(coeffs_, SelectorVector::sofr_accrual(), 0.0, Vec8::Zero(), d3, o.ode_step);
        s3_inner_ = s3_inner;
        if (h.sofr3m_forward > 0.0)
            s3_outer_ = solve_riccati(coeffs_, SelectorVector::zero(), s3_inner.A, s3_inner.B, h.sofr3m_forward,
                                      o.ode_step);
        accrual_ = solve_riccati(coeffs_, SelectorVector::sofr_accrual(), 0.0, Vec8::Zero(),
                                 std::max(h.sofr3m_accrual, d3), o.ode_step);
    }

    const ModelParams& params() const { return params_; }

    double sigma(MeasurementGroup g) const {
        switch (g) {
            case MeasurementGroup::Sofr: return params_.meas_sigma_sofr;
            case MeasurementGroup::Effr: return params_.meas_sigma_effr;
            case MeasurementGroup::Libor: return params_.meas_sigma_libor;
        }
        return 0.0;
    }

    /// Intercept and reduced-state loading of one cell.
    std::pair<double, Vec6> row(const MeasurementCell& c) const {
        switch (c.form) {
            case CellForm::SpotLibor:
            case CellForm::SpotRepo: {
                const auto& e = (c.form == CellForm::SpotLibor ? libor_ : repo_)[c.accrual < 0.375 ? 0 : 1];
                return scaled(e.A, e.B, c.accrual);
            }
            case CellForm::EurodollarFwd:
                if (c.horizon == 0.0) return scaled(ed_inner_.A, ed_inner_.B, c.accrual);
                return scaled(ed_outer_.A(c.horizon), ed_outer_.B(c.horizon), c.accrual);
            case CellForm::Sofr3mFwd:
                if (c.horizon == 0.0) return scaled(s3_inner_.A, s3_inner_.B, c.accrual);
                return scaled(s3_outer_.A(c.horizon), s3_outer_.B(c.horizon), c.accrual);
            case CellForm::Sofr3mAccrual: {
                if (c.horizon == 0.0) return scaled(c.realized, Vec8::Zero(), c.accrual);
                return scaled(c.realized + accrual_.A(c.horizon), accrual_.B(c.horizon), c.accrual);
            }
            case CellForm::Sofr1m:
            case CellForm::FedFunds: {
                const auto L = gaussian_integral_loadings(params_, c.window_a, c.window_b);
                Vec6 b = Vec6::Zero();
                double a = c.realized + L.r0;
                b[0] = L.r_r;
                b[1] = L.r_theta;
                if (c.form == CellForm::FedFunds) {
                    a += L.z0;
                    b[2] = L.z_zeta;
                }
                return {a / c.accrual, b / c.accrual};
            }
        }
        return {0.0, Vec6::Zero()};
    }

    /// Model value on the measurement scale.
    double evaluate(const MeasurementCell& c, const Vec6& x) const {
        const auto [a, b] = row(c);
        return a + b.dot(x);
    }

private:
    static std::pair<double, Vec6> scaled(double A, const Vec8& B, double tau) {
        return {A / tau, reduce_vector(B) / tau};
    }

    ModelParams params_;
    AffineCoefficients coeffs_;
    detail::Exponent libor_[2];
    detail::Exponent repo_[2];
    detail::Exponent ed_inner_;
    detail::Exponent s3_inner_;
    RiccatiSolution ed_outer_;
    RiccatiSolution s3_outer_;
    RiccatiSolution accrual_;
};

}  // namespace affine_curves
