#pragma once

// Synthetic observation panels: one P-measure state path on the panel dates,
// model quotes for a rolling contract ladder, Gaussian measurement noise and
// optional missing six-month repo quotes.

#include <cstdint>
#include <optional>
#include <vector>

#include "affine_curves/calendar.hpp"
#include "affine_curves/measurement.hpp"
#include "affine_curves/model.hpp"
#include "affine_curves/panel.hpp"
#include "affine_curves/rng.hpp"
#include "affine_curves/simulation.hpp"

namespace affine_curves {

struct SyntheticOptions {
    ContractLadder ladder;
    std::uint64_t seed = 1;
    bool noise = true;
    double mask_repo6m = 0.0;  // probability that a REPO:6M quote is missing
    double dt = kPanelDt;      // state time between consecutive panel dates
    std::optional<StateVector> initial;  // defaults to the stationary P mean
    PricingOptions pricing;
};

struct SyntheticPanel {
    ObservationPanel panel;
    std::vector<Vec6> states;  // true reduced state per date
};

inline std::vector<Date> default_panel_dates(std::size_t n, const Calendar& cal = {}) {
    return cal.business_days_from(make_date(2018, 4, 2), n);
}

inline SyntheticPanel generate_synthetic_panel(const ModelParams& p, const std::vector<Date>& dates,
                                               const SyntheticOptions& o = {}, const Calendar& calendar = {}) {
    if (dates.empty()) throw InputError("synthetic panel needs at least one date");
    if (!(o.mask_repo6m >= 0.0 && o.mask_repo6m <= 1.0)) throw InputError("mask ratio must be in [0, 1]");
    require_valid(p);

    SyntheticPanel out;
    ObservationPanel& panel = out.panel;
    panel.dates = dates;
    panel.calendar = calendar;
    panel.columns = o.ladder.columns();
    panel.values.assign(dates.size() * panel.cols(), kMissing);
    for (std::size_t i = 1; i < dates.size(); ++i)
        if (!(dates[i] > dates[i - 1])) throw InputError("synthetic panel dates must be strictly increasing");

    StateVector x0;
    if (o.initial) {
        x0 = *o.initial;
        x0.lambda = x0.phi = 0.0;
    } else {
        const auto pm = to_p_measure(p);
        x0 = StateVector::from_reduced(floor_square_root_factors(pm.theta));
    }

    PathEngine engine(p, Measure::P, o.dt);
    Rng path_rng(o.seed, 0, 0);
    PathState s = engine.start(x0, 0.0, path_rng);
    out.states.reserve(dates.size());
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (i > 0) engine.advance(s, o.dt * static_cast<double>(i), path_rng);
        out.states.push_back(s.state().reduced());
    }

    const auto fix_sofr = panel.find_column({ColumnKind::FixingSofr});
    const auto fix_effr = panel.find_column({ColumnKind::FixingEffr});
    for (std::size_t i = 0; i < dates.size(); ++i) {
        const Vec6& x = out.states[i];
        if (fix_sofr) panel.value(i, *fix_sofr) = x[0];
        if (fix_effr) panel.value(i, *fix_effr) = x[0] + x[2];
    }

    // Cells first, so the Riccati cache covers every horizon that occurs.
    std::vector<std::optional<MeasurementCell>> cells(dates.size() * panel.cols());
    MeasurementModel::Horizons h;
    for (std::size_t i = 0; i < dates.size(); ++i)
        for (std::size_t j = 0; j < panel.cols(); ++j) {
            auto c = describe_cell(panel, i, j);
            if (!c) continue;
            if (c->form == CellForm::EurodollarFwd) h.eurodollar = std::max(h.eurodollar, c->horizon);
            if (c->form == CellForm::Sofr3mFwd) h.sofr3m_forward = std::max(h.sofr3m_forward, c->horizon);
            cells[i * panel.cols() + j] = c;
        }
    const MeasurementModel mm(p, h, o.pricing);

    Rng noise_rng(o.seed, 0, 1);
    Rng mask_rng(o.seed, 0, 2);
    for (std::size_t i = 0; i < dates.size(); ++i) {
        for (std::size_t j = 0; j < panel.cols(); ++j) {
            const auto& c = cells[i * panel.cols() + j];
            if (!c) continue;
            double y = mm.evaluate(*c, out.states[i]);
            const double eps = noise_rng.normal();
            if (o.noise) y += mm.sigma(c->group) * eps;
            const auto& col = panel.columns[j];
            const bool repo6m = col.kind == ColumnKind::Repo && col.tenor_months == 6;
            const double u = mask_rng.uniform();
            if (repo6m && u < o.mask_repo6m) continue;
            panel.value(i, j) = c->to_rate(y);
        }
    }
    panel.validate();
    return out;
}

}  // namespace affine_curves
