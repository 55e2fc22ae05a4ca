#pragma once

// Quasi-maximum-likelihood fit: Nelder-Mead over transformed parameters and
// outer-product-of-gradients standard errors.

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "affine_curves/error.hpp"
#include "affine_curves/kalman.hpp"
#include "affine_curves/model.hpp"
#include "affine_curves/nelder_mead.hpp"
#include "affine_curves/panel.hpp"
#include "affine_curves/params_io.hpp"

namespace affine_curves {

/// Maps free parameters to an unconstrained space: log for positive and
/// non-negative parameters, atanh for the correlation, scaled identity
/// otherwise.
class ParameterTransform {
public:
    explicit ParameterTransform(std::vector<const ParamDescriptor*> free) : free_(std::move(free)) {}

    static ParameterTransform from_names(const std::vector<std::string>& names) {
        std::vector<const ParamDescriptor*> free;
        if (names.empty()) {
            for (const auto& d : kParamTable)
                if (d.estimable) free.push_back(&d);
        } else {
            for (const auto& n : names) {
                const auto* d = find_param(n);
                if (!d) throw InputError("unknown parameter '" + n + "'");
                if (!d->estimable) throw InputError("parameter '" + n + "' is fixed");
                for (const auto* e : free)
                    if (e == d) throw InputError("parameter '" + n + "' listed twice");
                free.push_back(d);
            }
        }
        return ParameterTransform(std::move(free));
    }

    std::size_t size() const { return free_.size(); }
    const std::vector<const ParamDescriptor*>& free() const { return free_; }

    Eigen::VectorXd to_unconstrained(const ModelParams& p) const {
        Eigen::VectorXd z(static_cast<Eigen::Index>(free_.size()));
        for (std::size_t k = 0; k < free_.size(); ++k) {
            const auto* d = free_[k];
            const double v = p.*d->member;
            double u = 0.0;
            switch (d->constraint) {
                case Constraint::Positive:
                case Constraint::NonNegative:
                    u = std::log(std::max(v, kFloor * d->scale) / d->scale);
                    break;
                case Constraint::Correlation: u = std::atanh(std::clamp(v, -1.0 + 1e-12, 1.0 - 1e-12)); break;
                case Constraint::Unbounded: u = v / d->scale; break;
            }
            z[static_cast<Eigen::Index>(k)] = u;
        }
        return z;
    }

    ModelParams to_params(const Eigen::VectorXd& z, ModelParams base) const {
        for (std::size_t k = 0; k < free_.size(); ++k) {
            const auto* d = free_[k];
            const double u = z[static_cast<Eigen::Index>(k)];
            double v = 0.0;
            switch (d->constraint) {
                case Constraint::Positive:
                case Constraint::NonNegative: v = d->scale * std::exp(u); break;
                case Constraint::Correlation: v = std::tanh(u); break;
                case Constraint::Unbounded: v = d->scale * u; break;
            }
            base.*d->member = v;
        }
        return base;
    }

private:
    static constexpr double kFloor = 1e-8;
    std::vector<const ParamDescriptor*> free_;
};

struct FitOptions {
    std::size_t max_iter = 5000;
    double f_tol = 0.01;
    int restarts = 2;
    double initial_step = 0.1;
    std::vector<std::string> free_params;  // empty: every estimable parameter
    bool standard_errors = true;
    double fd_relative_step = 1e-5;
    FilterOptions filter;
};

struct EstimationResult {
    ModelParams params;
    double loglik = -std::numeric_limits<double>::infinity();
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    int restarts_used = 0;
    std::vector<std::string> free_params;
    std::vector<double> standard_errors;  // per free parameter, NaN if unavailable
    std::vector<double> history;          // best log-likelihood per iteration
    std::vector<Date> dates;
    std::vector<Vec6> filtered_states;

    double stderr_of(std::string_view name) const {
        for (std::size_t k = 0; k < free_params.size(); ++k)
            if (free_params[k] == name) return standard_errors[k];
        return std::numeric_limits<double>::quiet_NaN();
    }
};

/// OPG standard errors of the free parameters: per-date scores by central
/// differences (one-sided at a boundary), J = sum s_i s_i', cov = J^{-1}.
inline std::vector<double> opg_standard_errors(const ModelParams& p, const PreparedPanel& pp,
                                               const ParameterTransform& tr, double rel_step,
                                               const FilterOptions& fo = {}) {
    const auto base = run_filter(p, pp, fo).loglik_terms;
    const std::size_t n = base.size(), k = tr.size();
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    auto terms_at = [&](const ModelParams& q) -> std::optional<std::vector<double>> {
        if (!validate_params(q).ok()) return std::nullopt;
        try {
            return run_filter(q, pp, fo).loglik_terms;
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    for (std::size_t j = 0; j < k; ++j) {
        const auto* d = tr.free()[j];
        const double v = p.*d->member;
        const double h = rel_step * std::max(std::abs(v), d->scale);
        ModelParams up = p, dn = p;
        up.*d->member = v + h;
        dn.*d->member = v - h;
        const auto fu = terms_at(up);
        const auto fd = terms_at(dn);
        for (std::size_t i = 0; i < n; ++i) {
            double s = std::numeric_limits<double>::quiet_NaN();
            if (fu && fd)
                s = ((*fu)[i] - (*fd)[i]) / (2.0 * h);
            else if (fu)
                s = ((*fu)[i] - base[i]) / h;
            else if (fd)
                s = (base[i] - (*fd)[i]) / h;
            scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
        }
    }
    std::vector<double> se(k, std::numeric_limits<double>::quiet_NaN());
    if (!scores.allFinite()) return se;
    const Eigen::MatrixXd J = scores.transpose() * scores;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) return se;
    const Eigen::MatrixXd cov = lu.inverse();
    for (std::size_t j = 0; j < k; ++j) {
        const double v = cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        if (v > 0.0) se[j] = std::sqrt(v);
    }
    return se;
}

/// Maximizes the quasi log-likelihood from `initial`. Throws ValidationError if
/// the start is infeasible.
inline EstimationResult fit(const ObservationPanel& panel, const ModelParams& initial, const FitOptions& o = {}) {
    const PreparedPanel pp = prepare_panel(panel);
    const auto tr = ParameterTransform::from_names(o.free_params);
    const auto start = quasi_loglik(initial, pp, o.filter);
    if (!start.feasible) throw ValidationError("no feasible start: " + start.reason);

    auto objective = [&](const Eigen::VectorXd& z) {
        const auto r = quasi_loglik(tr.to_params(z, initial), pp, o.filter);
        return r.feasible ? -r.value : std::numeric_limits<double>::infinity();
    };
    NelderMeadOptions nm;
    nm.max_iter = o.max_iter;
    nm.f_tol = o.f_tol;
    nm.restarts = o.restarts;
    nm.initial_step = o.initial_step;
    const auto res = nelder_mead(objective, tr.to_unconstrained(initial), nm);

    EstimationResult out;
    out.params = tr.to_params(res.x, initial);
    out.loglik = -res.f;
    out.converged = res.converged;
    out.iterations = res.iterations;
    out.evaluations = res.evaluations;
    out.restarts_used = res.restarts_used;
    for (const auto* d : tr.free()) out.free_params.emplace_back(d->name);
    for (double h : res.history) out.history.push_back(-h);
    const auto filt = run_filter(out.params, pp, o.filter);
    out.dates = pp.dates;
    out.filtered_states = filt.filtered_mean;
    out.standard_errors.assign(tr.size(), std::numeric_limits<double>::quiet_NaN());
    if (o.standard_errors) out.standard_errors = opg_standard_errors(out.params, pp, tr, o.fd_relative_step, o.filter);
    return out;
}

/// Fitted parameters in the key-value format followed by a commented summary.
inline void write_estimation_result(std::ostream& os, const EstimationResult& r) {
    write_params(os, r.params);
    char buf[96];
    std::snprintf(buf, sizeof buf, "# loglik = %.17g\n", r.loglik);
    os << buf;
    os << "# converged = " << (r.converged ? "true" : "false") << '\n';
    os << "# iterations = " << r.iterations << '\n';
    os << "# evaluations = " << r.evaluations << '\n';
    os << "# restarts = " << r.restarts_used << '\n';
    for (std::size_t k = 0; k < r.free_params.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", r.standard_errors[k]);
        os << "# stderr " << r.free_params[k] << " = " << buf << '\n';
    }
}

inline void write_filtered_states(std::ostream& os, const std::vector<Date>& dates, const std::vector<Vec6>& states) {
    os << "date,r_s,theta_s,zeta,xi,eta,nu\n";
    char buf[32];
    for (std::size_t i = 0; i < states.size(); ++i) {
        os << format_date(dates[i]);
        for (int k = 0; k < 6; ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g", states[i][k]);
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace affine_curves
