#pragma once

// Nelder-Mead simplex minimizer with dimension-adaptive coefficients
// (Gao and Han) and restarts from the best vertex.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "affine_curves/error.hpp"

namespace affine_curves {

struct NelderMeadOptions {
    std::size_t max_iter = 5000;
    double f_tol = 0.01;        // stop when f_max - f_min over the simplex is below this
    double initial_step = 0.1;  // simplex edge in each coordinate
    int restarts = 2;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    int restarts_used = 0;
    bool converged = false;
    std::vector<double> history;  // best value after each iteration
};

template <typename F>
NelderMeadResult nelder_mead(F&& f, const Eigen::VectorXd& x0, const NelderMeadOptions& o = {}) {
    const auto n = x0.size();
    if (n == 0) throw InputError("nelder-mead needs at least one free coordinate");
    const double dn = static_cast<double>(n);
    const double alpha = 1.0;
    const double gamma = 1.0 + 2.0 / dn;
    const double rho = 0.75 - 1.0 / (2.0 * dn);
    const double sigma = 1.0 - 1.0 / dn;

    NelderMeadResult res;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n) + 1);
    std::vector<double> fv(static_cast<std::size_t>(n) + 1);
    std::vector<std::size_t> order(static_cast<std::size_t>(n) + 1);

    auto build = [&](const Eigen::VectorXd& center, double center_f) {
        simplex[0] = center;
        fv[0] = center_f;
        for (Eigen::Index k = 0; k < n; ++k) {
            Eigen::VectorXd v = center;
            v[k] += o.initial_step;
            simplex[static_cast<std::size_t>(k) + 1] = v;
            fv[static_cast<std::size_t>(k) + 1] = eval(v);
        }
    };

    build(x0, eval(x0));
    if (!std::isfinite(fv[0])) throw InputError("nelder-mead start is infeasible");

    double previous_best = std::numeric_limits<double>::infinity();
    for (int round = 0;; ++round) {
        bool converged = false;
        while (res.iterations < o.max_iter) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
            if (fv[worst] - fv[best] <= o.f_tol) {
                converged = true;
                break;
            }
            ++res.iterations;
            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
            for (std::size_t k = 0; k < simplex.size(); ++k)
                if (k != worst) centroid += simplex[k];
            centroid /= dn;

            const Eigen::VectorXd xr = centroid + alpha * (centroid - simplex[worst]);
            const double fr = eval(xr);
            if (fr < fv[best]) {
                const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[worst] = xe;
                    fv[worst] = fe;
                } else {
                    simplex[worst] = xr;
                    fv[worst] = fr;
                }
            } else if (fr < fv[second]) {
                simplex[worst] = xr;
                fv[worst] = fr;
            } else {
                bool shrink = false;
                if (fr < fv[worst]) {
                    const Eigen::VectorXd xc = centroid + rho * (xr - centroid);
                    const double fc = eval(xc);
                    if (fc <= fr) {
                        simplex[worst] = xc;
                        fv[worst] = fc;
                    } else {
                        shrink = true;
                    }
                } else {
                    const Eigen::VectorXd xc = centroid - rho * (centroid - simplex[worst]);
                    const double fc = eval(xc);
                    if (fc < fv[worst]) {
                        simplex[worst] = xc;
                        fv[worst] = fc;
                    } else {
                        shrink = true;
                    }
                }
                if (shrink) {
                    for (std::size_t k = 0; k < simplex.size(); ++k) {
                        if (k == best) continue;
                        simplex[k] = simplex[best] + sigma * (simplex[k] - simplex[best]);
                        fv[k] = eval(simplex[k]);
                    }
                }
            }
            res.history.push_back(*std::min_element(fv.begin(), fv.end()));
        }
        const auto b = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
        res.x = simplex[b];
        res.f = fv[b];
        res.converged = converged;
        const bool improved = previous_best - res.f > o.f_tol;
        previous_best = std::min(previous_best, res.f);
        if (!converged || round >= o.restarts || (round > 0 && !improved)) break;
        ++res.restarts_used;
        build(res.x, res.f);
    }
    return res;
}

}  // namespace affine_curves
