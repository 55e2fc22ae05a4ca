#pragma once

#include <algorithm>
#include <random>

#include "affine_curves/model.hpp"

namespace testing_support {

using affine_curves::ModelParams;
using affine_curves::StateVector;

/// Renewal state drawn from ranges typical of filtered states.
inline StateVector random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> rate(0.0, 0.05), spread(-0.002, 0.002), xi(0.05, 1.0), eta(0.0, 0.05),
        nu(0.5, 5.0);
    StateVector x;
    x.r_s = rate(rng);
    x.theta_s = rate(rng);
    x.zeta = spread(rng);
    x.xi = xi(rng);
    x.eta = eta(rng);
    x.nu = nu(rng);
    return x;
}

/// Reference parameters with every parameter scaled by an independent factor in [0.5, 1.5].
inline ModelParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> f(0.5, 1.5);
    ModelParams p = ModelParams::reference();
    for (const auto& d : affine_curves::kParamTable) {
        if (!d.estimable) continue;
        p.*d.member *= f(rng);
    }
    p.theta_zeta = 0.001 * (f(rng) - 1.0);
    p.rho = std::clamp(p.rho, -1.0, 1.0);
    return p;
}

inline ModelParams zero_vol(ModelParams p) {
    p.sigma_r = p.sigma_theta = p.sigma_zeta = 0.0;
    p.sigma_xi = p.sigma_eta = p.sigma_nu = 0.0;
    return p;
}

}  // namespace testing_support
