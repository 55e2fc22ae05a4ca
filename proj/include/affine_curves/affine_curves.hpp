#pragma once

#include "affine_curves/analytics.hpp"
#include "affine_curves/calendar.hpp"
#include "affine_curves/error.hpp"
#include "affine_curves/estimation.hpp"
#include "affine_curves/kalman.hpp"
#include "affine_curves/linear_gaussian.hpp"
#include "affine_curves/mc_pricing.hpp"
#include "affine_curves/measurement.hpp"
#include "affine_curves/model.hpp"
#include "affine_curves/nelder_mead.hpp"
#include "affine_curves/panel.hpp"
#include "affine_curves/params_io.hpp"
#include "affine_curves/pricing.hpp"
#include "affine_curves/riccati.hpp"
#include "affine_curves/rng.hpp"
#include "affine_curves/simulation.hpp"
#include "affine_curves/synthetic.hpp"
