#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cen/linalg.hpp"
#include "cen/rng.hpp"

namespace cen {

enum class SurrogateTarget { ProbabilityMatch, LogitMatch };

struct PerturbationConfig {
    std::size_t samples = 500;          // K_s
    double x_scale = 0.25;              // Gaussian perturbation scale for x
    double c_scale = 0.0;               // 0 disables context perturbation (classic-LIME mode)
    double kernel_width = 1.0;          // sigma in exp(-D^2 / sigma^2)
    double ridge = 1e-6;                // lambda on the slope coefficients
    SurrogateTarget target = SurrogateTarget::ProbabilityMatch;
};

struct PerturbedSample {
    Vector x;
    Vector c;
    double weight;  // kernel weight, normalized to mean 1
};

// x' = x + scale N(0, I) (c' analogously when enabled); weights from the
// euclidean kernel on x, normalized to mean 1.
std::vector<PerturbedSample> perturb(const Vector& x, const Vector& c,
                                     const PerturbationConfig& cfg, Rng& rng);

struct LocalSurrogate {
    Vector weights;   // theta-hat over x features
    double intercept = 0.0;
    double weighted_r2 = 0.0;
    double effective_samples = 0.0;
};

// Black box maps (x, c) to the class-1 probability.
using BlackBox = std::function<double(const Vector&, const Vector&)>;

// Weighted ridge of the black box's (logit of) output on centered x' - x.
LocalSurrogate fit_surrogate(const BlackBox& f, const Vector& x, const Vector& c,
                             const PerturbationConfig& cfg, Rng& rng);

struct ConsistencyRow {
    double level;            // SNR (inf for clean) or feature fraction
    double cen_error;        // CEN test error on corrupted attributes
    double surrogate_error;  // error of the surrogate explanation used as a predictor
    double fidelity_r2;      // surrogate fit R^2 against the context-only baseline
};

}  // namespace cen
