#pragma once

#include <vector>

#include "dce/sampler.hpp"

namespace dce {

enum class OnsetFlag {
    ok,
    degenerate_gradient, // nonpositive gradient; t0 falls back to t*
};

/// Contrast-arrival estimate: t* is the first observation time whose
/// lower credible bound exceeds zero, t0 extrapolates back to zero along
/// the fitted gradient.
struct OnsetEstimate {
    double t_star = 0.0;            // minutes
    double gradient_at_t_star = 0.0; // concentration / minute
    double t0 = 0.0;                // minutes
    double ci_level = 0.99;
    OnsetFlag flag = OnsetFlag::ok;
};

/// Index of the first tau whose lower band edge is strictly positive.
/// Throws NoEnhancementError when no such point exists.
int detect_t_star_index(const PosteriorBand& band, const TimeGrid& grid);

/// Same, returning the observation time itself.
double detect_t_star(const PosteriorBand& band, const TimeGrid& grid);

/// Posterior median of d/dt C_t at t*: per draw, the derivative spline of
/// the response is convolved with the AIF and evaluated at t*, then the
/// median is taken across draws. Throws DegenerateGradientError when the
/// median is not positive.
double gradient_at(const PSplineChain& chain, double t_star, const Eigen::VectorXd& aif_on_grid,
                   const SplineBasis& basis, const std::shared_ptr<const TimeGrid>& grid);

/// Full three-step onset estimate at the given band level. A nonpositive
/// gradient is reported as t0 = t* with the degenerate flag;
/// NoEnhancementError propagates.
OnsetEstimate estimate_onset(const PSplineChain& chain, const PSplineModel& model, double level = 0.99);

/// ROI aggregate: median of the per-voxel onset times (minutes).
double roi_onset(const std::vector<OnsetEstimate>& estimates);

} // namespace dce
