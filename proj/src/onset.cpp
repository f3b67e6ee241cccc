#include "dce/onset.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dce/errors.hpp"
#include "dce/util.hpp"

namespace dce {

int detect_t_star_index(const PosteriorBand& band, const TimeGrid& grid)
{
    if (band.fit_lower.size() != grid.tau.size())
        throw std::invalid_argument("detect_t_star: band not on the observation grid");
    for (Eigen::Index i = 0; i < band.fit_lower.size(); ++i) {
        if (band.fit_lower[i] > 0.0)
            return static_cast<int>(i);
    }
    throw NoEnhancementError("lower credible bound never exceeds zero");
}

double detect_t_star(const PosteriorBand& band, const TimeGrid& grid)
{
    return grid.tau[detect_t_star_index(band, grid)];
}

namespace {

int tau_index(const TimeGrid& grid, double t_star)
{
    for (Eigen::Index i = 0; i < grid.tau.size(); ++i)
        if (std::abs(grid.tau[i] - t_star) < 1e-9)
            return static_cast<int>(i);
    throw std::invalid_argument("gradient_at: t_star is not an observation time");
}

/// Median across draws of the convolved derivative at observation index i.
double median_gradient(const PSplineChain& chain, int i_star, const Eigen::VectorXd& aif_on_grid,
                       const SplineBasis& basis, const std::shared_ptr<const TimeGrid>& grid)
{
    // The derivative basis is shared by all draws; only gamma varies.
    const SplineDerivative d0 = derivative_coeffs(chain.draws.front().beta, basis);
    const Eigen::MatrixXd deriv_design = design_matrix(d0.basis, grid->t);
    const Eigen::MatrixXd a = build_convolution_operator(aif_on_grid, grid).matrix();
    // row of (A * Bd) for the single observation time we need
    const Eigen::RowVectorXd conv_row = a.row(i_star) * deriv_design;

    std::vector<double> grads;
    grads.reserve(chain.draws.size());
    for (const SamplerState& s : chain.draws) {
        const SplineDerivative d = derivative_coeffs(s.beta, basis);
        grads.push_back(conv_row.dot(d.gamma));
    }
    return median(std::move(grads));
}

} // namespace

double gradient_at(const PSplineChain& chain, double t_star, const Eigen::VectorXd& aif_on_grid,
                   const SplineBasis& basis, const std::shared_ptr<const TimeGrid>& grid)
{
    if (chain.draws.empty())
        throw std::invalid_argument("gradient_at: empty chain");
    const double g = median_gradient(chain, tau_index(*grid, t_star), aif_on_grid, basis, grid);
    if (!(g > 0.0)) {
        std::ostringstream msg;
        msg << "median gradient " << g << " at t*=" << t_star << " is not positive";
        throw DegenerateGradientError(msg.str());
    }
    return g;
}

OnsetEstimate estimate_onset(const PSplineChain& chain, const PSplineModel& model, double level)
{
    if (chain.draws.empty())
        throw std::invalid_argument("estimate_onset: empty chain");
    const PosteriorBand band = posterior_band(chain, model, level);
    const int i_star = detect_t_star_index(band, *model.grid);

    OnsetEstimate est;
    est.ci_level = level;
    est.t_star = model.grid->tau[i_star];
    est.gradient_at_t_star =
        median_gradient(chain, i_star, model.aif_on_grid, model.basis, model.grid);

    const double ct_star = band.fit_median[i_star];
    if (est.gradient_at_t_star > 0.0) {
        est.t0 = est.t_star - ct_star / est.gradient_at_t_star;
        est.flag = OnsetFlag::ok;
    } else {
        est.t0 = est.t_star;
        est.flag = OnsetFlag::degenerate_gradient;
    }
    return est;
}

double roi_onset(const std::vector<OnsetEstimate>& estimates)
{
    if (estimates.empty())
        throw std::invalid_argument("roi_onset: no usable voxel estimates");
    std::vector<double> t0s;
    t0s.reserve(estimates.size());
    for (const OnsetEstimate& e : estimates)
        t0s.push_back(e.t0);
    return median(std::move(t0s));
}

} // namespace dce
