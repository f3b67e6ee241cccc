#pragma once

#include <cstdint>
#include <vector>

#include "dce/banded.hpp"
#include "dce/bspline.hpp"
#include "dce/rng.hpp"
#include "dce/signal_core.hpp"

namespace dce {

/// Hyperparameters of the inverse-gamma priors on the noise variance and
/// the local random-walk variances.
struct PriorHyperparams {
    double a_sigma = 1.0;
    double b_sigma = 1e-5;
    double a_delta = 1e-5;
    double b_delta = 1e-5;

    void validate() const;
};

/// Everything fixed during sampling: observations y on the tau grid, the
/// spline basis on the response grid, and the convolved design D = A * B.
struct PSplineModel {
    Eigen::VectorXd y;
    std::shared_ptr<const TimeGrid> grid;
    SplineBasis basis;
    Eigen::VectorXd aif_on_grid;  // Cp sampled on the response grid
    Eigen::MatrixXd basis_design; // B, n_resp x p
    Eigen::MatrixXd design;       // D = A B, n_obs x p
    Eigen::MatrixXd dtd;          // D^T D, cached
    int dtd_bandwidth = 0;        // structural bandwidth of D^T D
    PriorHyperparams prior;

    int n_obs() const { return static_cast<int>(y.size()); }
    int n_coef() const { return basis.p; }
};

/// Assembles the model for one voxel: basis over [0, max(tau)], AIF on
/// the response grid, D = A * B.
PSplineModel make_model(const CtcRecord& record, const AifParams& aif, int p, int degree = 3,
                        PriorHyperparams prior = {});

/// Model from an explicit design matrix (no convolution); used when the
/// regression structure is supplied directly.
PSplineModel make_model_from_design(Eigen::MatrixXd design, Eigen::VectorXd y,
                                    PriorHyperparams prior = {});

/// Current parameter values of the Gibbs sampler.
struct SamplerState {
    Eigen::VectorXd beta;   // p spline coefficients
    Eigen::VectorXd delta2; // p-2 local variances of the RW2 innovations
    double sigma2 = 1.0;    // observation noise variance
};

/// Prior precision R = Delta2^T diag(1/delta2) Delta2 where Delta2 is the
/// second-difference operator; symmetric, rank p-2, bandwidth 2.
struct PriorPrecision {
    Eigen::MatrixXd matrix;
    int bandwidth = 2;

    static PriorPrecision from_delta2(const Eigen::VectorXd& delta2);
    static PriorPrecision from_matrix(Eigen::MatrixXd m);
};

/// Full conditional of beta: N(mean, Q^-1) with Q = D^T D / sigma2 + R
/// and mean = Q^-1 D^T y / sigma2, factored once as a band Cholesky so
/// draws are mean + L^-T z.
struct BetaConditional {
    Eigen::VectorXd mean;
    BandMatrix chol;

    Eigen::VectorXd sample(RandomSource& rng) const;
};

BetaConditional beta_full_conditional(const PSplineModel& model, const PriorPrecision& prior_precision,
                                      double sigma2);

Eigen::VectorXd sample_beta(const SamplerState& state, const PSplineModel& model, RandomSource& rng);

/// delta2_t ~ IG(a_delta + 1/2, b_delta + (second difference)^2 / 2),
/// independently for each of the p-2 interior coefficients.
Eigen::VectorXd sample_delta2(const Eigen::VectorXd& beta, const PriorHyperparams& prior,
                              RandomSource& rng);

/// sigma2 ~ IG(a_sigma + n/2, b_sigma + ||y - D beta||^2 / 2).
double sample_sigma2(const Eigen::VectorXd& beta, const PSplineModel& model, RandomSource& rng);

struct ChainConfig {
    int iterations = 6000;
    int burn_in = 2000;
    int thinning = 2;
    std::uint64_t seed = 0;
};

struct PSplineChain {
    std::vector<SamplerState> draws;
    ChainConfig config;

    int n_draws() const { return static_cast<int>(draws.size()); }
};

/// Gibbs sampler cycling beta -> delta2 -> sigma2. Deterministic given
/// the seed. States after burn-in are stored every `thinning` iterations.
PSplineChain run_chain(const PSplineModel& model, const ChainConfig& config);

/// Pointwise empirical quantile bands across draws, for the fitted curve
/// D beta on the observation grid and the response B beta on the response
/// grid.
struct PosteriorBand {
    double level = 0.95;
    Eigen::VectorXd fit_lower, fit_median, fit_upper;
    Eigen::VectorXd resp_lower, resp_median, resp_upper;
};

PosteriorBand posterior_band(const PSplineChain& chain, const PSplineModel& model, double level);

} // namespace dce
