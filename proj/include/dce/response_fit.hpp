#pragma once

#include <functional>
#include <vector>

#include "dce/sampler.hpp"
#include "dce/signal_core.hpp"

namespace dce {

struct LmConfig {
    int max_iterations = 200;
    double ssr_rel_tol = 1e-8;
    double fd_step = 1e-6; // forward-difference step scale
    double lambda_init = 1e-3;
    double lambda_max = 1e12;
    std::vector<double>* ssr_trace = nullptr; // accepted SSR values, optional
};

struct LmResult {
    Eigen::VectorXd params;
    double ssr = 0.0;
    bool converged = false;
    int iterations = 0;
};

using ModelFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Damped Gauss-Newton least squares: lambda scales up x10 on a rejected
/// step and down x10 on an accepted one, the Jacobian is forward
/// differences with step fd_step * max(|theta|, 1), bounds are enforced
/// by projection, and iteration stops when the relative SSR improvement
/// falls below ssr_rel_tol. Singular normal equations at maximum damping
/// return the best parameters seen with converged = false.
LmResult lm_minimize(const ModelFn& model, const Eigen::VectorXd& data, Eigen::VectorXd init,
                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, LmConfig config = {});

/// Piecewise tissue response: 0 before t0, plateau Fp during the capillary
/// transit [t0, t0+Tc), then Fp*E*exp(-(t-t0-Tc)*E*Fp/ve).
struct ResponseModelParams {
    double Fp = 0.5; // 1/min
    double E = 0.5;  // extraction fraction
    double ve = 0.4; // EES volume fraction
    double Tc = 0.2; // minutes
    double t0 = 0.0; // minutes, held fixed during fits

    double ktrans() const { return E * Fp; }
    double kep() const { return ktrans() / ve; }
    double vp() const { return Tc * ktrans(); }
};

double response_model_eval(const ResponseModelParams& params, double t);

struct ReferenceFit {
    KineticParams params;
    double ssr = 0.0;
    bool converged = false;
};

/// Levenberg-Marquardt fit of the closed-form extended Tofts-Kermode
/// curve, time-shifted by t0, to the raw concentration series.
ReferenceFit fit_reference_model(const CtcRecord& ctc, const AifParams& aif, double t0);

struct ParamSummary {
    double median = 0.0;
    double standard_error = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
};

/// Posterior summaries of the kinetic parameters from per-draw response
/// fits. ssr is the median per-draw fit SSR.
struct KineticEstimate {
    ParamSummary ktrans, kep, vp, ve, Fp, E, Tc;
    double ssr = 0.0;
    int n_failed_draws = 0;
    int n_draws = 0;
};

/// Fits the response model to every stored draw's response function
/// (t0 held fixed) and summarizes the derived parameters by median,
/// standard deviation and 2.5%/97.5% quantiles across successful fits.
/// Throws NumericalError when more than half the draws fail.
KineticEstimate fit_response_draws(const PSplineChain& chain, const PSplineModel& model, double t0,
                                   int workers = 1);

/// Single-curve version used per draw; exposed for testing and custom
/// pipelines.
struct ResponseCurveFit {
    ResponseModelParams params;
    double ssr = 0.0;
    bool converged = false;
};

ResponseCurveFit fit_response_curve(const Eigen::VectorXd& t, const Eigen::VectorXd& f, double t0);

} // namespace dce
