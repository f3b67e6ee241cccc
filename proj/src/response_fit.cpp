#include "dce/response_fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dce/errors.hpp"
#include "dce/util.hpp"

namespace dce {

namespace {

Eigen::VectorXd clamp(Eigen::VectorXd v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = std::min(hi[i], std::max(lo[i], v[i]));
    return v;
}

} // namespace

LmResult lm_minimize(const ModelFn& model, const Eigen::VectorXd& data, Eigen::VectorXd init,
                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, LmConfig config)
{
    const Eigen::Index np = init.size();
    if (lower.size() != np || upper.size() != np)
        throw std::invalid_argument("lm_minimize: bound dimensions mismatch");
    if (data.size() == 0)
        throw std::invalid_argument("lm_minimize: no data");
    for (Eigen::Index i = 0; i < np; ++i)
        if (init[i] < lower[i] || init[i] > upper[i])
            throw std::invalid_argument("lm_minimize: initial point outside bounds");

    Eigen::VectorXd theta = std::move(init);
    Eigen::VectorXd pred = model(theta);
    if (pred.size() != data.size())
        throw std::invalid_argument("lm_minimize: model output length mismatch");
    double ssr = (pred - data).squaredNorm();

    LmResult best;
    best.params = theta;
    best.ssr = ssr;
    if (config.ssr_trace)
        config.ssr_trace->push_back(ssr);
    if (ssr == 0.0) {
        best.converged = true;
        return best;
    }

    double lambda = config.lambda_init;
    int it = 0;
    bool need_jacobian = true;
    Eigen::MatrixXd jac(data.size(), np);
    Eigen::MatrixXd jtj(np, np);
    Eigen::VectorXd jtr(np);

    while (it < config.max_iterations) {
        if (need_jacobian) {
            for (Eigen::Index j = 0; j < np; ++j) {
                const double h = config.fd_step * std::max(std::abs(theta[j]), 1.0);
                Eigen::VectorXd shifted = theta;
                shifted[j] += h;
                jac.col(j) = (model(shifted) - pred) / h;
            }
            jtj = jac.transpose() * jac;
            jtr = jac.transpose() * (pred - data);
            need_jacobian = false;
        }

        ++it;
        Eigen::MatrixXd damped = jtj;
        const double diag_floor = 1e-12 * std::max(jtj.diagonal().maxCoeff(), 1.0);
        for (Eigen::Index j = 0; j < np; ++j)
            damped(j, j) += lambda * std::max(jtj(j, j), diag_floor);

        const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
        bool usable = step.allFinite();
        double new_ssr = 0.0;
        Eigen::VectorXd new_theta, new_pred;
        if (usable) {
            new_theta = clamp(theta + step, lower, upper);
            new_pred = model(new_theta);
            new_ssr = (new_pred - data).squaredNorm();
            usable = std::isfinite(new_ssr);
        }

        if (usable && new_ssr < ssr) {
            const double improvement = (ssr - new_ssr) / std::max(ssr, 1e-300);
            theta = std::move(new_theta);
            pred = std::move(new_pred);
            ssr = new_ssr;
            if (config.ssr_trace)
                config.ssr_trace->push_back(ssr);
            best.params = theta;
            best.ssr = ssr;
            lambda = std::max(lambda * 0.1, 1e-12);
            need_jacobian = true;
            if (improvement < config.ssr_rel_tol || ssr == 0.0) {
                best.converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > config.lambda_max)
                break; // singular or stuck at max damping
        }
    }

    best.iterations = it;
    if (!best.converged && it >= config.max_iterations) {
        // ran out of iterations while still improving; report the last state
        best.params = theta;
        best.ssr = ssr;
    }
    return best;
}

double response_model_eval(const ResponseModelParams& params, double t)
{
    if (!std::isfinite(t))
        throw std::domain_error("response_model_eval: non-finite time");
    if (t < params.t0)
        return 0.0;
    if (t < params.t0 + params.Tc)
        return params.Fp;
    const double rate = params.E * params.Fp / params.ve;
    return params.Fp * params.E * std::exp(-(t - params.t0 - params.Tc) * rate);
}

ReferenceFit fit_reference_model(const CtcRecord& ctc, const AifParams& aif, double t0)
{
    if (!ctc.grid || ctc.values.size() != ctc.grid->tau.size())
        throw std::invalid_argument("fit_reference_model: invalid record");
    const Eigen::VectorXd& tau = ctc.grid->tau;

    const ModelFn model = [&](const Eigen::VectorXd& theta) {
        const KineticParams kp{ theta[0], theta[1], theta[2] };
        Eigen::VectorXd out(tau.size());
        for (Eigen::Index i = 0; i < tau.size(); ++i) {
            const double t = tau[i] - t0;
            out[i] = t < 0.0 ? 0.0 : extended_tofts_eval(kp, aif, t);
        }
        return out;
    };

    Eigen::VectorXd init(3), lo(3), hi(3);
    init << 0.2, 0.5, 0.05;
    lo << 0.0, 1e-3, 0.0;
    hi << 5.0, 10.0, 1.0;
    const LmResult r = lm_minimize(model, ctc.values, init, lo, hi);

    ReferenceFit fit;
    fit.params = KineticParams{ r.params[0], r.params[1], r.params[2] };
    fit.ssr = r.ssr;
    fit.converged = r.converged;
    return fit;
}

namespace {

/// Moment-style initial values: plateau height from the curve maximum,
/// plateau width from the time spent near the maximum, decay rate from
/// the log-slope of the tail.
ResponseModelParams initial_response_guess(const Eigen::VectorXd& t, const Eigen::VectorXd& f,
                                           double t0, double dt)
{
    ResponseModelParams g;
    g.t0 = t0;

    Eigen::Index i_max = 0;
    double fmax = f.maxCoeff(&i_max);
    if (!(fmax > 0.0))
        fmax = 1e-3;
    g.Fp = std::min(std::max(fmax, 1e-4), 20.0);

    int plateau_pts = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i)
        if (f[i] >= 0.9 * fmax)
            ++plateau_pts;
    g.Tc = std::min(std::max(plateau_pts * dt, dt), 1.0);

    // tail log-slope over points past the maximum that are still positive
    double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
    int m = 0;
    for (Eigen::Index i = i_max; i < f.size(); ++i) {
        if (f[i] < 1e-4 * fmax || f[i] <= 0.0)
            continue;
        const double ly = std::log(f[i]);
        sx += t[i];
        sy += ly;
        sxx += t[i] * t[i];
        sxy += t[i] * ly;
        ++m;
    }
    double rate = 0.5;
    if (m >= 2) {
        const double denom = m * sxx - sx * sx;
        if (denom > 0.0) {
            const double slope = (m * sxy - sx * sy) / denom;
            if (slope < -1e-6)
                rate = -slope;
        }
    }
    g.E = 0.5;
    g.ve = std::min(std::max(g.E * g.Fp / rate, 1e-3), 1.0);
    return g;
}

} // namespace

ResponseCurveFit fit_response_curve(const Eigen::VectorXd& t, const Eigen::VectorXd& f, double t0)
{
    if (t.size() != f.size() || t.size() < 4)
        throw std::invalid_argument("fit_response_curve: bad curve");
    const double dt = t.size() > 1 ? t[1] - t[0] : 1.0;
    const ResponseModelParams guess = initial_response_guess(t, f, t0, dt);

    const ModelFn model = [&](const Eigen::VectorXd& theta) {
        const ResponseModelParams p{ theta[0], theta[1], theta[2], theta[3], t0 };
        Eigen::VectorXd out(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i)
            out[i] = response_model_eval(p, t[i]);
        return out;
    };

    Eigen::VectorXd init(4), lo(4), hi(4);
    init << guess.Fp, guess.E, guess.ve, guess.Tc;
    lo << 1e-6, 1e-6, 1e-6, 0.0;
    hi << 20.0, 1.0, 1.0, 2.0;
    init = init.cwiseMax(lo).cwiseMin(hi);
    const LmResult r = lm_minimize(model, f, init, lo, hi);

    ResponseCurveFit fit;
    fit.params = ResponseModelParams{ r.params[0], r.params[1], r.params[2], r.params[3], t0 };
    fit.ssr = r.ssr;
    fit.converged = r.converged;
    return fit;
}

namespace {

ParamSummary summarize(std::vector<double> values)
{
    ParamSummary s;
    s.standard_error = sample_sd(values);
    std::sort(values.begin(), values.end());
    s.median = quantile_sorted(values, 0.5);
    s.q025 = quantile_sorted(values, 0.025);
    s.q975 = quantile_sorted(values, 0.975);
    return s;
}

} // namespace

KineticEstimate fit_response_draws(const PSplineChain& chain, const PSplineModel& model, double t0,
                                   int workers)
{
    if (chain.draws.empty())
        throw std::invalid_argument("fit_response_draws: empty chain");
    if (model.basis_design.size() == 0 || !model.grid)
        throw std::invalid_argument("fit_response_draws: model has no response grid");

    const std::size_t n = chain.draws.size();
    std::vector<ResponseCurveFit> fits(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const Eigen::VectorXd f = model.basis_design * chain.draws[i].beta;
        fits[i] = fit_response_curve(model.grid->t, f, t0);
    });

    KineticEstimate est;
    est.n_draws = static_cast<int>(n);
    std::vector<double> ktrans, kep, vp, ve, fp, e, tc, ssr;
    for (const ResponseCurveFit& fit : fits) {
        if (!fit.converged) {
            ++est.n_failed_draws;
            continue;
        }
        ktrans.push_back(fit.params.ktrans());
        kep.push_back(fit.params.kep());
        vp.push_back(fit.params.vp());
        ve.push_back(fit.params.ve);
        fp.push_back(fit.params.Fp);
        e.push_back(fit.params.E);
        tc.push_back(fit.params.Tc);
        ssr.push_back(fit.ssr);
    }
    if (2 * est.n_failed_draws > static_cast<int>(n)) {
        std::ostringstream msg;
        msg << "fit_response_draws: " << est.n_failed_draws << " of " << n << " draw fits failed";
        throw NumericalError(msg.str());
    }

    est.ktrans = summarize(std::move(ktrans));
    est.kep = summarize(std::move(kep));
    est.vp = summarize(std::move(vp));
    est.ve = summarize(std::move(ve));
    est.Fp = summarize(std::move(fp));
    est.E = summarize(std::move(e));
    est.Tc = summarize(std::move(tc));
    est.ssr = median(std::move(ssr));
    return est;
}

} // namespace dce
