#include "dce/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dce/errors.hpp"
#include "dce/util.hpp"

namespace dce {

void PriorHyperparams::validate() const
{
    if (!(a_sigma > 0.0) || !(b_sigma > 0.0) || !(a_delta > 0.0) || !(b_delta > 0.0))
        throw std::invalid_argument("PriorHyperparams: all hyperparameters must be positive");
}

PSplineModel make_model(const CtcRecord& record, const AifParams& aif, int p, int degree,
                        PriorHyperparams prior)
{
    prior.validate();
    aif.validate();
    if (!record.grid)
        throw std::invalid_argument("make_model: record has no grid");
    if (record.values.size() != record.grid->tau.size())
        throw std::invalid_argument("make_model: value count does not match observation grid");

    PSplineModel m;
    m.y = record.values;
    m.grid = record.grid;
    m.basis = make_basis(m.grid->t[0], m.grid->t[m.grid->n_resp() - 1], p, degree);
    m.aif_on_grid = aif_samples(aif, m.grid->t);
    m.basis_design = design_matrix(m.basis, m.grid->t);
    m.design = build_convolution_operator(m.aif_on_grid, m.grid).matrix() * m.basis_design;
    m.dtd = m.design.transpose() * m.design;
    m.dtd_bandwidth = structural_bandwidth(m.dtd);
    m.prior = prior;
    return m;
}

PSplineModel make_model_from_design(Eigen::MatrixXd design, Eigen::VectorXd y, PriorHyperparams prior)
{
    prior.validate();
    if (design.rows() != y.size())
        throw std::invalid_argument("make_model_from_design: dimension mismatch");
    PSplineModel m;
    m.y = std::move(y);
    m.design = std::move(design);
    m.dtd = m.design.transpose() * m.design;
    m.dtd_bandwidth = structural_bandwidth(m.dtd);
    m.basis.p = static_cast<int>(m.design.cols());
    m.prior = prior;
    return m;
}

PriorPrecision PriorPrecision::from_delta2(const Eigen::VectorXd& delta2)
{
    const int p = static_cast<int>(delta2.size()) + 2;
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p, p);
    // R = sum_t (1/delta2_t) c_t c_t^T with c_t = (..., 1, -2, 1, ...)
    static const double c[3] = { 1.0, -2.0, 1.0 };
    for (int t = 0; t < delta2.size(); ++t) {
        if (!(delta2[t] > 0.0))
            throw std::invalid_argument("PriorPrecision: local variances must be positive");
        const double w = 1.0 / delta2[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                r(t + a, t + b) += w * c[a] * c[b];
    }
    PriorPrecision out;
    out.matrix = std::move(r);
    out.bandwidth = 2;
    return out;
}

PriorPrecision PriorPrecision::from_matrix(Eigen::MatrixXd m)
{
    if (m.rows() != m.cols())
        throw std::invalid_argument("PriorPrecision: matrix must be square");
    PriorPrecision out;
    out.bandwidth = structural_bandwidth(m);
    out.matrix = std::move(m);
    return out;
}

Eigen::VectorXd BetaConditional::sample(RandomSource& rng) const
{
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z[i] = rng.normal();
    // cov(L^-T z) = (L L^T)^-1 = Q^-1
    return mean + band_solve_upper(chol, std::move(z));
}

BetaConditional beta_full_conditional(const PSplineModel& model, const PriorPrecision& prior_precision,
                                      double sigma2)
{
    if (!(sigma2 > 0.0))
        throw std::invalid_argument("beta_full_conditional: sigma2 must be positive");
    const int p = static_cast<int>(model.dtd.rows());
    if (prior_precision.matrix.rows() != p)
        throw std::invalid_argument("beta_full_conditional: prior precision dimension mismatch");

    Eigen::MatrixXd q = model.dtd / sigma2 + prior_precision.matrix;
    const int bw = std::max(model.dtd_bandwidth, prior_precision.bandwidth);

    BandMatrix chol = BandMatrix::from_dense(q, bw);
    if (!band_cholesky_in_place(chol)) {
        // one ridge-jitter retry before giving up
        q.diagonal().array() += 1e-10;
        chol = BandMatrix::from_dense(q, bw);
        if (!band_cholesky_in_place(chol)) {
            std::ostringstream msg;
            msg << "beta_full_conditional: posterior precision not positive definite after jitter"
                << " (p=" << p << ", bw=" << bw << ", sigma2=" << sigma2 << ")";
            throw NumericalError(msg.str());
        }
    }

    BetaConditional cond;
    cond.chol = std::move(chol);
    cond.mean = band_solve(cond.chol, model.design.transpose() * model.y / sigma2);
    return cond;
}

Eigen::VectorXd sample_beta(const SamplerState& state, const PSplineModel& model, RandomSource& rng)
{
    return beta_full_conditional(model, PriorPrecision::from_delta2(state.delta2), state.sigma2)
        .sample(rng);
}

Eigen::VectorXd sample_delta2(const Eigen::VectorXd& beta, const PriorHyperparams& prior,
                              RandomSource& rng)
{
    const int p = static_cast<int>(beta.size());
    if (p < 3)
        throw std::invalid_argument("sample_delta2: need at least three coefficients");
    Eigen::VectorXd delta2(p - 2);
    const double shape = prior.a_delta + 0.5;
    for (int t = 2; t < p; ++t) {
        const double d = beta[t] - 2.0 * beta[t - 1] + beta[t - 2];
        delta2[t - 2] = rng.inverse_gamma(shape, prior.b_delta + 0.5 * d * d);
    }
    return delta2;
}

double sample_sigma2(const Eigen::VectorXd& beta, const PSplineModel& model, RandomSource& rng)
{
    const Eigen::VectorXd resid = model.y - model.design * beta;
    const double shape = model.prior.a_sigma + 0.5 * model.n_obs();
    return rng.inverse_gamma(shape, model.prior.b_sigma + 0.5 * resid.squaredNorm());
}

PSplineChain run_chain(const PSplineModel& model, const ChainConfig& config)
{
    if (config.iterations <= config.burn_in || config.burn_in < 0)
        throw std::invalid_argument("run_chain: need iterations > burn_in >= 0");
    if (config.thinning < 1)
        throw std::invalid_argument("run_chain: thinning must be >= 1");
    const int p = model.n_coef();
    if (p < 3)
        throw std::invalid_argument("run_chain: need at least three basis functions");

    RandomSource rng(config.seed);
    SamplerState state;
    state.beta = Eigen::VectorXd::Zero(p);
    state.delta2 = Eigen::VectorXd::Ones(p - 2);
    state.sigma2 = 1.0;

    PSplineChain chain;
    chain.config = config;
    chain.draws.reserve((config.iterations - config.burn_in) / config.thinning);

    for (int it = 1; it <= config.iterations; ++it) {
        try {
            state.beta = sample_beta(state, model, rng);
        } catch (const NumericalError& e) {
            std::ostringstream msg;
            msg << e.what() << " at iteration " << it;
            throw NumericalError(msg.str());
        }
        state.delta2 = sample_delta2(state.beta, model.prior, rng);
        state.sigma2 = sample_sigma2(state.beta, model, rng);
        if (it > config.burn_in && (it - config.burn_in) % config.thinning == 0)
            chain.draws.push_back(state);
    }
    return chain;
}

namespace {

void band_rows(const std::vector<Eigen::VectorXd>& curves, double level, Eigen::VectorXd& lower,
               Eigen::VectorXd& med, Eigen::VectorXd& upper)
{
    const Eigen::Index len = curves.front().size();
    lower.resize(len);
    med.resize(len);
    upper.resize(len);
    std::vector<double> column(curves.size());
    const double q_lo = 0.5 * (1.0 - level);
    for (Eigen::Index i = 0; i < len; ++i) {
        for (std::size_t d = 0; d < curves.size(); ++d)
            column[d] = curves[d][i];
        std::sort(column.begin(), column.end());
        lower[i] = quantile_sorted(column, q_lo);
        med[i] = quantile_sorted(column, 0.5);
        upper[i] = quantile_sorted(column, 1.0 - q_lo);
    }
}

} // namespace

PosteriorBand posterior_band(const PSplineChain& chain, const PSplineModel& model, double level)
{
    if (chain.draws.empty())
        throw std::invalid_argument("posterior_band: empty chain");
    if (!(level > 0.0) || !(level < 1.0))
        throw std::domain_error("posterior_band: level must lie in (0,1)");

    std::vector<Eigen::VectorXd> fits, resps;
    fits.reserve(chain.draws.size());
    const bool have_resp = model.basis_design.size() > 0;
    if (have_resp)
        resps.reserve(chain.draws.size());
    for (const SamplerState& s : chain.draws) {
        fits.push_back(model.design * s.beta);
        if (have_resp)
            resps.push_back(model.basis_design * s.beta);
    }

    PosteriorBand band;
    band.level = level;
    band_rows(fits, level, band.fit_lower, band.fit_median, band.fit_upper);
    if (have_resp)
        band_rows(resps, level, band.resp_lower, band.resp_median, band.resp_upper);
    return band;
}

} // namespace dce
