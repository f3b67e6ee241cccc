#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dce/errors.hpp"
#include "dce/sampler.hpp"
#include "dce/simulate.hpp"
#include "dce/util.hpp"
#include "oracles.hpp"

using namespace dce;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, RandomSource& rng)
{
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            m(i, j) = rng.normal();
    return m;
}

} // namespace

TEST_CASE("band Cholesky agrees with dense Cholesky")
{
    RandomSource rng(5);
    for (const int bw : { 0, 1, 2, 5 }) {
        const int n = 12;
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = std::max(0, i - bw); j <= i; ++j) {
                const double v = rng.normal();
                a(i, j) = v;
                a(j, i) = v;
            }
            a(i, i) = std::abs(a(i, i)) + 2.0 * bw + 1.0; // diagonally dominant
        }
        CHECK(structural_bandwidth(a) <= bw);

        BandMatrix band = BandMatrix::from_dense(a, bw);
        REQUIRE(band_cholesky_in_place(band));
        const Eigen::MatrixXd l = band.to_dense_lower();
        CHECK((l * l.transpose() - a).cwiseAbs().maxCoeff() < 1e-10);

        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i)
            b[i] = rng.normal();
        const Eigen::VectorXd x = band_solve(band, b);
        CHECK((a * x - b).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("prior precision from local variances")
{
    RandomSource rng(8);
    const int p = 9;
    Eigen::VectorXd delta2(p - 2);
    for (int i = 0; i < p - 2; ++i)
        delta2[i] = 0.5 + rng.uniform();
    const PriorPrecision r = PriorPrecision::from_delta2(delta2);

    CHECK(r.matrix.rows() == p);
    CHECK((r.matrix - r.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(structural_bandwidth(r.matrix) == 2);

    // rank p-2: constants and the linear ramp span the null space
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
    Eigen::VectorXd ramp(p);
    for (int i = 0; i < p; ++i)
        ramp[i] = i;
    CHECK((r.matrix * ones).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.matrix * ramp).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.matrix);
    int near_zero = 0;
    for (int i = 0; i < p; ++i)
        if (std::abs(es.eigenvalues()[i]) < 1e-10)
            ++near_zero;
    CHECK(near_zero == 2);
}

TEST_CASE("beta full conditional: zero data gives zero mean")
{
    RandomSource rng(21);
    PSplineModel model = make_model_from_design(random_matrix(30, 6, rng), Eigen::VectorXd::Zero(30));
    SamplerState state;
    state.delta2 = Eigen::VectorXd::Ones(4);
    state.sigma2 = 2.3;
    const BetaConditional cond =
        beta_full_conditional(model, PriorPrecision::from_delta2(state.delta2), state.sigma2);
    CHECK(cond.mean.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("beta draws match the conjugate posterior for orthonormal design")
{
    RandomSource rng(23);
    const int n = 40, p = 8;
    const Eigen::MatrixXd d =
        Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(n, p, rng)).householderQ() *
        Eigen::MatrixXd::Identity(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
        y[i] = rng.normal();

    PSplineModel model = make_model_from_design(d, y);
    // with D^T D = I, R = I and sigma2 = 1 the posterior is N(D^T y / 2, I/2)
    const BetaConditional cond =
        beta_full_conditional(model, PriorPrecision::from_matrix(Eigen::MatrixXd::Identity(p, p)), 1.0);
    const Eigen::VectorXd expected = d.transpose() * y / 2.0;
    CHECK((cond.mean - expected).cwiseAbs().maxCoeff() < 1e-12);

    const int n_draws = 100000;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
    for (int k = 0; k < n_draws; ++k)
        acc += cond.sample(rng);
    acc /= n_draws;
    const double se = std::sqrt(0.5 / n_draws);
    for (int j = 0; j < p; ++j)
        CHECK(std::abs(acc[j] - expected[j]) < 3.0 * se);
}

TEST_CASE("beta draws collapse to least squares when the penalty vanishes")
{
    RandomSource rng(31);
    const int n = 60, p = 6;
    const Eigen::MatrixXd d = random_matrix(n, p, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
        y[i] = rng.normal();
    PSplineModel model = make_model_from_design(d, y);

    const Eigen::VectorXd huge = Eigen::VectorXd::Constant(p - 2, 1e12);
    const BetaConditional cond =
        beta_full_conditional(model, PriorPrecision::from_delta2(huge), 1.0);
    const Eigen::VectorXd ols = (d.transpose() * d).ldlt().solve(d.transpose() * y);
    CHECK((cond.mean - ols).cwiseAbs().maxCoeff() < 1e-8);

    const int n_draws = 100000;
    const Eigen::MatrixXd cov = (d.transpose() * d).inverse();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
    for (int k = 0; k < n_draws; ++k)
        acc += cond.sample(rng);
    acc /= n_draws;
    for (int j = 0; j < p; ++j) {
        const double se = std::sqrt(cov(j, j) / n_draws);
        CHECK(std::abs(acc[j] - ols[j]) < 3.0 * se);
    }
}

TEST_CASE("indefinite prior precision raises a numerical error")
{
    RandomSource rng(37);
    PSplineModel model = make_model_from_design(random_matrix(10, 4, rng) * 1e-8,
                                                Eigen::VectorXd::Zero(10));
    const PriorPrecision bad =
        PriorPrecision::from_matrix(-10.0 * Eigen::MatrixXd::Identity(4, 4));
    CHECK_THROWS_AS(beta_full_conditional(model, bad, 1.0), NumericalError);
}

TEST_CASE("delta2 full conditional")
{
    const PriorHyperparams prior;

    SUBCASE("linear beta: rates collapse to b_delta; KS against a direct sampler")
    {
        Eigen::VectorXd beta(6);
        for (int i = 0; i < 6; ++i)
            beta[i] = 3.0 + 2.0 * i; // second differences vanish
        RandomSource rng(41);
        const int n = 10000;
        std::vector<double> ours;
        for (int k = 0; k < n / 4; ++k) {
            const Eigen::VectorXd d2 = sample_delta2(beta, prior, rng);
            for (int j = 0; j < d2.size(); ++j)
                ours.push_back(d2[j]);
        }
        RandomSource rng2(43);
        std::vector<double> direct;
        for (std::size_t k = 0; k < ours.size(); ++k)
            direct.push_back(1.0 / rng2.gamma(prior.a_delta + 0.5, 1.0 / prior.b_delta));
        CHECK(oracle::ks_two_sample_p(ours, direct) > 0.01);
    }

    SUBCASE("fixed second difference: precision mean matches the gamma moment")
    {
        const double d = 0.3;
        Eigen::VectorXd beta(5);
        for (int i = 0; i < 5; ++i)
            beta[i] = 0.5 * d * i * i; // constant second difference d
        RandomSource rng(47);
        const int n = 100000;
        double acc = 0.0;
        for (int k = 0; k < n / 3; ++k) {
            const Eigen::VectorXd d2 = sample_delta2(beta, prior, rng);
            for (int j = 0; j < 3; ++j)
                acc += 1.0 / d2[j];
        }
        const int total = 3 * (n / 3);
        const double shape = prior.a_delta + 0.5;
        const double rate = prior.b_delta + 0.5 * d * d;
        const double want = shape / rate;
        const double se = std::sqrt(shape) / rate / std::sqrt(static_cast<double>(total));
        CHECK(std::abs(acc / total - want) < 3.0 * se);
    }

    SUBCASE("p=3 single variance: KS against reciprocal-gamma")
    {
        Eigen::VectorXd beta(3);
        beta << 0.0, 1.0, 3.0; // second difference = 1
        RandomSource rng(53);
        std::vector<double> ours;
        for (int k = 0; k < 10000; ++k)
            ours.push_back(sample_delta2(beta, prior, rng)[0]);
        RandomSource rng2(59);
        std::vector<double> direct;
        for (int k = 0; k < 10000; ++k)
            direct.push_back(1.0 / rng2.gamma(prior.a_delta + 0.5, 1.0 / (prior.b_delta + 0.5)));
        CHECK(oracle::ks_two_sample_p(ours, direct) > 0.01);
    }
}

TEST_CASE("sigma2 full conditional")
{
    RandomSource setup(61);

    SUBCASE("zero residuals and the IG mean formula")
    {
        const int n = 50, p = 5;
        const Eigen::MatrixXd d = random_matrix(n, p, setup);
        Eigen::VectorXd beta(p);
        for (int j = 0; j < p; ++j)
            beta[j] = setup.normal();
        PSplineModel model = make_model_from_design(d, d * beta); // residuals exactly zero

        RandomSource rng(67);
        const int draws = 100000;
        double acc = 0.0;
        for (int k = 0; k < draws; ++k)
            acc += sample_sigma2(beta, model, rng);
        // IG(1 + n/2, b_sigma): mean = b_sigma / (n/2)
        const double a = 1.0 + 0.5 * n;
        const double b = model.prior.b_sigma;
        const double want = b / (a - 1.0);
        const double se = std::sqrt(b * b / ((a - 1) * (a - 1) * (a - 2)) / draws);
        CHECK(std::abs(acc / draws - want) < 3.0 * se);
    }

    SUBCASE("fixed residual sum of squares")
    {
        const int n = 80;
        PSplineModel model =
            make_model_from_design(Eigen::MatrixXd::Zero(n, 3), Eigen::VectorXd::Ones(n));
        const Eigen::VectorXd beta = Eigen::VectorXd::Zero(3); // S = n
        RandomSource rng(71);
        const int draws = 100000;
        double acc = 0.0;
        for (int k = 0; k < draws; ++k)
            acc += sample_sigma2(beta, model, rng);
        const double a = 1.0 + 0.5 * n;
        const double b = model.prior.b_sigma + 0.5 * n;
        const double want = b / (a - 1.0);
        const double se = std::sqrt(b * b / ((a - 1) * (a - 1) * (a - 2)) / draws);
        CHECK(std::abs(acc / draws - want) < 3.0 * se);
    }

    SUBCASE("n=2, S=2: KS against reciprocal-gamma")
    {
        PSplineModel model =
            make_model_from_design(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Ones(2));
        const Eigen::VectorXd beta = Eigen::VectorXd::Zero(3);
        RandomSource rng(73);
        std::vector<double> ours;
        for (int k = 0; k < 10000; ++k)
            ours.push_back(sample_sigma2(beta, model, rng));
        RandomSource rng2(79);
        std::vector<double> direct;
        for (int k = 0; k < 10000; ++k)
            direct.push_back(1.0 / rng2.gamma(2.0, 1.0 / (model.prior.b_sigma + 1.0)));
        CHECK(oracle::ks_two_sample_p(ours, direct) > 0.01);
    }
}

namespace {

PSplineModel baseline_model(double noise_sd, std::uint64_t seed)
{
    SimExperiment exp;
    exp.noise_sd = noise_sd;
    exp.rate_hz = 0.125;
    const TimeGrid grid = make_sim_grid(exp.rate_hz, 400.0);
    const AifParams aif;
    const CtcRecord rec = simulate_ctc(exp, Generator::tofts, grid, aif, seed, "vox");
    return make_model(rec, aif, 25, 3);
}

} // namespace

TEST_CASE("run_chain bookkeeping and determinism")
{
    const PSplineModel model = baseline_model(0.05, 99);

    ChainConfig cfg;
    cfg.iterations = 100;
    cfg.burn_in = 50;
    cfg.thinning = 5;
    cfg.seed = 7;
    const PSplineChain chain = run_chain(model, cfg);
    CHECK(chain.n_draws() == 10);

    const PSplineChain again = run_chain(model, cfg);
    REQUIRE(again.n_draws() == chain.n_draws());
    for (int k = 0; k < chain.n_draws(); ++k) {
        CHECK(chain.draws[k].beta == again.draws[k].beta);
        CHECK(chain.draws[k].delta2 == again.draws[k].delta2);
        CHECK(chain.draws[k].sigma2 == again.draws[k].sigma2);
    }

    // thinning only selects a subset of the same trajectory
    ChainConfig dense = cfg;
    dense.thinning = 1;
    const PSplineChain full = run_chain(model, dense);
    REQUIRE(full.n_draws() == 50);
    for (int k = 0; k < chain.n_draws(); ++k)
        CHECK(chain.draws[k].beta == full.draws[5 * k + 4].beta);

    CHECK_THROWS_AS(run_chain(model, ChainConfig{ 10, 20, 1, 0 }), std::invalid_argument);
}

TEST_CASE("noiseless data is fitted to a tight residual")
{
    const PSplineModel model = baseline_model(0.0, 5);
    ChainConfig cfg;
    cfg.iterations = 5000;
    cfg.burn_in = 2000;
    cfg.thinning = 2;
    cfg.seed = 11;
    const PSplineChain chain = run_chain(model, cfg);
    const PosteriorBand band = posterior_band(chain, model, 0.95);
    const double ssr = (model.y - band.fit_median).squaredNorm();
    CHECK(ssr < 1e-3);

    // noise variance settles near the (tiny) representation floor
    std::vector<double> sig;
    for (const auto& s : chain.draws)
        sig.push_back(s.sigma2);
    CHECK(median(sig) < 1e-4);
}

TEST_CASE("penalty limit: vanishing local variances force the linear fit")
{
    const PSplineModel model = baseline_model(0.05, 13);
    const int p = model.n_coef();
    const Eigen::VectorXd tiny = Eigen::VectorXd::Constant(p - 2, 1e-12);
    const BetaConditional cond =
        beta_full_conditional(model, PriorPrecision::from_delta2(tiny), 1.0);

    // best fit with beta restricted to a linear sequence u + v*j
    Eigen::MatrixXd basis(p, 2);
    for (int j = 0; j < p; ++j) {
        basis(j, 0) = 1.0;
        basis(j, 1) = j;
    }
    const Eigen::MatrixXd dl = model.design * basis;
    const Eigen::Vector2d uv = (dl.transpose() * dl).ldlt().solve(dl.transpose() * model.y);
    const Eigen::VectorXd restricted = basis * uv;
    CHECK((cond.mean - restricted).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("posterior band quantiles")
{
    RandomSource rng(83);
    const int p = 4;
    PSplineModel model =
        make_model_from_design(Eigen::MatrixXd::Identity(p, p), Eigen::VectorXd::Zero(p));

    SUBCASE("single draw collapses the band")
    {
        PSplineChain chain;
        SamplerState s;
        s.beta = Eigen::VectorXd::LinSpaced(p, 1.0, 4.0);
        chain.draws.push_back(s);
        const PosteriorBand band = posterior_band(chain, model, 0.95);
        CHECK(band.fit_lower == band.fit_median);
        CHECK(band.fit_median == band.fit_upper);
    }

    SUBCASE("level quantiles match a direct sort and the Gaussian oracle")
    {
        PSplineChain chain;
        const int n_draws = 40000;
        std::vector<double> first_coord;
        for (int k = 0; k < n_draws; ++k) {
            SamplerState s;
            s.beta = Eigen::VectorXd(p);
            for (int j = 0; j < p; ++j)
                s.beta[j] = rng.normal();
            first_coord.push_back(s.beta[0]);
            chain.draws.push_back(std::move(s));
        }
        const PosteriorBand band = posterior_band(chain, model, 0.95);
        CHECK(band.fit_lower[0] == doctest::Approx(quantile(first_coord, 0.025)).epsilon(1e-12));
        CHECK(band.fit_upper[0] == doctest::Approx(quantile(first_coord, 0.975)).epsilon(1e-12));
        // standard normal quantiles, up to order-statistic error
        CHECK(band.fit_lower[0] == doctest::Approx(-1.959964).epsilon(0.03));
        CHECK(band.fit_upper[0] == doctest::Approx(1.959964).epsilon(0.03));
        CHECK(std::abs(band.fit_median[0]) < 0.02);
    }

    SUBCASE("level domain errors")
    {
        PSplineChain chain;
        SamplerState s;
        s.beta = Eigen::VectorXd::Zero(p);
        chain.draws.push_back(s);
        CHECK_THROWS_AS(posterior_band(chain, model, 0.0), std::domain_error);
        CHECK_THROWS_AS(posterior_band(chain, model, 1.0), std::domain_error);
        CHECK_THROWS_AS(posterior_band(PSplineChain{}, model, 0.5), std::invalid_argument);
    }
}
