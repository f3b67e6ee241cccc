#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dce/bspline.hpp"
#include "dce/rng.hpp"
#include "oracles.hpp"

using namespace dce;

TEST_CASE("make_basis knot layout")
{
    const SplineBasis b = make_basis(0.0, 8.0, 25, 3);
    CHECK(b.p == 25);
    CHECK(b.knots.size() == 29); // p + degree + 1
    for (int i = 0; i <= 3; ++i) {
        CHECK(b.knots[i] == 0.0);
        CHECK(b.knots[25 + i] == 8.0);
    }
    for (int i = 1; i < b.knots.size(); ++i)
        CHECK(b.knots[i] >= b.knots[i - 1]);
    // interior knots strictly inside and uniform
    for (int i = 4; i < 25; ++i) {
        CHECK(b.knots[i] > 0.0);
        CHECK(b.knots[i] < 8.0);
    }

    // single-interval cubic: no interior knots
    const SplineBasis bern = make_basis(0.0, 1.0, 4, 3);
    CHECK(bern.knots.size() == 8);
    for (int i = 0; i < 4; ++i) {
        CHECK(bern.knots[i] == 0.0);
        CHECK(bern.knots[4 + i] == 1.0);
    }

    CHECK_THROWS_AS(make_basis(0.0, 1.0, 3, 3), std::invalid_argument);
    CHECK_THROWS_AS(make_basis(1.0, 1.0, 5, 3), std::invalid_argument);
}

TEST_CASE("Bernstein midpoint row")
{
    const SplineBasis bern = make_basis(0.0, 1.0, 4, 3);
    Eigen::VectorXd pts(1);
    pts << 0.5;
    const Eigen::MatrixXd row = design_matrix(bern, pts);
    CHECK(row(0, 0) == doctest::Approx(0.125));
    CHECK(row(0, 1) == doctest::Approx(0.375));
    CHECK(row(0, 2) == doctest::Approx(0.375));
    CHECK(row(0, 3) == doctest::Approx(0.125));
}

TEST_CASE("design matrix properties: partition of unity, support, nonnegativity")
{
    RandomSource rng(3);
    for (const auto& [p, degree] : std::vector<std::pair<int, int>>{ { 25, 3 }, { 8, 2 }, { 5, 1 } }) {
        const SplineBasis b = make_basis(0.0, 5.0, p, degree);
        Eigen::VectorXd pts(61);
        pts[0] = 0.0;
        pts[60] = 5.0; // boundaries included
        for (int i = 1; i < 60; ++i)
            pts[i] = 5.0 * rng.uniform();
        const Eigen::MatrixXd B = design_matrix(b, pts);
        for (int r = 0; r < B.rows(); ++r) {
            CHECK(B.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
            int first = -1, last = -1, count = 0;
            for (int c = 0; c < B.cols(); ++c) {
                CHECK(B(r, c) >= 0.0);
                if (B(r, c) != 0.0) {
                    if (first < 0)
                        first = c;
                    last = c;
                    ++count;
                }
            }
            CHECK(count <= degree + 1);
            CHECK(last - first + 1 == count); // consecutive columns
        }
    }
}

TEST_CASE("constant coefficients reproduce the constant")
{
    const SplineBasis b = make_basis(0.0, 2.0, 12, 3);
    Eigen::VectorXd pts(41);
    for (int i = 0; i <= 40; ++i)
        pts[i] = 2.0 * i / 40.0;
    const Eigen::MatrixXd B = design_matrix(b, pts);
    const Eigen::VectorXd fitted = B * Eigen::VectorXd::Constant(12, 3.7);
    for (int i = 0; i < fitted.size(); ++i)
        CHECK(fitted[i] == doctest::Approx(3.7).epsilon(1e-12));
}

TEST_CASE("design matrix agrees with the recursive Cox-de Boor oracle")
{
    RandomSource rng(17);
    const SplineBasis b = make_basis(0.0, 3.0, 11, 3);
    Eigen::VectorXd pts(50);
    for (int i = 0; i < 50; ++i)
        pts[i] = 3.0 * rng.uniform();
    const Eigen::MatrixXd B = design_matrix(b, pts);
    for (int r = 0; r < B.rows(); ++r)
        for (int j = 0; j < b.p; ++j) {
            const double want = oracle::cox_de_boor(b.knots, j, b.degree, pts[r], b.t_max());
            CHECK(std::abs(B(r, j) - want) < 1e-12);
        }
}

TEST_CASE("points outside the span are a domain error")
{
    const SplineBasis b = make_basis(0.0, 1.0, 6, 3);
    Eigen::VectorXd bad(1);
    bad << 1.25;
    CHECK_THROWS_AS(design_matrix(b, bad), std::domain_error);
    bad << -0.25;
    CHECK_THROWS_AS(design_matrix(b, bad), std::domain_error);
}

TEST_CASE("derivative of a constant expansion is zero")
{
    const SplineBasis b = make_basis(0.0, 4.0, 10, 3);
    const SplineDerivative d = derivative_coeffs(Eigen::VectorXd::Constant(10, 2.5), b);
    CHECK(d.gamma.cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.basis.degree == 2);
    CHECK(d.basis.p == 9);
}

namespace {

/// Least-squares spline coefficients for samples of a target function.
Eigen::VectorXd fit_spline(const SplineBasis& b, const std::function<double(double)>& f)
{
    Eigen::VectorXd pts(200);
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) {
        pts[i] = b.t_min() + (b.t_max() - b.t_min()) * i / 199.0;
        y[i] = f(pts[i]);
    }
    const Eigen::MatrixXd B = design_matrix(b, pts);
    return (B.transpose() * B).ldlt().solve(B.transpose() * y);
}

} // namespace

TEST_CASE("derivative of an interpolated line is its slope")
{
    const SplineBasis b = make_basis(0.0, 4.0, 10, 3);
    const Eigen::VectorXd beta = fit_spline(b, [](double x) { return 2.0 * x + 1.0; });
    const SplineDerivative d = derivative_coeffs(beta, b);
    for (double x : { 0.1, 1.0, 2.3, 3.9 })
        CHECK(eval_spline(d.basis, d.gamma, x) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("derivative expansion matches central finite differences")
{
    RandomSource rng(29);
    const SplineBasis b = make_basis(0.0, 2.0, 14, 3);
    Eigen::VectorXd beta(14);
    for (int i = 0; i < 14; ++i)
        beta[i] = rng.normal();
    const SplineDerivative d = derivative_coeffs(beta, b);

    const double h = 1e-5;
    for (int i = 1; i < 40; ++i) {
        const double x = 2.0 * i / 40.0;
        const double fd = (eval_spline(b, beta, x + h) - eval_spline(b, beta, x - h)) / (2.0 * h);
        const double an = eval_spline(d.basis, d.gamma, x);
        if (std::abs(fd) > 1e-8)
            CHECK(std::abs(an - fd) / std::abs(fd) < 1e-3);
        else
            CHECK(std::abs(an - fd) < 1e-6);
    }
}
