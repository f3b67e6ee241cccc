#include "dce/bspline.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

namespace dce {

namespace {

/// Index i with knots[i] <= x < knots[i+1], restricted to the valid span
/// range [degree, p-1]; x == t_max maps to the last span.
int find_span(const SplineBasis& basis, double x)
{
    const double lo = basis.t_min();
    const double hi = basis.t_max();
    const double tol = 1e-12 * std::max(1.0, std::abs(hi));
    if (x < lo - tol || x > hi + tol)
        throw std::domain_error("bspline: evaluation point outside basis span");
    if (x >= hi)
        return basis.p - 1;
    int lo_i = basis.degree;
    int hi_i = basis.p - 1;
    while (lo_i < hi_i) {
        const int mid = (lo_i + hi_i + 1) / 2;
        if (basis.knots[mid] <= x)
            lo_i = mid;
        else
            hi_i = mid - 1;
    }
    return lo_i;
}

/// de Boor triangular scheme: the degree+1 basis values
/// B_{span-degree..span}(x), written into vals.
void basis_funs(const SplineBasis& basis, int span, double x, std::vector<double>& vals)
{
    const int k = basis.degree;
    vals.assign(k + 1, 0.0);
    vals[0] = 1.0;
    std::vector<double> left(k + 1, 0.0), right(k + 1, 0.0);
    for (int j = 1; j <= k; ++j) {
        left[j] = x - basis.knots[span + 1 - j];
        right[j] = basis.knots[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = vals[r] / (right[r + 1] + left[j - r]);
            vals[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        vals[j] = saved;
    }
}

} // namespace

SplineBasis make_basis(double t_min, double t_max, int p, int degree)
{
    if (degree < 0)
        throw std::invalid_argument("make_basis: degree must be nonnegative");
    if (p < degree + 1)
        throw std::invalid_argument("make_basis: need at least degree+1 basis functions");
    if (!(t_max > t_min))
        throw std::invalid_argument("make_basis: empty interval");

    SplineBasis b;
    b.degree = degree;
    b.p = p;
    b.knots.resize(p + degree + 1);
    const int n_interior = p - degree - 1;
    const double h = (t_max - t_min) / (n_interior + 1);
    for (int i = 0; i <= degree; ++i) {
        b.knots[i] = t_min;
        b.knots[p + i] = t_max;
    }
    for (int i = 1; i <= n_interior; ++i)
        b.knots[degree + i] = t_min + h * i;
    return b;
}

Eigen::MatrixXd design_matrix(const SplineBasis& basis, const Eigen::VectorXd& points)
{
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(points.size(), basis.p);
    std::vector<double> vals;
    for (Eigen::Index r = 0; r < points.size(); ++r) {
        const int span = find_span(basis, points[r]);
        basis_funs(basis, span, points[r], vals);
        for (int j = 0; j <= basis.degree; ++j)
            B(r, span - basis.degree + j) = vals[j];
    }
    return B;
}

double eval_spline(const SplineBasis& basis, const Eigen::VectorXd& beta, double x)
{
    if (beta.size() != basis.p)
        throw std::invalid_argument("eval_spline: coefficient count mismatch");
    const int span = find_span(basis, x);
    std::vector<double> vals;
    basis_funs(basis, span, x, vals);
    double s = 0.0;
    for (int j = 0; j <= basis.degree; ++j)
        s += vals[j] * beta[span - basis.degree + j];
    return s;
}

SplineDerivative derivative_coeffs(const Eigen::VectorXd& beta, const SplineBasis& basis)
{
    if (basis.degree < 1)
        throw std::invalid_argument("derivative_coeffs: degree must be at least 1");
    if (beta.size() != basis.p)
        throw std::invalid_argument("derivative_coeffs: coefficient count mismatch");

    const int k = basis.degree;
    SplineDerivative d;
    d.gamma.resize(basis.p - 1);
    for (int j = 0; j + 1 < basis.p; ++j) {
        const double span = basis.knots[j + k + 1] - basis.knots[j + 1];
        if (span > 0.0) {
            d.gamma[j] = k * (beta[j + 1] - beta[j]) / span;
        } else {
            std::cerr << "derivative_coeffs: zero-length knot span at " << j
                      << ", coefficient set to 0\n";
            d.gamma[j] = 0.0;
        }
    }
    d.basis.degree = k - 1;
    d.basis.p = basis.p - 1;
    d.basis.knots = basis.knots.segment(1, basis.knots.size() - 2);
    return d;
}

} // namespace dce
