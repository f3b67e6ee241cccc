#pragma once

#include <Eigen/Dense>

namespace dce {

/// Clamped B-spline basis of polynomial degree `degree` with p basis
/// functions over [t_min, t_max]. Knot vector has p + degree + 1 entries;
/// the boundary knots are repeated degree + 1 times and the
/// p - degree - 1 interior knots are uniform.
struct SplineBasis {
    int degree = 3;
    int p = 0;
    Eigen::VectorXd knots;

    double t_min() const { return knots[degree]; }
    double t_max() const { return knots[p]; }
};

SplineBasis make_basis(double t_min, double t_max, int p, int degree = 3);

/// Design matrix B (rows = eval points, cols = p basis functions) by the
/// de Boor recursion. Each row has at most degree + 1 consecutive
/// nonzeros and sums to one. Points outside [t_min, t_max] are a domain
/// error; the right boundary itself is included.
Eigen::MatrixXd design_matrix(const SplineBasis& basis, const Eigen::VectorXd& points);

/// Spline value sum_j beta_j B_j(x) at a single point.
double eval_spline(const SplineBasis& basis, const Eigen::VectorXd& beta, double x);

/// Derivative of a spline expansion: coefficients gamma_j of the
/// degree-1 lower basis obtained by dropping the first and last knot.
struct SplineDerivative {
    Eigen::VectorXd gamma; // p - 1 coefficients
    SplineBasis basis;     // degree - 1
};

SplineDerivative derivative_coeffs(const Eigen::VectorXd& beta, const SplineBasis& basis);

} // namespace dce
