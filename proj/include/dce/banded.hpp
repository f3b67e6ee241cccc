#pragma once

#include <Eigen/Dense>

namespace dce {

/// Symmetric band matrix in lower storage: data(i, d) = M(i, i - d) for
/// d = 0..bw (d <= i). Cholesky, triangular solves and sampling all run
/// in O(n * bw^2), which is the per-iteration cost of the Gibbs sampler.
struct BandMatrix {
    int n = 0;
    int bw = 0;
    Eigen::MatrixXd data; // n x (bw + 1)

    static BandMatrix from_dense(const Eigen::MatrixXd& m, int bandwidth);
    Eigen::MatrixXd to_dense_lower() const;
};

/// Structural lower bandwidth: largest |i - j| with m(i, j) != 0.
int structural_bandwidth(const Eigen::MatrixXd& m);

/// In-place banded Cholesky M = L L^T; returns false if a pivot is not
/// positive. On success `m` holds L in band storage.
bool band_cholesky_in_place(BandMatrix& m);

/// Solves L x = b (forward substitution).
Eigen::VectorXd band_solve_lower(const BandMatrix& L, Eigen::VectorXd b);

/// Solves L^T x = b (back substitution).
Eigen::VectorXd band_solve_upper(const BandMatrix& L, Eigen::VectorXd b);

/// Solves L L^T x = b.
Eigen::VectorXd band_solve(const BandMatrix& L, const Eigen::VectorXd& b);

} // namespace dce
