#include "dce/banded.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dce {

BandMatrix BandMatrix::from_dense(const Eigen::MatrixXd& m, int bandwidth)
{
    if (m.rows() != m.cols())
        throw std::invalid_argument("BandMatrix: matrix must be square");
    BandMatrix b;
    b.n = static_cast<int>(m.rows());
    b.bw = std::min(bandwidth, b.n - 1);
    b.data = Eigen::MatrixXd::Zero(b.n, b.bw + 1);
    for (int i = 0; i < b.n; ++i)
        for (int d = 0; d <= std::min(b.bw, i); ++d)
            b.data(i, d) = m(i, i - d);
    return b;
}

Eigen::MatrixXd BandMatrix::to_dense_lower() const
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d <= std::min(bw, i); ++d)
            m(i, i - d) = data(i, d);
    return m;
}

int structural_bandwidth(const Eigen::MatrixXd& m)
{
    int bw = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (m(i, j) != 0.0)
                bw = std::max(bw, static_cast<int>(i - j));
    return bw;
}

bool band_cholesky_in_place(BandMatrix& m)
{
    const int n = m.n;
    const int bw = m.bw;
    for (int j = 0; j < n; ++j) {
        double diag = m.data(j, 0);
        for (int k = std::max(0, j - bw); k < j; ++k) {
            const double l = m.data(j, j - k);
            diag -= l * l;
        }
        if (!(diag > 0.0) || !std::isfinite(diag))
            return false;
        const double ljj = std::sqrt(diag);
        m.data(j, 0) = ljj;
        for (int i = j + 1; i <= std::min(n - 1, j + bw); ++i) {
            double s = m.data(i, i - j);
            for (int k = std::max(0, i - bw); k < j; ++k)
                s -= m.data(i, i - k) * m.data(j, j - k);
            m.data(i, i - j) = s / ljj;
        }
    }
    return true;
}

Eigen::VectorXd band_solve_lower(const BandMatrix& L, Eigen::VectorXd b)
{
    const int n = L.n;
    const int bw = L.bw;
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = std::max(0, i - bw); k < i; ++k)
            s -= L.data(i, i - k) * b[k];
        b[i] = s / L.data(i, 0);
    }
    return b;
}

Eigen::VectorXd band_solve_upper(const BandMatrix& L, Eigen::VectorXd b)
{
    const int n = L.n;
    const int bw = L.bw;
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k <= std::min(n - 1, i + bw); ++k)
            s -= L.data(k, k - i) * b[k];
        b[i] = s / L.data(i, 0);
    }
    return b;
}

Eigen::VectorXd band_solve(const BandMatrix& L, const Eigen::VectorXd& b)
{
    return band_solve_upper(L, band_solve_lower(L, b));
}

} // namespace dce
