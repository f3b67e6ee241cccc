#include "dce/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dce {

namespace {

double median_spacing(const std::vector<double>& tau)
{
    std::vector<double> gaps;
    gaps.reserve(tau.size() - 1);
    for (std::size_t i = 1; i < tau.size(); ++i)
        gaps.push_back(tau[i] - tau[i - 1]);
    std::sort(gaps.begin(), gaps.end());
    const std::size_t m = gaps.size();
    return m % 2 == 1 ? gaps[m / 2] : 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]);
}

} // namespace

TimeGrid TimeGrid::make(const std::vector<double>& tau_minutes, double dt_minutes)
{
    if (tau_minutes.empty())
        throw std::invalid_argument("TimeGrid: no observation times");
    if (!(dt_minutes > 0.0))
        throw std::invalid_argument("TimeGrid: dt must be positive");
    if (tau_minutes.front() < 0.0)
        throw std::invalid_argument("TimeGrid: times must be nonnegative");
    for (std::size_t i = 1; i < tau_minutes.size(); ++i) {
        if (!(tau_minutes[i] > tau_minutes[i - 1]))
            throw std::invalid_argument("TimeGrid: observation times must be strictly increasing");
    }
    const double t_max = tau_minutes.back();
    // Smallest uniform grid starting at 0 whose last point reaches t_max.
    const int n_resp = static_cast<int>(std::ceil(t_max / dt_minutes - 1e-12)) + 1;

    TimeGrid g;
    g.tau = Eigen::Map<const Eigen::VectorXd>(tau_minutes.data(),
                                              static_cast<Eigen::Index>(tau_minutes.size()));
    g.t.resize(n_resp);
    for (int j = 0; j < n_resp; ++j)
        g.t[j] = j * dt_minutes;
    g.dt = dt_minutes;
    return g;
}

TimeGrid TimeGrid::make_refined(const std::vector<double>& tau_minutes, int refine)
{
    if (refine < 1)
        throw std::invalid_argument("TimeGrid: refine must be >= 1");
    if (tau_minutes.size() < 2)
        throw std::invalid_argument("TimeGrid: need at least two observation times");
    return make(tau_minutes, median_spacing(tau_minutes) / refine);
}

void AifParams::validate() const
{
    if (!(dose > 0.0) || !(a1 > 0.0) || !(a2 > 0.0) || !(m1 > 0.0) || !(m2 > 0.0))
        throw std::invalid_argument("AifParams: all fields must be positive");
    if (m1 == m2)
        throw std::invalid_argument("AifParams: decay rates must differ");
}

double aif_eval(const AifParams& params, double t)
{
    if (t < 0.0)
        throw std::domain_error("aif_eval: negative time");
    return params.dose * (params.a1 * std::exp(-params.m1 * t) + params.a2 * std::exp(-params.m2 * t));
}

Eigen::VectorXd aif_samples(const AifParams& params, const Eigen::VectorXd& times)
{
    Eigen::VectorXd out(times.size());
    for (Eigen::Index i = 0; i < times.size(); ++i)
        out[i] = aif_eval(params, times[i]);
    return out;
}

double extended_tofts_eval(const KineticParams& kp, const AifParams& aif, double t)
{
    if (t < 0.0)
        throw std::domain_error("extended_tofts_eval: negative time");
    if (!(kp.kep > 0.0))
        throw std::domain_error("extended_tofts_eval: kep must be positive");

    const double amps[2] = { aif.a1, aif.a2 };
    const double rates[2] = { aif.m1, aif.m2 };
    double conv = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double diff = kp.kep - rates[i];
        if (std::abs(diff) < 1e-8) {
            conv += amps[i] * t * std::exp(-rates[i] * t);
        } else {
            conv += amps[i] * (std::exp(-rates[i] * t) - std::exp(-kp.kep * t)) / diff;
        }
    }
    return kp.vp * aif_eval(aif, t) + aif.dose * kp.ktrans * conv;
}

Eigen::VectorXd ConvolutionOperator::apply(const Eigen::VectorXd& f) const
{
    if (f.size() != entries_.cols())
        throw std::invalid_argument("ConvolutionOperator: response vector length mismatch");
    return entries_ * f;
}

ConvolutionOperator build_convolution_operator(const Eigen::VectorXd& aif_on_grid,
                                               const std::shared_ptr<const TimeGrid>& grid)
{
    const TimeGrid& g = *grid;
    if (aif_on_grid.size() != g.t.size())
        throw std::invalid_argument("build_convolution_operator: AIF samples do not match response grid");

    const int n = g.n_obs();
    const int T = g.n_resp();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, T);
    for (int i = 0; i < n; ++i) {
        const double tau_i = g.tau[i];
        int j_last = -1;
        for (int j = 0; j < T; ++j) {
            if (g.t[j] > tau_i + 1e-12)
                break; // causality: later grid points contribute nothing
            j_last = j;
            const double x = tau_i - g.t[j];
            // linear interpolation of Cp on the response grid
            double pos = x / g.dt;
            int k = static_cast<int>(pos);
            double frac = pos - k;
            if (frac < 1e-9)
                frac = 0.0;
            else if (frac > 1.0 - 1e-9) {
                frac = 0.0;
                ++k;
            }
            if (k >= T - 1) {
                k = T - 1;
                frac = 0.0;
            }
            const double cp = frac == 0.0 ? aif_on_grid[k]
                                          : (1.0 - frac) * aif_on_grid[k] + frac * aif_on_grid[k + 1];
            A(i, j) = cp * g.dt;
        }
        // Half weight on the first and last node. The plain rectangle sum
        // counts both endpoints fully and overshoots the integral by a
        // full dt of boundary mass; end-weighting removes that bias while
        // keeping every entry with t_j <= tau_i nonzero.
        if (j_last >= 0) {
            A(i, 0) *= 0.5;
            A(i, j_last) *= 0.5;
        }
    }
    return ConvolutionOperator(std::move(A), grid);
}

} // namespace dce
