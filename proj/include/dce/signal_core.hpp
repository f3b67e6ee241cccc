#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

namespace dce {

/// Paired time grids: observation times tau (strictly increasing) and a
/// uniform response grid t with spacing dt that covers [0, max(tau)].
/// All times are minutes.
struct TimeGrid {
    Eigen::VectorXd tau;
    Eigen::VectorXd t;
    double dt = 0.0;

    int n_obs() const { return static_cast<int>(tau.size()); }
    int n_resp() const { return static_cast<int>(t.size()); }

    /// Builds the grid with an explicit response spacing.
    static TimeGrid make(const std::vector<double>& tau_minutes, double dt_minutes);

    /// Response spacing = median observation spacing / refine.
    static TimeGrid make_refined(const std::vector<double>& tau_minutes, int refine);
};

/// Biexponential arterial input function: dose * sum a_i exp(-m_i t).
/// Defaults are the standard population values for Gd-DTPA.
struct AifParams {
    double dose = 0.1; // mmol/kg
    double a1 = 24.0;  // kg/l
    double a2 = 6.2;   // kg/l
    double m1 = 3.00;  // 1/min
    double m2 = 0.016; // 1/min

    void validate() const;
};

/// Plasma concentration of the AIF at time t (minutes, >= 0).
double aif_eval(const AifParams& params, double t);

/// AIF sampled at a vector of time points.
Eigen::VectorXd aif_samples(const AifParams& params, const Eigen::VectorXd& times);

/// Extended Tofts-Kermode parameters.
struct KineticParams {
    double ktrans = 0.0; // 1/min
    double kep = 1.0;    // 1/min
    double vp = 0.0;     // fraction
};

/// Closed-form tissue concentration of the extended Tofts-Kermode model:
/// vp*Cp(t) + dose*ktrans*sum a_i (exp(-m_i t) - exp(-kep t))/(kep - m_i).
/// Near kep == m_i the removable singularity is replaced by its limit
/// t*exp(-m_i t).
double extended_tofts_eval(const KineticParams& kp, const AifParams& aif, double t);

/// One voxel's observed concentration time series.
struct CtcRecord {
    std::string voxel_id;
    std::shared_ptr<const TimeGrid> grid;
    Eigen::VectorXd values; // mmol/l, one per tau
};

/// Discrete convolution operator A (n_obs x n_resp): (A f)_i approximates
/// the integral of Cp(tau_i - s) f(s) ds over [0, tau_i] by the rectangle
/// rule with width dt. Entries with t_j > tau_i are exactly zero.
class ConvolutionOperator {
public:
    ConvolutionOperator(Eigen::MatrixXd entries, std::shared_ptr<const TimeGrid> grid)
        : entries_(std::move(entries)), grid_(std::move(grid))
    {
    }

    const Eigen::MatrixXd& matrix() const { return entries_; }
    const TimeGrid& grid() const { return *grid_; }

    /// A * f with a dimension check against the response grid.
    Eigen::VectorXd apply(const Eigen::VectorXd& f) const;

private:
    Eigen::MatrixXd entries_;
    std::shared_ptr<const TimeGrid> grid_;
};

/// Builds A from the AIF sampled on the response grid. Values of
/// Cp(tau_i - t_j) between grid points are linearly interpolated, which is
/// exact whenever the observation times lie on the response grid.
ConvolutionOperator build_convolution_operator(const Eigen::VectorXd& aif_on_grid,
                                               const std::shared_ptr<const TimeGrid>& grid);

} // namespace dce
