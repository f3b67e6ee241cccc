#include "dce/simulate.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "dce/rng.hpp"

namespace dce {

void SimExperiment::validate() const
{
    if (Fp < 0.0 || vp < 0.0 || PS < 0.0 || ve < 0.0)
        throw std::invalid_argument("SimExperiment: physiological parameters must be nonnegative");
    if (!(rate_hz > 0.0))
        throw std::invalid_argument("SimExperiment: sampling rate must be positive");
    if (noise_sd < 0.0 || lag_s < 0.0)
        throw std::invalid_argument("SimExperiment: noise and lag must be nonnegative");
}

DerivedKinetics derive_kinetics(const SimExperiment& exp)
{
    if (!(exp.Fp > 0.0))
        throw std::domain_error("derive_kinetics: Fp must be positive");
    if (!(exp.ve > 0.0))
        throw std::domain_error("derive_kinetics: ve must be positive");
    DerivedKinetics k;
    k.E = 1.0 - std::exp(-exp.PS / exp.Fp);
    k.ktrans = k.E * exp.Fp;
    k.kep = k.ktrans / exp.ve;
    k.Tc = k.ktrans > 0.0 ? exp.vp / k.ktrans : 0.0;
    return k;
}

std::vector<SimExperiment> experiment_bank()
{
    const SimExperiment baseline{}; // 0.57, 0.06, 0.33, 0.45
    std::vector<SimExperiment> bank(13, baseline);
    const double fp_variants[4] = { 0.17, 0.37, 0.77, 0.97 };
    const double vp_variants[4] = { 1e-4, 0.03, 0.09, 0.12 };
    const double ps_variants[4] = { 0.01, 0.17, 0.49, 0.65 };
    for (int i = 0; i < 4; ++i) {
        bank[1 + i].Fp = fp_variants[i];
        bank[5 + i].vp = vp_variants[i];
        bank[9 + i].PS = ps_variants[i];
    }
    return bank;
}

TimeGrid make_sim_grid(double rate_hz, double duration_s, int refine)
{
    if (!(rate_hz > 0.0) || !(duration_s > 0.0))
        throw std::invalid_argument("make_sim_grid: rate and duration must be positive");
    const double step_min = 1.0 / rate_hz / 60.0;
    const int n = static_cast<int>(std::floor(duration_s * rate_hz + 1e-9)) + 1;
    std::vector<double> tau(n);
    for (int i = 0; i < n; ++i)
        tau[i] = i * step_min;
    return TimeGrid::make(tau, step_min / refine);
}

double aath_ctc_eval(const ResponseModelParams& rm, const AifParams& aif, double t)
{
    const double u = t - rm.t0;
    if (u <= 0.0)
        return 0.0;
    const double amps[2] = { aif.a1, aif.a2 };
    const double rates[2] = { aif.m1, aif.m2 };
    const double plateau_end = std::min(u, rm.Tc);
    const double k = rm.E * rm.Fp / rm.ve;

    double total = 0.0;
    for (int i = 0; i < 2; ++i) {
        // plateau segment: Fp * integral of Cp(u - s) over [0, plateau_end]
        total += rm.Fp * aif.dose * amps[i] *
                 (std::exp(-rates[i] * (u - plateau_end)) - std::exp(-rates[i] * u)) / rates[i];
        // washout segment: Fp*E * integral of Cp(u - s) exp(-k (s - Tc)) over [Tc, u]
        if (u > rm.Tc) {
            const double x = u - rm.Tc;
            const double diff = rates[i] - k;
            const double seg = std::abs(diff) < 1e-8
                                   ? x * std::exp(-rates[i] * x)
                                   : (std::exp(-k * x) - std::exp(-rates[i] * x)) / diff;
            total += rm.Fp * rm.E * aif.dose * amps[i] * seg;
        }
    }
    return total;
}

CtcRecord simulate_ctc(const SimExperiment& exp, Generator generator, const TimeGrid& grid,
                       const AifParams& aif, std::uint64_t seed, const std::string& voxel_id)
{
    exp.validate();
    aif.validate();
    const DerivedKinetics kin = derive_kinetics(exp);
    const double lag_min = exp.lag_s / 60.0;

    CtcRecord rec;
    rec.voxel_id = voxel_id;
    rec.grid = std::make_shared<TimeGrid>(grid);
    rec.values.resize(grid.n_obs());

    RandomSource rng(seed);
    for (int i = 0; i < grid.n_obs(); ++i) {
        const double t = grid.tau[i] - lag_min;
        double value = 0.0;
        if (t >= 0.0) {
            if (generator == Generator::tofts) {
                value = extended_tofts_eval(KineticParams{ kin.ktrans, kin.kep, exp.vp }, aif, t);
            } else {
                value = aath_ctc_eval(ResponseModelParams{ exp.Fp, kin.E, exp.ve, kin.Tc, 0.0 },
                                      aif, t);
            }
        }
        if (exp.noise_sd > 0.0)
            value += exp.noise_sd * rng.normal();
        rec.values[i] = value;
    }
    return rec;
}

CtcRecord downsample(const CtcRecord& ctc, int factor, int refine)
{
    if (factor < 1)
        throw std::domain_error("downsample: factor must be >= 1");
    if (!ctc.grid)
        throw std::invalid_argument("downsample: record has no grid");

    const int n = static_cast<int>(ctc.values.size());
    std::vector<double> tau;
    std::vector<double> values;
    for (int i = 0; i < n; i += factor) {
        tau.push_back(ctc.grid->tau[i]);
        values.push_back(ctc.values[i]);
    }

    CtcRecord out;
    out.voxel_id = ctc.voxel_id;
    out.grid = std::make_shared<TimeGrid>(
        tau.size() >= 2 ? TimeGrid::make_refined(tau, refine) : TimeGrid::make(tau, ctc.grid->dt));
    out.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return out;
}

} // namespace dce
