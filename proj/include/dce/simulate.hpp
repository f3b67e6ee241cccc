#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dce/response_fit.hpp"
#include "dce/signal_core.hpp"

namespace dce {

enum class Generator {
    tofts, // closed-form extended Tofts-Kermode curve
    aath,  // AIF convolved with the piecewise plateau/washout response
};

/// One synthetic experiment: physiological parameters plus acquisition
/// settings.
struct SimExperiment {
    double Fp = 0.57; // 1/min
    double vp = 0.06;
    double PS = 0.33; // 1/min
    double ve = 0.45;
    double noise_sd = 0.05; // mmol/l
    double lag_s = 0.0;     // seconds
    double rate_hz = 1.0;   // sampling rate

    void validate() const;
};

struct DerivedKinetics {
    double ktrans = 0.0; // 1/min
    double kep = 0.0;    // 1/min
    double E = 0.0;
    double Tc = 0.0; // minutes (0 when ktrans == 0)
};

/// Extraction relation E = 1 - exp(-PS/Fp), then ktrans = E*Fp,
/// kep = ktrans/ve, Tc = vp/ktrans.
DerivedKinetics derive_kinetics(const SimExperiment& exp);

/// The 13-experiment parameter bank: baseline, four flow variants, four
/// vascular-fraction variants and four permeability variants.
std::vector<SimExperiment> experiment_bank();

/// Observation grid for a simulation: samples at 1/rate_hz intervals from
/// 0 to duration_s inclusive, response grid refined by `refine`.
TimeGrid make_sim_grid(double rate_hz, double duration_s, int refine = 4);

/// Closed-form tissue curve for the plateau/washout response convolved
/// with the biexponential AIF.
double aath_ctc_eval(const ResponseModelParams& rm, const AifParams& aif, double t);

/// Synthetic concentration series: generator curve shifted by the lag
/// (zero before onset) plus i.i.d. Gaussian noise. Deterministic per seed.
CtcRecord simulate_ctc(const SimExperiment& exp, Generator generator, const TimeGrid& grid,
                       const AifParams& aif, std::uint64_t seed, const std::string& voxel_id);

/// Keeps every factor-th sample starting at index 0 and rebuilds the
/// response grid for the coarser series.
CtcRecord downsample(const CtcRecord& ctc, int factor, int refine = 4);

} // namespace dce
