#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dce/sampler.hpp"
#include "dce/signal_core.hpp"
#include "dce/simulate.hpp"

namespace dce {

/// Fixed-precision number formatting for CSV output, so identical runs
/// produce identical bytes.
std::string fmt_double(double v);

/// Reads a concentration series CSV with header
/// voxel_id,time_s,concentration. Rows may arrive in any order; they are
/// grouped by voxel and sorted by time. Records are returned sorted by
/// voxel id. Malformed rows raise IoError naming the line number.
std::vector<CtcRecord> read_ctc_csv(const std::string& path, int refine = 4);

void write_ctc_csv(const std::vector<CtcRecord>& records, const std::string& path);

/// One row of the per-voxel parameter map.
struct MapRow {
    std::string voxel_id;
    int row = -1;
    int col = -1;
    double ktrans_median = 0.0, ktrans_se = 0.0;
    double kep_median = 0.0, kep_se = 0.0;
    double vp_median = 0.0, vp_se = 0.0;
    double ve_median = 0.0, ve_se = 0.0;
    double t0_s = 0.0;
    double t_star_s = 0.0;
    double ssr_semi = 0.0;
    double ssr_param = 0.0;
    std::string flags = "ok";
};

void write_map_csv(const std::vector<MapRow>& rows, const std::string& path);
std::vector<MapRow> read_map_csv(const std::string& path);

struct OnsetRow {
    std::string voxel_id;
    double t_star_s = 0.0;
    double t0_s = 0.0;
    std::string flag = "ok";
};

void write_onset_csv(const std::vector<OnsetRow>& rows, const std::string& path);

/// Fitted-curve band on the observation grid, with the observations.
void write_fit_csv(const TimeGrid& grid, const Eigen::VectorXd& observed, const PosteriorBand& band,
                   const std::string& path);

/// Response-function band on the response grid.
void write_response_csv(const TimeGrid& grid, const PosteriorBand& band, const std::string& path);

/// Chain diagnostics: iteration, sigma2 and a few beta coordinates.
void write_chain_csv(const PSplineChain& chain, const std::string& path);

/// Generating truth for one simulated voxel.
struct SimTruth {
    std::string voxel_id;
    SimExperiment exp;
    DerivedKinetics kin;
    std::string generator = "tofts";
    std::uint64_t seed = 0;
};

struct TruthManifest {
    AifParams aif;
    double duration_s = 0.0;
    std::vector<SimTruth> experiments;
};

void write_truth_manifest(const TruthManifest& manifest, const std::string& path);
TruthManifest read_truth_manifest(const std::string& path);

} // namespace dce
