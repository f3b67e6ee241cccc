#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dce/io.hpp"
#include "dce/onset.hpp"
#include "dce/response_fit.hpp"
#include "dce/sampler.hpp"

namespace dce {

struct AnalyzeOptions {
    int p = 25;
    int degree = 3;
    int refine = 4;
    ChainConfig chain;      // chain.seed acts as the base seed
    double ci = 0.95;       // report band level
    double onset_ci = 0.99; // band level for onset detection
    bool shared_onset = false;
    int workers = 1;
    int draw_fit_workers = 1;
    AifParams aif;
};

/// Everything computed for one voxel. The model and chain are kept so
/// response fits can be re-run against a shared onset without resampling.
struct VoxelAnalysis {
    std::string voxel_id;
    PSplineModel model;
    PSplineChain chain;
    PosteriorBand band; // at options.ci

    bool no_enhancement = false;
    OnsetEstimate onset; // meaningful only when !no_enhancement
    double t0_used = 0.0; // minutes, as passed to the fits

    bool fit_failed = false;
    KineticEstimate kinetics; // meaningful only when !fit_failed
    ReferenceFit reference;
    double ssr_semi = 0.0;

    std::vector<std::string> flags() const;
    bool flagged() const { return !flags().empty(); }
};

/// Stage 1: deconvolution. Runs the chain (seed derived from the base
/// seed and the voxel id), computes the report band and the onset
/// estimate.
VoxelAnalysis deconvolve_voxel(const CtcRecord& record, const AnalyzeOptions& options);

/// Stage 2: kinetic parameter extraction with the given onset (minutes).
void fit_voxel(VoxelAnalysis& voxel, const CtcRecord& record, double t0_minutes,
               const AnalyzeOptions& options);

/// Both stages with the voxel's own onset estimate.
VoxelAnalysis analyze_voxel(const CtcRecord& record, const AnalyzeOptions& options);

MapRow to_map_row(const VoxelAnalysis& voxel);

/// Per-parameter and onset agreement between a parameter map and the
/// generating truth.
struct ScoreParam {
    double mad = 0.0;
    double mean_rel_dev = 0.0;
};

struct ScoreReport {
    int n_voxels = 0;
    ScoreParam ktrans, kep, vp, ve;
    double onset_correlation = 1.0;
    double onset_correlation_threshold = 0.99;
    bool onset_correlation_pass = true;
    double onset_mad_s = 0.0;
    double onset_max_abs_error_s = 0.0;
    double onset_mean_error_s = 0.0;
    double ssr_semi_mean = 0.0, ssr_semi_min = 0.0, ssr_semi_max = 0.0;
    double ssr_param_mean = 0.0, ssr_param_min = 0.0, ssr_param_max = 0.0;
    double frac_semi_lt_param = 0.0;
};

/// Matches map rows to manifest entries by voxel id (every manifest voxel
/// must be present) and computes the report. Relative deviations skip
/// parameters whose true value is zero.
ScoreReport compute_score(const std::vector<MapRow>& map, const TruthManifest& truth);

void write_score_report(const ScoreReport& report, const std::string& path);

} // namespace dce
