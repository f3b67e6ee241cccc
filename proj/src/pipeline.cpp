#include "dce/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dce/errors.hpp"
#include "dce/util.hpp"

namespace dce {

std::vector<std::string> VoxelAnalysis::flags() const
{
    std::vector<std::string> f;
    if (no_enhancement)
        f.push_back("NoEnhancement");
    else if (onset.flag == OnsetFlag::degenerate_gradient)
        f.push_back("DegenerateGradient");
    if (fit_failed || !reference.converged)
        f.push_back("FitFailure");
    return f;
}

VoxelAnalysis deconvolve_voxel(const CtcRecord& record, const AnalyzeOptions& options)
{
    VoxelAnalysis v;
    v.voxel_id = record.voxel_id;
    v.model = make_model(record, options.aif, options.p, options.degree);

    ChainConfig cfg = options.chain;
    cfg.seed = derive_seed(options.chain.seed, record.voxel_id);
    v.chain = run_chain(v.model, cfg);
    v.band = posterior_band(v.chain, v.model, options.ci);

    try {
        v.onset = estimate_onset(v.chain, v.model, options.onset_ci);
    } catch (const NoEnhancementError&) {
        v.no_enhancement = true;
    }
    return v;
}

void fit_voxel(VoxelAnalysis& voxel, const CtcRecord& record, double t0_minutes,
               const AnalyzeOptions& options)
{
    voxel.t0_used = t0_minutes;
    voxel.ssr_semi = (voxel.model.y - voxel.band.fit_median).squaredNorm();

    try {
        voxel.kinetics =
            fit_response_draws(voxel.chain, voxel.model, t0_minutes, options.draw_fit_workers);
        voxel.fit_failed = false;
    } catch (const NumericalError&) {
        voxel.fit_failed = true;
        voxel.kinetics = KineticEstimate{};
    }
    voxel.reference = fit_reference_model(record, options.aif, t0_minutes);
}

VoxelAnalysis analyze_voxel(const CtcRecord& record, const AnalyzeOptions& options)
{
    VoxelAnalysis v = deconvolve_voxel(record, options);
    fit_voxel(v, record, v.no_enhancement ? 0.0 : v.onset.t0, options);
    return v;
}

namespace {

/// voxel_id "R_C" with both parts integral becomes map coordinates.
std::pair<int, int> parse_row_col(const std::string& id)
{
    const std::size_t sep = id.find('_');
    if (sep == std::string::npos || sep == 0 || sep + 1 >= id.size())
        return { -1, -1 };
    const std::string a = id.substr(0, sep);
    const std::string b = id.substr(sep + 1);
    const auto all_digits = [](const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
    };
    if (!all_digits(a) || !all_digits(b))
        return { -1, -1 };
    return { std::stoi(a), std::stoi(b) };
}

} // namespace

MapRow to_map_row(const VoxelAnalysis& v)
{
    MapRow r;
    r.voxel_id = v.voxel_id;
    std::tie(r.row, r.col) = parse_row_col(v.voxel_id);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (!v.fit_failed) {
        r.ktrans_median = v.kinetics.ktrans.median;
        r.ktrans_se = v.kinetics.ktrans.standard_error;
        r.kep_median = v.kinetics.kep.median;
        r.kep_se = v.kinetics.kep.standard_error;
        r.vp_median = v.kinetics.vp.median;
        r.vp_se = v.kinetics.vp.standard_error;
        r.ve_median = v.kinetics.ve.median;
        r.ve_se = v.kinetics.ve.standard_error;
    } else {
        r.ktrans_median = r.ktrans_se = r.kep_median = r.kep_se = nan;
        r.vp_median = r.vp_se = r.ve_median = r.ve_se = nan;
    }
    r.t0_s = v.no_enhancement ? nan : v.onset.t0 * 60.0;
    r.t_star_s = v.no_enhancement ? nan : v.onset.t_star * 60.0;
    r.ssr_semi = v.ssr_semi;
    r.ssr_param = v.reference.ssr;
    const auto flags = v.flags();
    if (flags.empty()) {
        r.flags = "ok";
    } else {
        std::ostringstream joined;
        for (std::size_t i = 0; i < flags.size(); ++i)
            joined << (i ? ";" : "") << flags[i];
        r.flags = joined.str();
    }
    return r;
}

ScoreReport compute_score(const std::vector<MapRow>& map, const TruthManifest& truth)
{
    std::map<std::string, const MapRow*> by_id;
    for (const MapRow& r : map)
        by_id[r.voxel_id] = &r;

    std::vector<std::string> missing;
    for (const SimTruth& t : truth.experiments)
        if (!by_id.count(t.voxel_id))
            missing.push_back(t.voxel_id);
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "map is missing voxels from the truth manifest:";
        for (const std::string& id : missing)
            msg << ' ' << id;
        throw IoError(msg.str());
    }

    ScoreReport rep;
    rep.n_voxels = static_cast<int>(truth.experiments.size());

    struct Acc {
        std::vector<double> abs_err, rel_err;
        void add(double est, double tru)
        {
            abs_err.push_back(std::abs(est - tru));
            if (tru != 0.0)
                rel_err.push_back(std::abs(est - tru) / std::abs(tru));
        }
        ScoreParam finish() const
        {
            ScoreParam p;
            p.mad = mean(abs_err);
            p.mean_rel_dev = rel_err.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(rel_err);
            return p;
        }
    };
    Acc ktrans, kep, vp, ve;
    std::vector<double> t0_est, t0_true, t0_err;
    std::vector<double> ssr_semi, ssr_param;
    int n_semi_better = 0;

    for (const SimTruth& t : truth.experiments) {
        const MapRow& r = *by_id.at(t.voxel_id);
        ktrans.add(r.ktrans_median, t.kin.ktrans);
        kep.add(r.kep_median, t.kin.kep);
        vp.add(r.vp_median, t.exp.vp);
        ve.add(r.ve_median, t.exp.ve);
        t0_est.push_back(r.t0_s);
        t0_true.push_back(t.exp.lag_s);
        t0_err.push_back(r.t0_s - t.exp.lag_s);
        ssr_semi.push_back(r.ssr_semi);
        ssr_param.push_back(r.ssr_param);
        if (r.ssr_semi < r.ssr_param)
            ++n_semi_better;
    }

    rep.ktrans = ktrans.finish();
    rep.kep = kep.finish();
    rep.vp = vp.finish();
    rep.ve = ve.finish();

    rep.onset_correlation = pearson(t0_est, t0_true);
    rep.onset_correlation_pass = rep.onset_correlation > rep.onset_correlation_threshold;
    double max_abs = 0.0, mean_err = 0.0, mad = 0.0;
    for (double e : t0_err) {
        max_abs = std::max(max_abs, std::abs(e));
        mean_err += e;
        mad += std::abs(e);
    }
    rep.onset_max_abs_error_s = max_abs;
    rep.onset_mean_error_s = mean_err / t0_err.size();
    rep.onset_mad_s = mad / t0_err.size();

    rep.ssr_semi_mean = mean(ssr_semi);
    rep.ssr_semi_min = *std::min_element(ssr_semi.begin(), ssr_semi.end());
    rep.ssr_semi_max = *std::max_element(ssr_semi.begin(), ssr_semi.end());
    rep.ssr_param_mean = mean(ssr_param);
    rep.ssr_param_min = *std::min_element(ssr_param.begin(), ssr_param.end());
    rep.ssr_param_max = *std::max_element(ssr_param.begin(), ssr_param.end());
    rep.frac_semi_lt_param = static_cast<double>(n_semi_better) / rep.n_voxels;
    return rep;
}

void write_score_report(const ScoreReport& rep, const std::string& path)
{
    nlohmann::ordered_json j;
    j["schema"] = "dce-report/1";
    j["n_voxels"] = rep.n_voxels;
    const auto param = [](const ScoreParam& p) {
        nlohmann::ordered_json o;
        o["mad"] = p.mad;
        o["mean_rel_dev"] = p.mean_rel_dev;
        return o;
    };
    j["params"]["ktrans"] = param(rep.ktrans);
    j["params"]["kep"] = param(rep.kep);
    j["params"]["vp"] = param(rep.vp);
    j["params"]["ve"] = param(rep.ve);
    j["onset"] = { { "correlation", rep.onset_correlation },
                   { "correlation_threshold", rep.onset_correlation_threshold },
                   { "correlation_pass", rep.onset_correlation_pass },
                   { "mad_s", rep.onset_mad_s },
                   { "max_abs_error_s", rep.onset_max_abs_error_s },
                   { "mean_error_s", rep.onset_mean_error_s } };
    j["ssr"] = { { "semi_mean", rep.ssr_semi_mean }, { "semi_min", rep.ssr_semi_min },
                 { "semi_max", rep.ssr_semi_max }, { "param_mean", rep.ssr_param_mean },
                 { "param_min", rep.ssr_param_min }, { "param_max", rep.ssr_param_max },
                 { "frac_semi_lt_param", rep.frac_semi_lt_param } };
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

} // namespace dce
