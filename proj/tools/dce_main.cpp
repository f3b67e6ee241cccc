// dce: semi-parametric deconvolution of contrast concentration time
// curves, onset estimation and kinetic parameter extraction.
//
// Subcommands:
//   simulate  write synthetic CTC series and a truth manifest
//   analyze   deconvolve each voxel, estimate onset, fit kinetic models
//   score     compare a parameter map against a truth manifest

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dce/errors.hpp"
#include "dce/io.hpp"
#include "dce/onset.hpp"
#include "dce/pipeline.hpp"
#include "dce/simulate.hpp"
#include "dce/util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

std::uint64_t effective_seed(std::uint64_t cli_seed)
{
    // DCE_SEED wins over --seed so batch scripts can pin reproducibility
    // without touching stored command lines.
    if (const char* env = std::getenv("DCE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw dce::IoError(std::string("DCE_SEED is not an integer: ") + env);
        }
    }
    return cli_seed;
}

std::string exp_id(int index)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "exp%02d", index + 1);
    return buf;
}

struct SimulateArgs {
    std::string out_dir;
    int exp_index = 0; // 1-based; 0 = whole bank
    std::string generator = "tofts";
    double rate_hz = 1.0;
    double duration_s = 400.0;
    double noise_sd = 0.05;
    double lag_s = 0.0;
    std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& args)
{
    const std::uint64_t seed = effective_seed(args.seed);
    if (!fs::exists(args.out_dir))
        throw dce::IoError("output directory does not exist: " + args.out_dir);

    const dce::Generator gen =
        args.generator == "aath" ? dce::Generator::aath : dce::Generator::tofts;
    const dce::AifParams aif;
    const dce::TimeGrid grid = dce::make_sim_grid(args.rate_hz, args.duration_s);

    std::vector<dce::SimExperiment> bank = dce::experiment_bank();
    std::vector<int> selected;
    if (args.exp_index > 0) {
        if (args.exp_index > static_cast<int>(bank.size()))
            throw dce::IoError("experiment index out of range (1..13)");
        selected.push_back(args.exp_index - 1);
    } else {
        for (int i = 0; i < static_cast<int>(bank.size()); ++i)
            selected.push_back(i);
    }

    dce::TruthManifest manifest;
    manifest.aif = aif;
    manifest.duration_s = args.duration_s;
    std::vector<dce::CtcRecord> all;
    for (int i : selected) {
        dce::SimExperiment exp = bank[i];
        exp.rate_hz = args.rate_hz;
        exp.noise_sd = args.noise_sd;
        exp.lag_s = args.lag_s;
        const std::string id = exp_id(i);
        const std::uint64_t voxel_seed = dce::derive_seed(seed, id);
        dce::CtcRecord rec = dce::simulate_ctc(exp, gen, grid, aif, voxel_seed, id);
        dce::write_ctc_csv({ rec }, (fs::path(args.out_dir) / ("ctc_" + id + ".csv")).string());
        all.push_back(std::move(rec));

        dce::SimTruth truth;
        truth.voxel_id = id;
        truth.exp = exp;
        truth.kin = dce::derive_kinetics(exp);
        truth.generator = args.generator;
        truth.seed = voxel_seed;
        manifest.experiments.push_back(std::move(truth));
    }
    dce::write_ctc_csv(all, (fs::path(args.out_dir) / "ctc_all.csv").string());
    dce::write_truth_manifest(manifest, (fs::path(args.out_dir) / "truth.json").string());
    std::cout << "wrote " << all.size() << " series to " << args.out_dir << '\n';
    return kExitOk;
}

struct AnalyzeArgs {
    std::string input;
    std::string out_dir;
    int p = 25;
    int degree = 3;
    int refine = 4;
    int iters = 6000;
    int burnin = 2000;
    int thin = 2;
    std::uint64_t seed = 1;
    double ci = 0.95;
    double onset_ci = 0.99;
    int workers = 1;
    bool shared_onset = false;
    bool dump_chain = false;
};

int cmd_analyze(const AnalyzeArgs& args)
{
    if (args.input == args.out_dir)
        throw dce::IoError("input and output paths must be distinct");
    if (!fs::exists(args.out_dir))
        throw dce::IoError("output directory does not exist: " + args.out_dir);
    if (!(args.ci > 0.0 && args.ci < 1.0) || !(args.onset_ci > 0.0 && args.onset_ci < 1.0))
        throw dce::IoError("credible levels must lie in (0,1)");

    dce::AnalyzeOptions options;
    options.p = args.p;
    options.degree = args.degree;
    options.refine = args.refine;
    options.chain.iterations = args.iters;
    options.chain.burn_in = args.burnin;
    options.chain.thinning = args.thin;
    options.chain.seed = effective_seed(args.seed);
    options.ci = args.ci;
    options.onset_ci = args.onset_ci;
    options.shared_onset = args.shared_onset;
    options.workers = args.workers;

    const std::vector<dce::CtcRecord> records = dce::read_ctc_csv(args.input, args.refine);

    // stage 1: deconvolution and onset, voxels in parallel
    std::vector<dce::VoxelAnalysis> voxels(records.size());
    dce::parallel_for(records.size(), options.workers, [&](std::size_t i) {
        voxels[i] = dce::deconvolve_voxel(records[i], options);
    });

    // ROI onset over voxels with a usable estimate
    std::vector<dce::OnsetEstimate> usable;
    for (const auto& v : voxels)
        if (!v.no_enhancement)
            usable.push_back(v.onset);
    const bool have_roi_onset = !usable.empty();
    const double roi_t0 = have_roi_onset ? dce::roi_onset(usable) : 0.0;

    // stage 2: kinetic fits, with per-voxel or shared onset
    dce::parallel_for(records.size(), options.workers, [&](std::size_t i) {
        auto& v = voxels[i];
        double t0 = 0.0;
        if (options.shared_onset)
            t0 = have_roi_onset ? roi_t0 : 0.0;
        else if (!v.no_enhancement)
            t0 = v.onset.t0;
        dce::fit_voxel(v, records[i], t0, options);
    });

    // outputs, in voxel-id order (records arrive sorted)
    std::vector<dce::MapRow> map_rows;
    std::vector<dce::OnsetRow> onset_rows;
    int n_flagged = 0;
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        const auto& v = voxels[i];
        map_rows.push_back(dce::to_map_row(v));
        dce::OnsetRow orow;
        orow.voxel_id = v.voxel_id;
        if (v.no_enhancement) {
            orow.t_star_s = orow.t0_s = std::numeric_limits<double>::quiet_NaN();
            orow.flag = "NoEnhancement";
        } else {
            orow.t_star_s = v.onset.t_star * 60.0;
            orow.t0_s = v.onset.t0 * 60.0;
            orow.flag = v.onset.flag == dce::OnsetFlag::ok ? "ok" : "DegenerateGradient";
        }
        onset_rows.push_back(std::move(orow));
        if (v.flagged())
            ++n_flagged;

        const fs::path out(args.out_dir);
        dce::write_fit_csv(*records[i].grid, records[i].values, v.band,
                           (out / ("fit_" + v.voxel_id + ".csv")).string());
        dce::write_response_csv(*records[i].grid, v.band,
                                (out / ("response_" + v.voxel_id + ".csv")).string());
        if (args.dump_chain)
            dce::write_chain_csv(v.chain, (out / ("chain_" + v.voxel_id + ".csv")).string());
    }
    dce::write_map_csv(map_rows, (fs::path(args.out_dir) / "map.csv").string());
    dce::write_onset_csv(onset_rows, (fs::path(args.out_dir) / "onset.csv").string());

    ordered_json summary;
    summary["schema"] = "dce-summary/1";
    summary["config"] = { { "p", args.p }, { "degree", args.degree }, { "refine", args.refine },
                          { "iters", args.iters }, { "burnin", args.burnin }, { "thin", args.thin },
                          { "seed", options.chain.seed }, { "ci", args.ci },
                          { "onset_ci", args.onset_ci }, { "shared_onset", args.shared_onset } };
    summary["n_voxels"] = voxels.size();
    summary["n_flagged"] = n_flagged;
    summary["roi_onset_s"] = have_roi_onset ? ordered_json(roi_t0 * 60.0) : ordered_json(nullptr);
    ordered_json flag_list = ordered_json::array();
    for (const auto& v : voxels) {
        if (v.flagged()) {
            ordered_json f;
            f["voxel_id"] = v.voxel_id;
            f["flags"] = v.flags();
            flag_list.push_back(std::move(f));
        }
    }
    summary["flagged"] = std::move(flag_list);
    std::ofstream sum((fs::path(args.out_dir) / "summary.json").string());
    if (!sum)
        throw dce::IoError("cannot write summary.json");
    sum << summary.dump(2) << '\n';

    std::cout << "analyzed " << voxels.size() << " voxels, " << n_flagged << " flagged";
    if (have_roi_onset)
        std::cout << ", ROI onset " << dce::fmt_double(roi_t0 * 60.0) << " s";
    std::cout << '\n';
    return n_flagged > 0 ? kExitPartial : kExitOk;
}

struct ScoreArgs {
    std::string map_path;
    std::string truth_path;
    std::string out_path;
};

int cmd_score(const ScoreArgs& args)
{
    const std::vector<dce::MapRow> map = dce::read_map_csv(args.map_path);
    const dce::TruthManifest truth = dce::read_truth_manifest(args.truth_path);
    const dce::ScoreReport report = dce::compute_score(map, truth);
    dce::write_score_report(report, args.out_path);
    std::cout << "ktrans MAD " << dce::fmt_double(report.ktrans.mad) << ", onset correlation "
              << dce::fmt_double(report.onset_correlation) << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{ "Bayesian P-spline deconvolution for DCE-MRI concentration curves" };
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic CTC series");
    simulate->add_option("--out", sim.out_dir, "output directory")->required();
    simulate->add_option("--exp", sim.exp_index, "single experiment index 1..13 (default: whole bank)");
    simulate->add_option("--generator", sim.generator, "curve generator")
        ->check(CLI::IsMember({ "tofts", "aath" }))
        ->capture_default_str();
    simulate->add_option("--rate", sim.rate_hz, "sampling rate in Hz")->capture_default_str();
    simulate->add_option("--duration", sim.duration_s, "acquisition length in seconds")
        ->capture_default_str();
    simulate->add_option("--noise", sim.noise_sd, "noise standard deviation (mmol/l)")
        ->capture_default_str();
    simulate->add_option("--lag", sim.lag_s, "contrast arrival lag in seconds")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "random seed (DCE_SEED overrides)")->capture_default_str();

    AnalyzeArgs ana;
    CLI::App* analyze = app.add_subcommand("analyze", "deconvolve and fit kinetic parameters");
    analyze->add_option("--input", ana.input, "input CTC CSV")->required();
    analyze->add_option("--out", ana.out_dir, "output directory")->required();
    analyze->add_option("--p", ana.p, "number of B-spline basis functions")->capture_default_str();
    analyze->add_option("--degree", ana.degree, "B-spline degree")->capture_default_str();
    analyze->add_option("--refine", ana.refine, "response grid refinement factor")
        ->capture_default_str();
    analyze->add_option("--iters", ana.iters, "MCMC iterations")->capture_default_str();
    analyze->add_option("--burnin", ana.burnin, "burn-in iterations")->capture_default_str();
    analyze->add_option("--thin", ana.thin, "thinning interval")->capture_default_str();
    analyze->add_option("--seed", ana.seed, "base seed (DCE_SEED overrides)")->capture_default_str();
    analyze->add_option("--ci", ana.ci, "report credible level")->capture_default_str();
    analyze->add_option("--onset-ci", ana.onset_ci, "onset credible level")->capture_default_str();
    analyze->add_option("--workers", ana.workers, "parallel voxel workers")->capture_default_str();
    analyze->add_flag("--shared-onset", ana.shared_onset,
                      "refit kinetics with the ROI median onset");
    analyze->add_flag("--dump-chain", ana.dump_chain, "write per-voxel chain diagnostics");

    ScoreArgs sc;
    CLI::App* score = app.add_subcommand("score", "compare a map against the generating truth");
    score->add_option("--map", sc.map_path, "parameter map CSV")->required();
    score->add_option("--truth", sc.truth_path, "truth manifest JSON")->required();
    score->add_option("--out", sc.out_path, "report JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(sim);
        if (analyze->parsed())
            return cmd_analyze(ana);
        if (score->parsed())
            return cmd_score(sc);
    } catch (const dce::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
