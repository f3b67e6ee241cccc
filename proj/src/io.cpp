#include "dce/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dce/errors.hpp"

namespace dce {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ','))
        fields.push_back(field);
    if (!line.empty() && line.back() == ',')
        fields.push_back("");
    return fields;
}

std::string strip(std::string s)
{
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
        s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
        ++i;
    return s.substr(i);
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        std::ostringstream msg;
        msg << path << ": line " << line_no << ": cannot parse number '" << s << "'";
        throw IoError(msg.str());
    }
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open for reading: " + path);
    return in;
}

} // namespace

std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::vector<CtcRecord> read_ctc_csv(const std::string& path, int refine)
{
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line))
        throw IoError(path + ": empty file");
    ++line_no;
    if (strip(line) != "voxel_id,time_s,concentration")
        throw IoError(path + ": line 1: expected header voxel_id,time_s,concentration");

    std::map<std::string, std::vector<std::pair<double, double>>> by_voxel;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = strip(line);
        if (stripped.empty())
            continue;
        const auto fields = split_csv_line(stripped);
        if (fields.size() != 3) {
            std::ostringstream msg;
            msg << path << ": line " << line_no << ": expected 3 fields, got " << fields.size();
            throw IoError(msg.str());
        }
        const double time_s = parse_double(fields[1], path, line_no);
        const double conc = parse_double(fields[2], path, line_no);
        if (!std::isfinite(conc)) {
            std::ostringstream msg;
            msg << path << ": line " << line_no << ": non-finite concentration";
            throw IoError(msg.str());
        }
        by_voxel[strip(fields[0])].emplace_back(time_s, conc);
    }
    if (by_voxel.empty())
        throw IoError(path + ": no voxels");

    std::vector<CtcRecord> records;
    records.reserve(by_voxel.size());
    for (auto& [id, samples] : by_voxel) {
        std::sort(samples.begin(), samples.end());
        std::vector<double> tau_minutes;
        tau_minutes.reserve(samples.size());
        Eigen::VectorXd values(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            tau_minutes.push_back(samples[i].first / 60.0);
            values[static_cast<Eigen::Index>(i)] = samples[i].second;
        }
        CtcRecord rec;
        rec.voxel_id = id;
        try {
            rec.grid = std::make_shared<TimeGrid>(TimeGrid::make_refined(tau_minutes, refine));
        } catch (const std::exception& e) {
            throw IoError(path + ": voxel '" + id + "': " + e.what());
        }
        rec.values = std::move(values);
        records.push_back(std::move(rec));
    }
    return records;
}

void write_ctc_csv(const std::vector<CtcRecord>& records, const std::string& path)
{
    std::ofstream out = open_out(path);
    out << "voxel_id,time_s,concentration\n";
    for (const CtcRecord& rec : records)
        for (Eigen::Index i = 0; i < rec.values.size(); ++i)
            out << rec.voxel_id << ',' << fmt_double(rec.grid->tau[i] * 60.0) << ','
                << fmt_double(rec.values[i]) << '\n';
}

namespace {

const char* kMapHeader =
    "voxel_id,row,col,ktrans_median,ktrans_se,kep_median,kep_se,vp_median,vp_se,"
    "ve_median,ve_se,t0_s,t_star_s,ssr_semi,ssr_param,flags";

} // namespace

void write_map_csv(const std::vector<MapRow>& rows, const std::string& path)
{
    std::ofstream out = open_out(path);
    out << kMapHeader << '\n';
    for (const MapRow& r : rows) {
        out << r.voxel_id << ',' << r.row << ',' << r.col << ',' << fmt_double(r.ktrans_median)
            << ',' << fmt_double(r.ktrans_se) << ',' << fmt_double(r.kep_median) << ','
            << fmt_double(r.kep_se) << ',' << fmt_double(r.vp_median) << ',' << fmt_double(r.vp_se)
            << ',' << fmt_double(r.ve_median) << ',' << fmt_double(r.ve_se) << ','
            << fmt_double(r.t0_s) << ',' << fmt_double(r.t_star_s) << ',' << fmt_double(r.ssr_semi)
            << ',' << fmt_double(r.ssr_param) << ',' << r.flags << '\n';
    }
}

std::vector<MapRow> read_map_csv(const std::string& path)
{
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line))
        throw IoError(path + ": empty file");
    ++line_no;
    if (strip(line) != kMapHeader)
        throw IoError(path + ": line 1: unexpected parameter-map header");

    std::vector<MapRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = strip(line);
        if (stripped.empty())
            continue;
        const auto f = split_csv_line(stripped);
        if (f.size() != 16) {
            std::ostringstream msg;
            msg << path << ": line " << line_no << ": expected 16 fields, got " << f.size();
            throw IoError(msg.str());
        }
        MapRow r;
        r.voxel_id = f[0];
        r.row = static_cast<int>(parse_double(f[1], path, line_no));
        r.col = static_cast<int>(parse_double(f[2], path, line_no));
        r.ktrans_median = parse_double(f[3], path, line_no);
        r.ktrans_se = parse_double(f[4], path, line_no);
        r.kep_median = parse_double(f[5], path, line_no);
        r.kep_se = parse_double(f[6], path, line_no);
        r.vp_median = parse_double(f[7], path, line_no);
        r.vp_se = parse_double(f[8], path, line_no);
        r.ve_median = parse_double(f[9], path, line_no);
        r.ve_se = parse_double(f[10], path, line_no);
        r.t0_s = parse_double(f[11], path, line_no);
        r.t_star_s = parse_double(f[12], path, line_no);
        r.ssr_semi = parse_double(f[13], path, line_no);
        r.ssr_param = parse_double(f[14], path, line_no);
        r.flags = f[15];
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_onset_csv(const std::vector<OnsetRow>& rows, const std::string& path)
{
    std::ofstream out = open_out(path);
    out << "voxel_id,t_star_s,t0_s,flag\n";
    for (const OnsetRow& r : rows)
        out << r.voxel_id << ',' << fmt_double(r.t_star_s) << ',' << fmt_double(r.t0_s) << ','
            << r.flag << '\n';
}

void write_fit_csv(const TimeGrid& grid, const Eigen::VectorXd& observed, const PosteriorBand& band,
                   const std::string& path)
{
    std::ofstream out = open_out(path);
    out << "time_s,observed,fit_lower,fit_median,fit_upper\n";
    for (Eigen::Index i = 0; i < grid.tau.size(); ++i)
        out << fmt_double(grid.tau[i] * 60.0) << ',' << fmt_double(observed[i]) << ','
            << fmt_double(band.fit_lower[i]) << ',' << fmt_double(band.fit_median[i]) << ','
            << fmt_double(band.fit_upper[i]) << '\n';
}

void write_response_csv(const TimeGrid& grid, const PosteriorBand& band, const std::string& path)
{
    std::ofstream out = open_out(path);
    out << "time_s,resp_lower,resp_median,resp_upper\n";
    for (Eigen::Index i = 0; i < grid.t.size(); ++i)
        out << fmt_double(grid.t[i] * 60.0) << ',' << fmt_double(band.resp_lower[i]) << ','
            << fmt_double(band.resp_median[i]) << ',' << fmt_double(band.resp_upper[i]) << '\n';
}

void write_chain_csv(const PSplineChain& chain, const std::string& path)
{
    std::ofstream out = open_out(path);
    out << "draw,sigma2,beta_first,beta_mid,beta_last\n";
    for (std::size_t d = 0; d < chain.draws.size(); ++d) {
        const Eigen::VectorXd& b = chain.draws[d].beta;
        out << d << ',' << fmt_double(chain.draws[d].sigma2) << ',' << fmt_double(b[0]) << ','
            << fmt_double(b[b.size() / 2]) << ',' << fmt_double(b[b.size() - 1]) << '\n';
    }
}

void write_truth_manifest(const TruthManifest& manifest, const std::string& path)
{
    ordered_json j;
    j["schema"] = "dce-truth/1";
    j["aif"] = { { "dose", manifest.aif.dose }, { "a1", manifest.aif.a1 }, { "a2", manifest.aif.a2 },
                 { "m1", manifest.aif.m1 }, { "m2", manifest.aif.m2 } };
    j["duration_s"] = manifest.duration_s;
    j["experiments"] = ordered_json::array();
    for (const SimTruth& t : manifest.experiments) {
        ordered_json e;
        e["voxel_id"] = t.voxel_id;
        e["generator"] = t.generator;
        e["seed"] = t.seed;
        e["Fp"] = t.exp.Fp;
        e["vp"] = t.exp.vp;
        e["PS"] = t.exp.PS;
        e["ve"] = t.exp.ve;
        e["noise_sd"] = t.exp.noise_sd;
        e["lag_s"] = t.exp.lag_s;
        e["rate_hz"] = t.exp.rate_hz;
        e["ktrans"] = t.kin.ktrans;
        e["kep"] = t.kin.kep;
        e["E"] = t.kin.E;
        e["Tc_min"] = t.kin.Tc;
        j["experiments"].push_back(std::move(e));
    }
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

TruthManifest read_truth_manifest(const std::string& path)
{
    std::ifstream in = open_in(path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError(path + ": invalid JSON: " + e.what());
    }
    if (j.value("schema", "") != "dce-truth/1")
        throw IoError(path + ": unsupported schema");

    TruthManifest m;
    const auto& aif = j.at("aif");
    m.aif.dose = aif.at("dose");
    m.aif.a1 = aif.at("a1");
    m.aif.a2 = aif.at("a2");
    m.aif.m1 = aif.at("m1");
    m.aif.m2 = aif.at("m2");
    m.duration_s = j.at("duration_s");
    for (const auto& e : j.at("experiments")) {
        SimTruth t;
        t.voxel_id = e.at("voxel_id");
        t.generator = e.at("generator");
        t.seed = e.at("seed");
        t.exp.Fp = e.at("Fp");
        t.exp.vp = e.at("vp");
        t.exp.PS = e.at("PS");
        t.exp.ve = e.at("ve");
        t.exp.noise_sd = e.at("noise_sd");
        t.exp.lag_s = e.at("lag_s");
        t.exp.rate_hz = e.at("rate_hz");
        t.kin.ktrans = e.at("ktrans");
        t.kin.kep = e.at("kep");
        t.kin.E = e.at("E");
        t.kin.Tc = e.at("Tc_min");
        m.experiments.push_back(std::move(t));
    }
    return m;
}

} // namespace dce
