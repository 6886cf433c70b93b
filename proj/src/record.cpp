#include "ksmc/record.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ksmc {

void RunRecord::validate() const {
    const int M = steps();
    require(M > 0, "run record: empty");
    require(estimates.rows() == M && truth.rows() == M && spread.rows() == M,
            "run record: row mismatch");
    require(estimates.cols() == truth.cols() && estimates.cols() == spread.cols(),
            "run record: column mismatch");
    require(static_cast<int>(ks_stat.size()) == M, "run record: ks_stat length");
    require(static_cast<int>(beta1_used.size()) == M, "run record: beta1 length");
    require(ess.empty() || static_cast<int>(ess.size()) == M, "run record: ess length");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

double parse_double(const std::string& s) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw io_error("csv: bad numeric field '" + s + "'");
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

void write_run_csv(const RunRecord& rec, const std::string& path) {
    rec.validate();
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    const int n = rec.dim();
    f << "t";
    for (int c = 1; c <= n; ++c) f << ",est_" << c;
    for (int c = 1; c <= n; ++c) f << ",truth_" << c;
    for (int c = 1; c <= n; ++c) f << ",std_" << c;
    f << ",ks_stat,beta1_used";
    if (!rec.ess.empty()) f << ",ess";
    f << "\n";
    for (int i = 0; i < rec.steps(); ++i) {
        f << format_double(rec.times[i]);
        for (int c = 0; c < n; ++c) f << "," << format_double(rec.estimates(i, c));
        for (int c = 0; c < n; ++c) f << "," << format_double(rec.truth(i, c));
        for (int c = 0; c < n; ++c) f << "," << format_double(rec.spread(i, c));
        f << "," << format_double(rec.ks_stat[i]) << "," << format_double(rec.beta1_used[i]);
        if (!rec.ess.empty()) f << "," << format_double(rec.ess[i]);
        f << "\n";
    }
    if (!f) throw io_error("write failed: " + path);
}

RunRecord read_run_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    std::string header;
    if (!std::getline(f, header)) throw io_error("empty csv: " + path);
    auto cols = split_csv(header);
    bool has_ess = !cols.empty() && cols.back() == "ess";
    const int fixed = has_ess ? 4 : 3;  // t, ks_stat, beta1(, ess)
    const int n = (static_cast<int>(cols.size()) - fixed) / 3;
    if (n < 1 || static_cast<int>(cols.size()) != 3 * n + fixed)
        throw io_error("unrecognized run csv header: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != cols.size()) throw io_error("ragged csv row in " + path);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& s : fields) row.push_back(parse_double(s));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw io_error("run csv has no data rows: " + path);

    RunRecord rec;
    const int M = static_cast<int>(rows.size());
    rec.times.resize(M);
    rec.estimates.resize(M, n);
    rec.truth.resize(M, n);
    rec.spread.resize(M, n);
    rec.ks_stat.resize(M);
    rec.beta1_used.resize(M);
    if (has_ess) rec.ess.resize(M);
    for (int i = 0; i < M; ++i) {
        const auto& r = rows[i];
        rec.times[i] = r[0];
        for (int c = 0; c < n; ++c) {
            rec.estimates(i, c) = r[1 + c];
            rec.truth(i, c) = r[1 + n + c];
            rec.spread(i, c) = r[1 + 2 * n + c];
        }
        rec.ks_stat[i] = r[1 + 3 * n];
        rec.beta1_used[i] = r[2 + 3 * n];
        if (has_ess) rec.ess[i] = r[3 + 3 * n];
    }
    return rec;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          std::uint64_t seed, std::uint64_t config_hash) {
    require(!traj.states.empty(), "trajectory: empty");
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    const int n = static_cast<int>(traj.states[0].size());
    const int qY = traj.obs_Y.empty() ? 0 : static_cast<int>(traj.obs_Y[0].size());
    const int qy = traj.obs_y.empty() ? 0 : static_cast<int>(traj.obs_y[0].size());
    f << "t";
    for (int c = 1; c <= n; ++c) f << ",x_" << c;
    for (int c = 1; c <= qY; ++c) f << ",Y_" << c;
    for (int c = 1; c <= qy; ++c) f << ",y_" << c;
    f << "\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        f << format_double(traj.times[i]);
        for (int c = 0; c < n; ++c) f << "," << format_double(traj.states[i][c]);
        for (int c = 0; c < qY; ++c) f << "," << format_double(traj.obs_Y[i][c]);
        for (int c = 0; c < qy; ++c) f << "," << format_double(traj.obs_y[i][c]);
        f << "\n";
    }
    if (!f) throw io_error("write failed: " + path);

    std::ofstream meta(path + ".meta");
    if (!meta) throw io_error("cannot open for writing: " + path + ".meta");
    meta << "seed = " << seed << "\n";
    meta << "config_hash = " << config_hash << "\n";
    meta << "dt_seconds = " << format_double(traj.dt) << "\n";
}

Trajectory read_trajectory_csv(const std::string& path, std::uint64_t* seed_out,
                               std::uint64_t* config_hash_out) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    std::string header;
    if (!std::getline(f, header)) throw io_error("empty csv: " + path);
    auto cols = split_csv(header);
    int n = 0, qY = 0, qy = 0;
    for (const auto& c : cols) {
        if (c.rfind("x_", 0) == 0) ++n;
        else if (c.rfind("Y_", 0) == 0) ++qY;
        else if (c.rfind("y_", 0) == 0) ++qy;
    }
    if (n == 0 || cols.size() != static_cast<std::size_t>(1 + n + qY + qy))
        throw io_error("unrecognized trajectory csv header: " + path);

    Trajectory traj;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != cols.size()) throw io_error("ragged csv row in " + path);
        traj.times.push_back(parse_double(fields[0]));
        Vec x(n);
        for (int c = 0; c < n; ++c) x[c] = parse_double(fields[1 + c]);
        traj.states.push_back(x);
        if (qY) {
            Vec Y(qY);
            for (int c = 0; c < qY; ++c) Y[c] = parse_double(fields[1 + n + c]);
            traj.obs_Y.push_back(Y);
        }
        if (qy) {
            Vec y(qy);
            for (int c = 0; c < qy; ++c) y[c] = parse_double(fields[1 + n + qY + c]);
            traj.obs_y.push_back(y);
        }
    }
    if (traj.times.size() < 2) throw io_error("trajectory csv has too few rows: " + path);
    traj.dt = traj.times[1] - traj.times[0];

    std::ifstream meta(path + ".meta");
    if (meta) {
        std::string mline;
        while (std::getline(meta, mline)) {
            auto eq = mline.find('=');
            if (eq == std::string::npos) continue;
            std::string key = mline.substr(0, eq);
            std::string val = mline.substr(eq + 1);
            auto trim = [](std::string& s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t") + 1);
            };
            trim(key); trim(val);
            if (key == "seed" && seed_out) *seed_out = std::stoull(val);
            if (key == "config_hash" && config_hash_out) *config_hash_out = std::stoull(val);
        }
    } else if (seed_out || config_hash_out) {
        throw io_error("missing sidecar: " + path + ".meta");
    }
    return traj;
}

}  // namespace ksmc
