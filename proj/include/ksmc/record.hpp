#pragma once

#include <string>
#include <vector>

#include "ksmc/common.hpp"
#include "ksmc/sde.hpp"

namespace ksmc {

/// Per-step output of one filter run. Row i describes the post-update state
/// at times[i]. `spread` is the per-component ensemble std (empirical-measure
/// convention, divisor N). `ks_stat` is the running innovation-whiteness
/// statistic (NaN until 5 increments have accumulated); `ens_ks_stat` is the
/// per-step ensemble residual statistic kept as a secondary diagnostic and
/// not part of the CSV schema. `ess` stays empty for unweighted filters.
struct RunRecord {
    std::string filter_name;
    std::vector<double> times;
    Mat estimates;  // M x n
    Mat truth;      // M x n
    Mat spread;     // M x n
    std::vector<double> ks_stat;
    std::vector<double> beta1_used;
    std::vector<double> ess;
    std::vector<double> ens_ks_stat;
    int degeneracy_events = 0;  // uniform-weight fallbacks, gain regularizations

    int steps() const { return static_cast<int>(times.size()); }
    int dim() const { return static_cast<int>(estimates.cols()); }
    void validate() const;
};

/// CSV schema: t, est_1..n, truth_1..n, std_1..n, ks_stat, beta1_used and,
/// when ess is present, a trailing ess column. Doubles are written as %.17g
/// so a reload reproduces the exact bit pattern.
void write_run_csv(const RunRecord& rec, const std::string& path);
RunRecord read_run_csv(const std::string& path);

/// Trajectory CSV: t, x_1..x_n, Y_1..Y_q, y_1..y_q (missing records drop
/// their columns). The sidecar (path + ".meta") stores seed and config hash
/// so a reload can verify provenance.
void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          std::uint64_t seed, std::uint64_t config_hash);
Trajectory read_trajectory_csv(const std::string& path, std::uint64_t* seed_out = nullptr,
                               std::uint64_t* config_hash_out = nullptr);

std::string format_double(double v);

}  // namespace ksmc
