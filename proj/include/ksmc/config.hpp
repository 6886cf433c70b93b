#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ksmc/common.hpp"
#include "ksmc/ksfilter.hpp"

namespace ksmc {

/// Flat key=value file: one pair per line, '#' starts a comment, blank lines
/// ignored. Keys are unique; insertion order is preserved so serialization
/// round-trips. Reads are tracked so a caller can reject unknown keys.
class ConfigMap {
  public:
    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_int(const std::string& key, long long value);
    void set_u64(const std::string& key, std::uint64_t value);
    void set_bool(const std::string& key, bool value);
    void set_vector(const std::string& key, const Vec& value);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated doubles. A single value broadcasts to `expected` when
    /// expected > 1; otherwise the length must match `expected` (0 = any).
    Vec get_vector(const std::string& key, const Vec& fallback, int expected = 0) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }
    /// Keys never read through a getter; used to reject typos in files.
    std::vector<std::string> untouched_keys() const;
    void require_all_touched() const;

  private:
    const std::string* find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> entries_;
    mutable std::set<std::string> touched_;
};

ConfigMap parse_config(const std::string& text);
ConfigMap load_config(const std::string& path);
std::string serialize_config(const ConfigMap& cfg);
void save_config(const ConfigMap& cfg, const std::string& path);

/// FNV-1a over the canonical serialization; stable across platforms.
std::uint64_t config_hash(const ConfigMap& cfg);

/// Typed campaign description shared by the CLI and the acceptance harness.
/// Model-specific blocks are read only for the experiment they belong to.
struct ExperimentConfig {
    std::string experiment;  // linear_gaussian | duffing | shear_frame | tracker
    double T = 1.0;
    double dt = 0.01;
    int refine = 32;
    std::uint64_t seed = 1;
    int n_seeds = 1;
    std::vector<std::string> filters = {"ks"};  // ks, enkf, abs1, abs2, kalman
    std::string obs_form = "sde";               // sde | algebraic

    KsConfig ks;  // ks.dt is filled from dt at run time
    int enkf_N = 200;
    double enkf_jitter = 0.0;
    int abs_N = 500;
    double abs_degeneracy_fraction = 0.05;  // abs1/abs2 filter names pick the likelihood

    double lg_a = -1.0, lg_q = 1.0, lg_r = 1.0, lg_x0_mean = 0.0, lg_p0 = 1.0;

    double duf_eps1 = 0.25, duf_eps2 = 1.0, duf_eps3 = 5.0;
    double duf_f = 0.5, duf_sigma_m = 0.2;
    Vec duf_mu;  // size 3

    Vec sf_k, sf_c;  // size 5
    double sf_kappa_nl = 0.0, sf_sigma = 0.05, sf_sigma_m = 0.01, sf_force_amp = 1.0;
    Vec sf_param_noise;  // size 10, defaults to zeros

    double tr_q = 1.0, tr_rel_std = 0.05, tr_bearing_std = 0.05, tr_range_std = 0.0;
    double tr_glint_gamma = 0.0, tr_glint_scale = 100.0;
    Vec tr_x0, tr_observer;
    std::string tr_maneuvers;  // "t:ax:ay;t:ax:ay;..."

    Vec init_mean, init_std;          // state block of the initial ensemble
    Vec init_param_lo, init_param_hi; // uniform parameter ranges (sysid only)

    static ExperimentConfig from_map(const ConfigMap& map);
    ConfigMap to_map() const;
    void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace ksmc
