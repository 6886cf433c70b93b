#include "ksmc/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ksmc/record.hpp"

namespace ksmc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    char* end = nullptr;
    const double x = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0')
        throw config_error("config: key '" + key + "' is not a number: '" + v + "'");
    return x;
}

long long parse_int(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    char* end = nullptr;
    const long long x = std::strtoll(t.c_str(), &end, 10);
    if (end == t.c_str() || *end != '\0')
        throw config_error("config: key '" + key + "' is not an integer: '" + v + "'");
    return x;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

void ConfigMap::set(const std::string& key, const std::string& value) {
    require(!key.empty(), "config: empty key");
    for (auto& [k, v] : entries_)
        if (k == key) {
            v = value;
            return;
        }
    entries_.emplace_back(key, value);
}

void ConfigMap::set_double(const std::string& key, double value) {
    set(key, format_double(value));
}
void ConfigMap::set_int(const std::string& key, long long value) {
    set(key, std::to_string(value));
}
void ConfigMap::set_u64(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
}
void ConfigMap::set_bool(const std::string& key, bool value) {
    set(key, value ? "true" : "false");
}
void ConfigMap::set_vector(const std::string& key, const Vec& value) {
    std::string s;
    for (int i = 0; i < value.size(); ++i) {
        if (i) s += ",";
        s += format_double(value[i]);
    }
    set(key, s);
}

const std::string* ConfigMap::find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) {
            touched_.insert(key);
            return &v;
        }
    return nullptr;
}

bool ConfigMap::has(const std::string& key) const { return find(key) != nullptr; }

std::string ConfigMap::get_string(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw config_error("config: missing required key '" + key + "'");
    return *v;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    return v ? parse_double(key, *v) : fallback;
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
    const std::string* v = find(key);
    return v ? parse_int(key, *v) : fallback;
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    const long long x = parse_int(key, *v);
    if (x < 0) throw config_error("config: key '" + key + "' must be non-negative");
    return static_cast<std::uint64_t>(x);
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    const std::string t = trim(*v);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    throw config_error("config: key '" + key + "' is not a boolean: '" + *v + "'");
}

Vec ConfigMap::get_vector(const std::string& key, const Vec& fallback, int expected) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    const auto parts = split_list(*v);
    require(!parts.empty(), "config: key '" + key + "' is an empty list");
    Vec out(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i)
        out[i] = parse_double(key, parts[i]);
    if (expected > 1 && out.size() == 1) {
        Vec b(expected);
        b.setConstant(out[0]);
        return b;
    }
    if (expected > 0 && out.size() != expected)
        throw config_error("config: key '" + key + "' needs " + std::to_string(expected) +
                           " entries, got " + std::to_string(out.size()));
    return out;
}

std::vector<std::string> ConfigMap::untouched_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (!touched_.count(k)) out.push_back(k);
    return out;
}

void ConfigMap::require_all_touched() const {
    const auto unknown = untouched_keys();
    if (unknown.empty()) return;
    std::string msg = "config: unknown keys:";
    for (const auto& k : unknown) msg += " '" + k + "'";
    throw config_error(msg);
}

ConfigMap parse_config(const std::string& text) {
    ConfigMap cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config: line " + std::to_string(lineno) + " has no '='");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw config_error("config: line " + std::to_string(lineno) + " has an empty key");
        for (const auto& [k, v] : cfg.entries())
            if (k == key)
                throw config_error("config: duplicate key '" + key + "' at line " +
                                   std::to_string(lineno));
        cfg.set(key, value);
    }
    return cfg;
}

ConfigMap load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ConfigMap& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg.entries()) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

void save_config(const ConfigMap& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("config: cannot write '" + path + "'");
    out << serialize_config(cfg);
    if (!out) throw io_error("config: write failed for '" + path + "'");
}

std::uint64_t config_hash(const ConfigMap& cfg) { return fnv1a(serialize_config(cfg)); }

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
    ExperimentConfig c;
    c.experiment = map.get_string("experiment");
    c.T = map.get_double("t_final_seconds", c.T);
    c.dt = map.get_double("dt_seconds", c.dt);
    c.refine = static_cast<int>(map.get_int("refine", c.refine));
    c.seed = map.get_u64("seed", c.seed);
    c.n_seeds = static_cast<int>(map.get_int("n_seeds", c.n_seeds));
    if (map.has("filters")) c.filters = split_list(map.get_string("filters"));
    c.obs_form = map.get_string("obs_form", c.obs_form);

    c.ks.N = static_cast<int>(map.get_int("ks_n", c.ks.N));
    c.ks.kappa = static_cast<int>(map.get_int("ks_kappa", c.ks.kappa));
    c.ks.k_max = static_cast<int>(map.get_int("ks_k_max", c.ks.k_max));
    const std::string sched = map.get_string("ks_schedule", "exponential");
    if (sched == "exponential")
        c.ks.schedule = ScheduleState::Variant::exponential;
    else if (sched == "lam")
        c.ks.schedule = ScheduleState::Variant::lam;
    else
        throw config_error("config: ks_schedule must be 'exponential' or 'lam'");
    c.ks.lam_lambda = map.get_double("ks_lam_lambda", c.ks.lam_lambda);
    const std::string bmode = map.get_string("ks_beta1_mode", "fixed");
    if (bmode == "fixed")
        c.ks.beta1_mode = KsConfig::Beta1Mode::fixed;
    else if (bmode == "linesearch")
        c.ks.beta1_mode = KsConfig::Beta1Mode::linesearch;
    else
        throw config_error("config: ks_beta1_mode must be 'fixed' or 'linesearch'");
    c.ks.beta1_value = map.get_double("ks_beta1_value", c.ks.beta1_value);
    c.ks.beta1_alpha = map.get_double("ks_beta1_alpha", c.ks.beta1_alpha);
    c.ks.beta1_rho_lo = map.get_double("ks_beta1_rho_lo", c.ks.beta1_rho_lo);
    c.ks.beta1_rho_hi = map.get_double("ks_beta1_rho_hi", c.ks.beta1_rho_hi);
    c.ks.beta1_evals = static_cast<int>(map.get_int("ks_beta1_evals", c.ks.beta1_evals));
    c.ks.final_correction = map.get_bool("ks_final_correction", c.ks.final_correction);

    c.enkf_N = static_cast<int>(map.get_int("enkf_n", c.enkf_N));
    c.enkf_jitter = map.get_double("enkf_jitter", c.enkf_jitter);
    c.abs_N = static_cast<int>(map.get_int("abs_n", c.abs_N));
    c.abs_degeneracy_fraction =
        map.get_double("abs_degeneracy_fraction", c.abs_degeneracy_fraction);

    if (c.experiment == "linear_gaussian") {
        c.lg_a = map.get_double("lg_a", c.lg_a);
        c.lg_q = map.get_double("lg_q", c.lg_q);
        c.lg_r = map.get_double("lg_r", c.lg_r);
        c.lg_x0_mean = map.get_double("lg_x0_mean", c.lg_x0_mean);
        c.lg_p0 = map.get_double("lg_p0", c.lg_p0);
    } else if (c.experiment == "duffing") {
        c.duf_eps1 = map.get_double("duf_eps1", c.duf_eps1);
        c.duf_eps2 = map.get_double("duf_eps2", c.duf_eps2);
        c.duf_eps3 = map.get_double("duf_eps3", c.duf_eps3);
        c.duf_f = map.get_double("duf_f", c.duf_f);
        c.duf_sigma_m = map.get_double("duf_sigma_m", c.duf_sigma_m);
        c.duf_mu = map.get_vector("duf_mu", c.duf_mu, 3);
    } else if (c.experiment == "shear_frame") {
        c.sf_k = map.get_vector("sf_k", c.sf_k, 5);
        c.sf_c = map.get_vector("sf_c", c.sf_c, 5);
        c.sf_kappa_nl = map.get_double("sf_kappa_nl", c.sf_kappa_nl);
        c.sf_sigma = map.get_double("sf_sigma", c.sf_sigma);
        c.sf_sigma_m = map.get_double("sf_sigma_m", c.sf_sigma_m);
        c.sf_force_amp = map.get_double("sf_force_amp", c.sf_force_amp);
        c.sf_param_noise = map.get_vector("sf_param_noise", c.sf_param_noise, 10);
    } else if (c.experiment == "tracker") {
        c.tr_q = map.get_double("tr_q", c.tr_q);
        c.tr_rel_std = map.get_double("tr_rel_std", c.tr_rel_std);
        c.tr_bearing_std = map.get_double("tr_bearing_std", c.tr_bearing_std);
        c.tr_range_std = map.get_double("tr_range_std", c.tr_range_std);
        c.tr_glint_gamma = map.get_double("tr_glint_gamma", c.tr_glint_gamma);
        c.tr_glint_scale = map.get_double("tr_glint_scale", c.tr_glint_scale);
        c.tr_x0 = map.get_vector("tr_x0", c.tr_x0, 4);
        c.tr_observer = map.get_vector("tr_observer", c.tr_observer, 2);
        c.tr_maneuvers = map.get_string("tr_maneuvers", c.tr_maneuvers);
    }

    c.init_mean = map.get_vector("init_mean", c.init_mean);
    c.init_std = map.get_vector("init_std", c.init_std);
    c.init_param_lo = map.get_vector("init_param_lo", c.init_param_lo);
    c.init_param_hi = map.get_vector("init_param_hi", c.init_param_hi);

    map.require_all_touched();
    c.validate();
    return c;
}

ConfigMap ExperimentConfig::to_map() const {
    ConfigMap m;
    m.set("experiment", experiment);
    m.set_double("t_final_seconds", T);
    m.set_double("dt_seconds", dt);
    m.set_int("refine", refine);
    m.set_u64("seed", seed);
    m.set_int("n_seeds", n_seeds);
    std::string fl;
    for (std::size_t i = 0; i < filters.size(); ++i) {
        if (i) fl += ",";
        fl += filters[i];
    }
    m.set("filters", fl);
    m.set("obs_form", obs_form);

    m.set_int("ks_n", ks.N);
    m.set_int("ks_kappa", ks.kappa);
    m.set_int("ks_k_max", ks.k_max);
    m.set("ks_schedule",
          ks.schedule == ScheduleState::Variant::exponential ? "exponential" : "lam");
    m.set_double("ks_lam_lambda", ks.lam_lambda);
    m.set("ks_beta1_mode",
          ks.beta1_mode == KsConfig::Beta1Mode::fixed ? "fixed" : "linesearch");
    m.set_double("ks_beta1_value", ks.beta1_value);
    m.set_double("ks_beta1_alpha", ks.beta1_alpha);
    m.set_double("ks_beta1_rho_lo", ks.beta1_rho_lo);
    m.set_double("ks_beta1_rho_hi", ks.beta1_rho_hi);
    m.set_int("ks_beta1_evals", ks.beta1_evals);
    m.set_bool("ks_final_correction", ks.final_correction);

    m.set_int("enkf_n", enkf_N);
    m.set_double("enkf_jitter", enkf_jitter);
    m.set_int("abs_n", abs_N);
    m.set_double("abs_degeneracy_fraction", abs_degeneracy_fraction);

    if (experiment == "linear_gaussian") {
        m.set_double("lg_a", lg_a);
        m.set_double("lg_q", lg_q);
        m.set_double("lg_r", lg_r);
        m.set_double("lg_x0_mean", lg_x0_mean);
        m.set_double("lg_p0", lg_p0);
    } else if (experiment == "duffing") {
        m.set_double("duf_eps1", duf_eps1);
        m.set_double("duf_eps2", duf_eps2);
        m.set_double("duf_eps3", duf_eps3);
        m.set_double("duf_f", duf_f);
        m.set_double("duf_sigma_m", duf_sigma_m);
        if (duf_mu.size()) m.set_vector("duf_mu", duf_mu);
    } else if (experiment == "shear_frame") {
        if (sf_k.size()) m.set_vector("sf_k", sf_k);
        if (sf_c.size()) m.set_vector("sf_c", sf_c);
        m.set_double("sf_kappa_nl", sf_kappa_nl);
        m.set_double("sf_sigma", sf_sigma);
        m.set_double("sf_sigma_m", sf_sigma_m);
        m.set_double("sf_force_amp", sf_force_amp);
        if (sf_param_noise.size()) m.set_vector("sf_param_noise", sf_param_noise);
    } else if (experiment == "tracker") {
        m.set_double("tr_q", tr_q);
        m.set_double("tr_rel_std", tr_rel_std);
        m.set_double("tr_bearing_std", tr_bearing_std);
        m.set_double("tr_range_std", tr_range_std);
        m.set_double("tr_glint_gamma", tr_glint_gamma);
        m.set_double("tr_glint_scale", tr_glint_scale);
        if (tr_x0.size()) m.set_vector("tr_x0", tr_x0);
        if (tr_observer.size()) m.set_vector("tr_observer", tr_observer);
        if (!tr_maneuvers.empty()) m.set("tr_maneuvers", tr_maneuvers);
    }

    if (init_mean.size()) m.set_vector("init_mean", init_mean);
    if (init_std.size()) m.set_vector("init_std", init_std);
    if (init_param_lo.size()) m.set_vector("init_param_lo", init_param_lo);
    if (init_param_hi.size()) m.set_vector("init_param_hi", init_param_hi);
    return m;
}

void ExperimentConfig::validate() const {
    const bool known = experiment == "linear_gaussian" || experiment == "duffing" ||
                       experiment == "shear_frame" || experiment == "tracker";
    require(known, "config: unknown experiment '" + experiment + "'");
    require(T > 0, "config: t_final must be positive");
    require(dt > 0, "config: dt must be positive");
    require(refine >= 1, "config: refine must be >= 1");
    require(n_seeds >= 1, "config: n_seeds must be >= 1");
    require(!filters.empty(), "config: filters list is empty");
    for (const auto& f : filters) {
        const bool ok = f == "ks" || f == "enkf" || f == "abs1" || f == "abs2" || f == "kalman";
        require(ok, "config: unknown filter '" + f + "'");
        if (f == "kalman")
            require(experiment == "linear_gaussian",
                    "config: the kalman reference needs the linear_gaussian experiment");
    }
    require(obs_form == "sde" || obs_form == "algebraic",
            "config: obs_form must be 'sde' or 'algebraic'");
    require(init_param_lo.size() == init_param_hi.size(),
            "config: init_param_lo and init_param_hi must have equal length");
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return ExperimentConfig::from_map(load_config(path));
}

}  // namespace ksmc
