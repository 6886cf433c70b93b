#include "ksmc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ksmc/ksfilter.hpp"

namespace ksmc {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

double parse_number(const std::string& context, const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw config_error(context + ": bad number '" + s + "'");
    return v;
}

// "t:ax:ay;t:ax:ay;..." -> acceleration schedule
std::vector<std::pair<double, Vec>> parse_maneuvers(const std::string& spec) {
    std::vector<std::pair<double, Vec>> out;
    std::stringstream ss(spec);
    std::string leg;
    while (std::getline(ss, leg, ';')) {
        if (leg.empty()) continue;
        std::stringstream ls(leg);
        std::string part;
        std::vector<std::string> parts;
        while (std::getline(ls, part, ':')) parts.push_back(part);
        if (parts.size() != 3)
            throw config_error("tr_maneuvers: leg '" + leg + "' is not t:ax:ay");
        Vec a(2);
        a[0] = parse_number("tr_maneuvers", parts[1]);
        a[1] = parse_number("tr_maneuvers", parts[2]);
        out.emplace_back(parse_number("tr_maneuvers", parts[0]), a);
    }
    return out;
}

Vec or_default(const Vec& maybe, const Vec& fallback) {
    return maybe.size() ? maybe : fallback;
}

void fill_param_ranges(BuiltProblem& bp, const ExperimentConfig& cfg,
                       const Vec& lo_default, const Vec& hi_default) {
    const Vec lo = or_default(cfg.init_param_lo, lo_default);
    const Vec hi = or_default(cfg.init_param_hi, hi_default);
    require(lo.size() == hi.size() && lo.size() == bp.aug.n_params(),
            "config: parameter range length does not match the model");
    for (int p = 0; p < lo.size(); ++p) {
        require(lo[p] < hi[p], "config: init_param_lo must be below init_param_hi");
        bp.init.param_ranges.emplace_back(lo[p], hi[p]);
    }
}

}  // namespace

const ObservationModel& BuiltProblem::consumed_obs(const std::string& obs_form) const {
    if (obs_form == "sde") {
        require(has_sde, "this experiment has no integrated observation record");
        return obs_sde;
    }
    require(has_alg, "this experiment has no algebraic observation record");
    return obs_alg;
}

BuiltProblem build_problem(const ExperimentConfig& cfg) {
    cfg.validate();
    BuiltProblem bp;

    if (cfg.experiment == "linear_gaussian") {
        bp.lg = make_linear_gaussian(cfg.lg_a, cfg.lg_q, cfg.lg_r, cfg.lg_x0_mean, cfg.lg_p0);
        bp.has_lg = true;
        bp.truth_model = bp.lg.process;
        bp.filter_model = bp.lg.process;
        bp.obs_sde = bp.lg.obs_sde;
        bp.obs_alg = bp.lg.obs_alg;
        bp.has_sde = bp.has_alg = true;
        Vec m(1), s(1);
        m[0] = cfg.lg_x0_mean;
        s[0] = std::sqrt(cfg.lg_p0);
        bp.truth_x0_mean = m;
        bp.truth_x0_std = s;
        bp.init.state_mean = or_default(cfg.init_mean, m);
        bp.init.state_std = or_default(cfg.init_std, s);
        require(cfg.init_param_lo.size() == 0,
                "config: linear_gaussian has no parameter block");
    } else if (cfg.experiment == "duffing") {
        Vec mu = cfg.duf_mu;
        if (!mu.size()) {
            mu = Vec(3);
            mu << 0.1, 0.05, 0.1;
        }
        bp.aug = make_duffing(cfg.duf_eps1, cfg.duf_eps2, cfg.duf_eps3, cfg.duf_f,
                              cfg.duf_sigma_m, mu);
        bp.augmented = true;
        bp.truth_model = bp.aug.base;
        bp.filter_model = bp.aug.augmented;
        bp.obs_sde = bp.aug.obs_sde;
        bp.obs_alg = bp.aug.obs_alg;
        bp.has_sde = bp.has_alg = true;
        bp.init.state_mean = or_default(cfg.init_mean, Vec::Zero(2));
        bp.init.state_std = or_default(cfg.init_std, Vec::Constant(2, 0.5));
        Vec lo(3), hi(3);
        lo << 20.0, 0.5, 20.0;
        hi << 60.0, 3.0, 60.0;
        fill_param_ranges(bp, cfg, lo, hi);
        bp.truth_x0_mean = bp.init.state_mean;
        bp.truth_x0_std = bp.init.state_std;
    } else if (cfg.experiment == "shear_frame") {
        const Vec K = or_default(cfg.sf_k, Vec::Constant(5, 60.0));
        const Vec C = or_default(cfg.sf_c, Vec::Constant(5, 2.0));
        auto nonlinear =
            cfg.sf_kappa_nl != 0.0 ? cubic_interstorey(cfg.sf_kappa_nl) : nullptr;
        // distinct per-floor frequencies keep all modes excited
        const double amp = cfg.sf_force_amp;
        auto forcing = [amp](double t) {
            Vec f(5);
            for (int j = 0; j < 5; ++j) f[j] = amp * std::sin(kTwoPi * 0.5 * (j + 1) * t);
            return f;
        };
        bp.aug = make_shear_frame(K, C, nonlinear, forcing, cfg.sf_sigma, cfg.sf_sigma_m,
                                  cfg.sf_param_noise);
        bp.augmented = true;
        bp.truth_model = bp.aug.base;
        bp.filter_model = bp.aug.augmented;
        bp.obs_sde = bp.aug.obs_sde;
        bp.obs_alg = bp.aug.obs_alg;
        bp.has_sde = bp.has_alg = true;
        bp.init.state_mean = or_default(cfg.init_mean, Vec::Zero(10));
        bp.init.state_std = or_default(cfg.init_std, Vec::Constant(10, 0.05));
        Vec ref(10);
        ref.head(5) = K;
        ref.tail(5) = C;
        fill_param_ranges(bp, cfg, 0.75 * ref, 1.25 * ref);
        bp.truth_x0_mean = Vec::Zero(10);  // starts at rest, driven by the forcing
        bp.truth_x0_std = Vec::Zero(10);
    } else {  // tracker
        Vec x0 = cfg.tr_x0;
        if (!x0.size()) {
            x0 = Vec(4);
            x0 << 0.5, 3.0, 1.0, 1.0;
        }
        const Vec observer = or_default(cfg.tr_observer, Vec::Zero(2));
        std::string mspec = cfg.tr_maneuvers;
        if (mspec.empty()) mspec = "20:-40:40;30:25:-25;60:25:-25;80:-30:30";
        ObservationNoise noise;
        noise.relative_std = cfg.tr_rel_std;
        if (cfg.tr_bearing_std > 0.0 || cfg.tr_range_std > 0.0) {
            noise.fixed_std = Vec::Zero(2);
            noise.fixed_std[0] = cfg.tr_bearing_std;  // absolute bearing noise, radians
            noise.fixed_std[1] = cfg.tr_range_std;    // absolute range noise
        }
        if (cfg.tr_glint_gamma > 0.0) {
            noise.kind = ObservationNoise::Kind::glint_mixture;
            noise.glint_gamma = cfg.tr_glint_gamma;
            noise.glint_scale = cfg.tr_glint_scale;
        }
        TrackerProblem tr = make_tracker(cfg.dt, x0, parse_maneuvers(mspec), cfg.tr_q,
                                         observer, noise);
        bp.truth_model = tr.truth_process;
        bp.filter_model = tr.filter_process;
        bp.obs_alg = tr.obs;
        bp.has_alg = true;
        bp.init.state_mean = or_default(cfg.init_mean, x0);
        bp.init.state_std = or_default(cfg.init_std, Vec::Constant(4, 0.5));
        bp.truth_x0_mean = x0;
        bp.truth_x0_std = Vec::Zero(4);
        require(cfg.init_param_lo.size() == 0, "config: tracker has no parameter block");
    }
    return bp;
}

Vec draw_truth_x0(const BuiltProblem& bp, const RngStream& rng) {
    Vec x0(bp.truth_x0_mean.size());
    for (int c = 0; c < x0.size(); ++c)
        x0[c] = bp.truth_x0_mean[c] +
                bp.truth_x0_std[c] * rng.normal(RngDomain::truth_init, 0, 0, c);
    return x0;
}

namespace {

RunRecord run_one_filter(const std::string& name, const BuiltProblem& bp,
                         const ExperimentConfig& cfg, const ObservationModel& obs,
                         const Trajectory& traj, const std::vector<Vec>* padded,
                         const RngStream& rng) {
    if (name == "ks") {
        KsConfig kc = cfg.ks;
        kc.dt = traj.dt;
        return ks_filter_run(traj, bp.filter_model, obs, kc, bp.init, rng, padded);
    }
    if (name == "enkf") {
        EnkfConfig ec;
        ec.N = cfg.enkf_N;
        ec.dt = traj.dt;
        ec.jitter = cfg.enkf_jitter;
        return enkf_run(traj, bp.filter_model, obs, ec, bp.init, rng, padded);
    }
    if (name == "abs1" || name == "abs2") {
        AbsConfig ac;
        ac.N = cfg.abs_N;
        ac.dt = traj.dt;
        ac.likelihood = name == "abs1" ? AbsConfig::Likelihood::algebraic
                                       : AbsConfig::Likelihood::increment;
        ac.degeneracy_fraction = cfg.abs_degeneracy_fraction;
        return abs_run(traj, bp.filter_model, obs, ac, bp.init, rng, padded);
    }
    require(name == "kalman", "unknown filter name");
    return kalman_run(bp.lg, traj);
}

}  // namespace

CampaignResult run_campaign(const ExperimentConfig& cfg, int jobs, bool truth_only) {
    const BuiltProblem bp = build_problem(cfg);
    const ObservationModel* obs = truth_only ? nullptr : &bp.consumed_obs(cfg.obs_form);

    CampaignResult res;
    res.cfg = cfg;
    for (int s = 0; s < cfg.n_seeds; ++s) res.seeds.push_back(cfg.seed + s);
    res.truths.resize(cfg.n_seeds);
    if (!truth_only)
        for (const auto& name : cfg.filters)
            res.filters.push_back({name, std::vector<RunRecord>(cfg.n_seeds)});

    TruthOptions opt;
    opt.T = cfg.T;
    opt.dt = cfg.dt;
    opt.refine = cfg.refine;
    opt.with_obs_noise = true;

    std::atomic<int> next_seed{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            const int s = next_seed.fetch_add(1);
            if (s >= cfg.n_seeds) return;
            try {
                RngStream rng(res.seeds[s]);
                const Vec x0 = draw_truth_x0(bp, rng);
                Trajectory traj =
                    generate_truth(bp.truth_model, x0, bp.has_sde ? &bp.obs_sde : nullptr,
                                   bp.has_alg ? &bp.obs_alg : nullptr, opt, rng);
                std::vector<Vec> padded;
                if (!truth_only && bp.augmented) {
                    padded.reserve(traj.states.size());
                    for (const auto& st : traj.states)
                        padded.push_back(bp.aug.pad_truth(st));
                }
                for (std::size_t fi = 0; fi < res.filters.size(); ++fi)
                    res.filters[fi].runs[s] =
                        run_one_filter(res.filters[fi].name, bp, cfg, *obs, traj,
                                       bp.augmented ? &padded : nullptr, rng);
                res.truths[s] = std::move(traj);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int workers = std::clamp(jobs, 1, cfg.n_seeds);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return res;
}

std::uint64_t write_campaign(const CampaignResult& result, const std::string& out_dir,
                             const std::string& seed_source) {
    if (result.truths.empty())
        throw io_error("write_campaign: empty record list, nothing written");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory '" + out_dir + "'");

    ConfigMap manifest = result.cfg.to_map();
    const std::uint64_t chash = config_hash(manifest);

    std::vector<std::string> files;
    for (std::size_t s = 0; s < result.truths.size(); ++s) {
        const std::string name = "truth_seed" + std::to_string(result.seeds[s]) + ".csv";
        write_trajectory_csv(result.truths[s], out_dir + "/" + name, result.seeds[s], chash);
        files.push_back(name);
    }
    for (const auto& fr : result.filters)
        for (std::size_t s = 0; s < fr.runs.size(); ++s) {
            const std::string name =
                fr.name + "_seed" + std::to_string(result.seeds[s]) + ".csv";
            write_run_csv(fr.runs[s], out_dir + "/" + name);
            files.push_back(name);
        }
    if (!result.filters.empty()) {
        const CampaignSummary summary = summarize(result);
        std::ofstream out(out_dir + "/summary.csv");
        if (!out) throw io_error("cannot write summary.csv");
        out << "filter,rmse,tail_rmse,whiteness,mean_ess,degeneracy_events\n";
        char buf[200];
        for (const auto& fs : summary.filters) {
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%d\n",
                          fs.name.c_str(), fs.rmse_total, fs.tail_rmse_total,
                          fs.whiteness_fraction, fs.mean_ess_fraction,
                          fs.degeneracy_events);
            out << buf;
        }
        if (!out) throw io_error("write failed for summary.csv");
        files.push_back("summary.csv");
    }

    manifest.set("schema_version", "1");
    manifest.set("ksmc_version", "0.1.0");
    manifest.set_u64("config_hash", chash);
    manifest.set("seed_source", seed_source);
    std::string seeds_str, files_str;
    for (std::size_t s = 0; s < result.seeds.size(); ++s) {
        if (s) seeds_str += ",";
        seeds_str += std::to_string(result.seeds[s]);
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (i) files_str += ",";
        files_str += files[i];
    }
    manifest.set("seeds_used", seeds_str);
    manifest.set("files", files_str);
    save_config(manifest, out_dir + "/manifest.cfg");
    return fnv1a(serialize_config(manifest));
}

CampaignSummary summarize(const CampaignResult& result) {
    bool any = false;
    for (const auto& fr : result.filters)
        if (!fr.runs.empty()) any = true;
    if (!any) throw insufficient_data("summarize: no filter runs");

    CampaignSummary summary;
    for (const auto& fr : result.filters) {
        if (fr.runs.empty()) continue;
        FilterSummary fs;
        fs.name = fr.name;
        const int R = static_cast<int>(fr.runs.size());
        const int n = fr.runs[0].dim();
        const int M = fr.runs[0].steps();
        const int tail_start = 3 * M / 4;
        fs.rmse_by_component = Vec::Zero(n);
        double wh_sum = 0.0;
        int wh_count = 0;
        double ess_sum = 0.0;
        int ess_count = 0;
        for (const auto& run : fr.runs) {
            run.validate();
            for (int c = 0; c < n; ++c)
                fs.rmse_by_component[c] +=
                    std::sqrt((run.estimates.col(c) - run.truth.col(c)).squaredNorm() / M);
            fs.rmse_total += rmse(run.estimates, run.truth);
            fs.tail_rmse_total +=
                rmse(run.estimates.bottomRows(M - tail_start), run.truth.bottomRows(M - tail_start));
            try {
                wh_sum += whiteness_pass_fraction(run.ks_stat);
                ++wh_count;
            } catch (const insufficient_data&) {
            }
            if (!run.ess.empty()) {
                double m = 0.0;
                for (double e : run.ess) m += e;
                ess_sum += m / run.ess.size() / result.cfg.abs_N;
                ++ess_count;
            }
            fs.degeneracy_events += run.degeneracy_events;
        }
        fs.rmse_by_component /= R;
        fs.rmse_total /= R;
        fs.tail_rmse_total /= R;
        fs.whiteness_fraction = wh_count ? wh_sum / wh_count : std::nan("");
        fs.mean_ess_fraction = ess_count ? ess_sum / ess_count : std::nan("");
        summary.filters.push_back(std::move(fs));
    }
    return summary;
}

std::string render_summary(const CampaignSummary& summary) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-8s %12s %12s %10s %10s %6s\n", "filter",
                  "rmse", "tail_rmse", "whiteness", "mean_ess", "degen");
    out += buf;
    for (const auto& fs : summary.filters) {
        std::snprintf(buf, sizeof(buf), "%-8s %12.5g %12.5g %10.3f %10.4g %6d\n",
                      fs.name.c_str(), fs.rmse_total, fs.tail_rmse_total,
                      fs.whiteness_fraction, fs.mean_ess_fraction, fs.degeneracy_events);
        out += buf;
    }
    return out;
}

namespace {

std::vector<double> scalar_increments(const Trajectory& traj) {
    std::vector<double> dY(traj.steps());
    for (int i = 0; i < traj.steps(); ++i) dY[i] = traj.obs_Y[i + 1][0] - traj.obs_Y[i][0];
    return dY;
}

}  // namespace

SweepResult n_sweep(const ExperimentConfig& cfg, const std::vector<int>& ensemble_sizes,
                    int sweep_seeds) {
    require(sweep_seeds >= 1, "n_sweep: need at least one seed");
    const BuiltProblem bp = build_problem(cfg);
    require(bp.has_lg, "rates: sweeps are defined on the linear_gaussian experiment");

    TruthOptions opt;
    opt.T = cfg.T;
    opt.dt = cfg.dt;
    opt.refine = cfg.refine;

    SweepResult res;
    for (int N : ensemble_sizes) res.levels.push_back(static_cast<double>(N));
    res.errors.assign(ensemble_sizes.size(), 0.0);

    for (int s = 0; s < sweep_seeds; ++s) {
        const RngStream rng(cfg.seed + s);
        const Vec x0 = draw_truth_x0(bp, rng);
        const Trajectory traj =
            generate_truth(bp.truth_model, x0, &bp.obs_sde, nullptr, opt, rng);
        const KalmanPath oracle = kalman_increment_filter(bp.lg, scalar_increments(traj), traj.dt);
        Mat ref(traj.steps(), 1);
        for (int i = 0; i < traj.steps(); ++i) ref(i, 0) = oracle.means[i];
        for (std::size_t li = 0; li < ensemble_sizes.size(); ++li) {
            KsConfig kc = cfg.ks;
            kc.N = ensemble_sizes[li];
            kc.dt = traj.dt;
            const RunRecord rec =
                ks_filter_run(traj, bp.filter_model, bp.obs_sde, kc, bp.init, rng);
            res.errors[li] += rmse(rec.estimates, ref);
        }
    }
    for (auto& e : res.errors) e /= sweep_seeds;
    res.fit = rate_fit(res.levels, res.errors);
    return res;
}

SweepResult dt_sweep(const ExperimentConfig& cfg, const std::vector<double>& dts,
                     int sweep_seeds) {
    require(sweep_seeds >= 1, "dt_sweep: need at least one seed");
    require(!dts.empty(), "dt_sweep: empty level list");
    const BuiltProblem bp = build_problem(cfg);
    require(bp.has_lg, "rates: sweeps are defined on the linear_gaussian experiment");

    const double dt_min = *std::min_element(dts.begin(), dts.end());
    const int substeps = 8;  // reference filter runs this much finer than the finest level
    const double dt0 = dt_min / substeps;
    const int refine0 = std::max(1, cfg.refine / substeps);
    std::vector<int> strides;
    for (double dt : dts) {
        const long k = std::lround(dt / dt0);
        require(k >= 1 && std::abs(k * dt0 - dt) < 1e-9, "dt_sweep: levels must be multiples of the finest");
        const double m = cfg.T / dt;
        require(std::abs(m - std::lround(m)) < 1e-9, "dt_sweep: t_final must be a multiple of every level");
        strides.push_back(static_cast<int>(k));
    }

    TruthOptions opt;
    opt.T = cfg.T;
    opt.dt = dt0;
    opt.refine = refine0;

    SweepResult res;
    res.levels = dts;
    res.errors.assign(dts.size(), 0.0);

    for (int s = 0; s < sweep_seeds; ++s) {
        const RngStream rng(cfg.seed + s);
        const Vec x0 = draw_truth_x0(bp, rng);
        const Trajectory fine =
            generate_truth(bp.truth_model, x0, &bp.obs_sde, nullptr, opt, rng);
        const KalmanPath oracle = kalman_increment_filter(bp.lg, scalar_increments(fine), dt0);
        for (std::size_t li = 0; li < dts.size(); ++li) {
            const int k = strides[li];
            const Trajectory sub = subsample(fine, k);
            KsConfig kc = cfg.ks;
            kc.dt = sub.dt;
            const RunRecord rec =
                ks_filter_run(sub, bp.filter_model, bp.obs_sde, kc, bp.init, rng);
            Mat ref(sub.steps(), 1);
            for (int i = 0; i < sub.steps(); ++i)
                ref(i, 0) = oracle.means[static_cast<std::size_t>(i + 1) * k - 1];
            res.errors[li] += rmse(rec.estimates, ref);
        }
    }
    for (auto& e : res.errors) e /= sweep_seeds;
    res.fit = rate_fit(res.levels, res.errors);
    return res;
}

}  // namespace ksmc
