#include "ksmc/ksfilter.hpp"

#include <cmath>

#include "ksmc/diagnostics.hpp"

namespace ksmc {

void KsConfig::validate() const {
    require(N >= 2, "ks config: N must be >= 2");
    require(kappa >= 2, "ks config: kappa must be >= 2");
    const int km = resolved_k_max();
    require(km >= 1 && km < kappa, "ks config: k_max must satisfy 1 <= k_max < kappa");
    require(dt > 0, "ks config: dt must be positive");
    if (beta1_mode == Beta1Mode::fixed)
        require(beta1_value > 0, "ks config: beta1 must be positive");
    require(beta1_alpha > 0, "ks config: beta1 alpha must be positive");
    require(beta1_rho_lo >= 0 && beta1_rho_hi > beta1_rho_lo,
            "ks config: beta1 search interval invalid");
    require(beta1_evals >= 10, "ks config: beta1 search needs >= 10 evaluations");
    require(lam_lambda > 0, "ks config: lam lambda must be positive");
}

Mat sample_initial_ensemble(const InitialEnsemble& init, int N, const RngStream& rng) {
    require(N >= 2, "initial ensemble: N must be >= 2");
    const int ns = static_cast<int>(init.state_mean.size());
    const int np = static_cast<int>(init.param_ranges.size());
    require(init.state_std.size() == ns, "initial ensemble: state std dimension mismatch");
    Mat ens(N, ns + np);
    for (int j = 0; j < N; ++j) {
        for (int c = 0; c < ns; ++c)
            ens(j, c) = init.state_mean[c] +
                        init.state_std[c] * rng.normal(RngDomain::ensemble_init, 0, j, c);
        for (int p = 0; p < np; ++p) {
            const auto& [lo, hi] = init.param_ranges[p];
            ens(j, ns + p) = lo + (hi - lo) * rng.uniform(RngDomain::ensemble_init, 1, j, p);
        }
    }
    return ens;
}

PredictResult predict(const Mat& particles, const ProcessModel& model, double t,
                      double dt, long time_index, const RngStream& rng) {
    const int N = static_cast<int>(particles.rows());
    const int m = model.dim_noise;
    const double sq = std::sqrt(dt);
    PredictResult out;
    out.particles.resize(N, particles.cols());
    out.dB.resize(N, m);
    for (int j = 0; j < N; ++j) {
        for (int c = 0; c < m; ++c)
            out.dB(j, c) = sq * rng.normal(RngDomain::filter_predict, time_index, j, c);
        out.particles.row(j) =
            em_step(model, particles.row(j), t, dt, out.dB.row(j), time_index, j).transpose();
    }
    return out;
}

Mat observe_all(const Mat& particles, const ObservationModel& obs, double t) {
    const int N = static_cast<int>(particles.rows());
    Mat H(N, obs.dim_obs);
    for (int j = 0; j < N; ++j)
        H.row(j) = obs.observe(particles.row(j), t).transpose();
    return H;
}

Mat compute_gain(const Mat& particles, const Mat& H) {
    const double N = static_cast<double>(particles.rows());
    Vec mx = particles.colwise().mean();
    Vec mh = H.colwise().mean();
    return (particles.transpose() * H) / N - mx * mh.transpose();
}

Vec observation_channel_scales(const ObservationModel& obs, const Vec& dY, double dt) {
    if (obs.form != ObservationModel::Form::algebraic)
        return Vec::Ones(obs.dim_obs);
    const Vec z = dY / dt;
    const Mat cov = obs.noise.covariance_at(z);
    // marginal noise std; mixture channels count the wide component too
    double inflate = 1.0;
    if (obs.noise.kind == ObservationNoise::Kind::glint_mixture)
        inflate = (1.0 - obs.noise.glint_gamma) + obs.noise.glint_gamma * obs.noise.glint_scale;
    Vec s(obs.dim_obs);
    for (int c = 0; c < obs.dim_obs; ++c)
        s[c] = std::max(std::sqrt(cov(c, c) * inflate), 1e-12);
    return s;
}

Mat increment_residuals(const ObservationModel& obs, const Vec& dY, const Mat& H,
                        double dt) {
    const int N = static_cast<int>(H.rows());
    Mat R(N, H.cols());
    if (obs.form == ObservationModel::Form::algebraic) {
        const Vec z = dY / dt;
        const Vec s = observation_channel_scales(obs, dY, dt);
        for (int j = 0; j < N; ++j) {
            Vec r = observation_residual(obs, z, H.row(j)) * dt;
            R.row(j) = (r.array() / s.array()).transpose();
        }
    } else {
        for (int j = 0; j < N; ++j)
            R.row(j) = (dY - H.row(j).transpose() * dt).transpose();
    }
    return R;
}

Mat initial_update(const Mat& particles, const Mat& gain, const Mat& residuals) {
    return particles + residuals * gain.transpose();
}

namespace {

double beta1_objective(const Vec& mean_state, const Vec& mean_update, double rho,
                       const Vec& dY, double t, double dt, const ObservationModel& obs) {
    const Vec x = mean_state + (1.0 + rho) * mean_update;
    const Vec h = obs.observe(x, t);
    Mat H(1, h.size());
    H.row(0) = h.transpose();
    return increment_residuals(obs, dY, H, dt).row(0).norm();
}

}  // namespace

Beta1Choice select_beta1(const Vec& mean_state, const Vec& mean_update, const Vec& dY,
                         double t, double dt, const ObservationModel& obs,
                         const KsConfig& cfg) {
    auto f = [&](double rho) {
        return beta1_objective(mean_state, mean_update, rho, dY, t, dt, obs);
    };
    const double lo = cfg.beta1_rho_lo, hi = cfg.beta1_rho_hi;
    int budget = cfg.beta1_evals;

    // coarse sweep, then golden-section refinement inside the best bracket
    const int ngrid = std::max(5, cfg.beta1_evals / 4);
    std::vector<double> xs(ngrid), ys(ngrid);
    int best = 0;
    for (int i = 0; i < ngrid; ++i) {
        xs[i] = lo + (hi - lo) * i / (ngrid - 1);
        ys[i] = f(xs[i]);
        if (ys[i] < ys[best]) best = i;
    }
    budget -= ngrid;

    double ymin = ys[best], ymax = ys[0];
    for (double y : ys) ymax = std::max(ymax, y);
    Beta1Choice out;
    if (mean_update.norm() < 1e-14 || ymax - ymin < 1e-12 * (1.0 + std::abs(ymin))) {
        out.degenerate = true;
        out.rho_star = lo;
        out.beta1 = std::max(cfg.beta1_alpha * lo, 1e-8);
        return out;
    }

    double a = xs[std::max(0, best - 1)];
    double b = xs[std::min(ngrid - 1, best + 1)];
    constexpr double kGolden = 0.6180339887498948482;
    double c = b - kGolden * (b - a);
    double d = a + kGolden * (b - a);
    double fc = f(c), fd = f(d);
    budget -= 2;
    while (budget > 0 && (b - a) > 1e-10) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - kGolden * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + kGolden * (b - a);
            fd = f(d);
        }
        --budget;
    }
    out.rho_star = 0.5 * (a + b);
    out.beta1 = std::max(cfg.beta1_alpha * out.rho_star, 1e-8);
    return out;
}

InnerResult inner_iterate(const Mat& x1, const ObservationModel& obs, const Vec& dY,
                          double t, double dt, const KsConfig& cfg, double beta1,
                          long time_index) {
    const int N = static_cast<int>(x1.rows());
    const int kmax = cfg.resolved_k_max();

    InnerResult res;
    res.schedule = cfg.schedule == ScheduleState::Variant::exponential
                       ? ScheduleState::exponential(beta1)
                       : ScheduleState::lam(beta1, cfg.lam_lambda);
    const Vec scales = observation_channel_scales(obs, dY, dt);
    Mat cur = x1;
    for (int k = 1; k < cfg.kappa; ++k) {
        Mat H = observe_all(cur, obs, t);
        Mat R = increment_residuals(obs, dY, H, dt);
        std::vector<double> energies(N);
        double emean = 0.0;
        for (int j = 0; j < N; ++j) {
            energies[j] = R.row(j).squaredNorm();
            emean += energies[j];
        }
        emean /= N;

        if (k >= 2) {
            if (res.schedule.variant == ScheduleState::Variant::exponential)
                next_beta_exponential(res.schedule);
            else
                next_beta_lam(res.schedule, res.record.particle_energies[k - 2], energies);
        }
        res.schedule.energy_history.push_back(emean);

        H.array().rowwise() /= scales.transpose().array();  // gain sees the whitened channel
        Mat G = compute_gain(cur, H);
        Mat U = R * G.transpose();
        if (k == cfg.kappa - 1) {
            res.penultimate = cur;
            res.gain_last = G;
            res.update_last = U;
        }
        res.record.residuals.push_back(std::move(R));
        res.record.particle_energies.push_back(std::move(energies));
        res.record.mean_energy.push_back(emean);
        res.record.betas.push_back(res.schedule.beta);

        const Mat& base = (k <= kmax) ? x1 : cur;
        Mat next = base + (1.0 + res.schedule.beta) * U;
        if (!next.allFinite()) {
            for (int j = 0; j < N; ++j)
                if (!next.row(j).allFinite())
                    throw numeric_overflow("inner update produced a non-finite particle",
                                           time_index, j, k);
        }
        cur = std::move(next);
    }
    res.particles = std::move(cur);
    return res;
}

Mat finalize_step(const Mat& prev, const InnerResult& inner, const Mat& dB,
                  const ProcessModel& model, double t_prev, double t_next, double dt,
                  long time_index) {
    const int N = static_cast<int>(prev.rows());
    Mat out(N, prev.cols());
    for (int j = 0; j < N; ++j) {
        const Vec xp = prev.row(j);
        const Vec b0 = model.drift(xp, t_prev);
        const Vec b1 = model.drift(inner.penultimate.row(j), t_next);
        Vec x = xp + 0.5 * (b0 + b1) * dt + model.diffusion(xp, t_prev) * dB.row(j).transpose() +
                inner.update_last.row(j).transpose();
        if (!x.allFinite())
            throw numeric_overflow("final correction produced a non-finite particle",
                                   time_index, j, -1);
        out.row(j) = x.transpose();
    }
    return out;
}

std::vector<Vec> observation_increments(const Trajectory& traj, const ObservationModel& obs) {
    const int M = traj.steps();
    require(M >= 1, "observation_increments: trajectory has no steps");
    std::vector<Vec> incs;
    incs.reserve(M);
    if (obs.form == ObservationModel::Form::sde_integrated) {
        require(static_cast<int>(traj.obs_Y.size()) == M + 1,
                "observation_increments: integrated record missing or incomplete");
        for (int i = 0; i < M; ++i) incs.push_back(traj.obs_Y[i + 1] - traj.obs_Y[i]);
    } else {
        require(static_cast<int>(traj.obs_y.size()) == M + 1,
                "observation_increments: algebraic record missing or incomplete");
        for (int i = 0; i < M; ++i) incs.push_back(traj.obs_y[i + 1] * traj.dt);
    }
    return incs;
}

void WhitenessTracker::add(const Vec& standardized) {
    require(standardized.size() == static_cast<Eigen::Index>(z_.size()),
            "whiteness tracker: channel mismatch");
    for (std::size_t c = 0; c < z_.size(); ++c) z_[c].push_back(standardized[c]);
}

double WhitenessTracker::statistic() const {
    if (z_.empty() || z_[0].size() < 5) return std::nan("");
    double worst = 0.0;
    for (const auto& ch : z_) {
        auto res = ks_test(ch, standard_normal_cdf, 0.05);
        worst = std::max(worst, res.statistic);
    }
    return worst;
}

double whiteness_pass_fraction(const std::vector<double>& ks_stats, double significance) {
    const double c = ks_critical(significance);
    int tested = 0, passed = 0;
    for (std::size_t i = 0; i < ks_stats.size(); ++i) {
        const double n = static_cast<double>(i + 1);  // one increment per step
        if (n < 5 || !std::isfinite(ks_stats[i])) continue;
        ++tested;
        if (ks_stats[i] < c / std::sqrt(n)) ++passed;
    }
    if (tested == 0) throw insufficient_data("whiteness: no tested steps");
    return static_cast<double>(passed) / tested;
}

Vec whiteness_denominator(const ObservationModel& obs, const Vec&, double dt) {
    Vec denom(obs.dim_obs);
    if (obs.form == ObservationModel::Form::sde_integrated) {
        for (int c = 0; c < obs.dim_obs; ++c)
            denom[c] = std::sqrt(obs.noise.covariance(c, c) * dt);
    } else {
        // algebraic residuals come back whitened by the core noise scale
        double inflate = 1.0;
        if (obs.noise.kind == ObservationNoise::Kind::glint_mixture)
            inflate = (1.0 - obs.noise.glint_gamma) + obs.noise.glint_gamma * obs.noise.glint_scale;
        for (int c = 0; c < obs.dim_obs; ++c) denom[c] = std::sqrt(inflate) * dt;
    }
    return denom;
}

RunRecord ks_filter_run(const Trajectory& traj, const ProcessModel& model,
                        const ObservationModel& obs, const KsConfig& cfg,
                        const InitialEnsemble& init, const RngStream& rng,
                        const std::vector<Vec>* truth_override) {
    cfg.validate();
    model.validate();
    obs.validate();
    const int M = traj.steps();
    require(M >= 1, "ks_filter_run: trajectory has no steps");
    const double dt = traj.dt;
    require(std::abs(dt - cfg.dt) <= 1e-9 * std::max(1.0, dt),
            "ks_filter_run: config dt does not match trajectory dt");
    require(init.dim() == model.dim_state, "ks_filter_run: initial ensemble dimension mismatch");
    if (truth_override)
        require(static_cast<int>(truth_override->size()) == M + 1,
                "ks_filter_run: truth override length mismatch");
    else
        require(static_cast<int>(traj.states[0].size()) == model.dim_state,
                "ks_filter_run: trajectory dimension mismatch (augmented model needs truth_override)");

    const auto incs = observation_increments(traj, obs);
    const int n = model.dim_state;
    const int q = obs.dim_obs;

    Mat cur = sample_initial_ensemble(init, cfg.N, rng);

    RunRecord rec;
    rec.filter_name = "ks";
    rec.times.resize(M);
    rec.estimates.resize(M, n);
    rec.truth.resize(M, n);
    rec.spread.resize(M, n);
    rec.ks_stat.resize(M);
    rec.beta1_used.resize(M);
    rec.ens_ks_stat.resize(M);

    WhitenessTracker tracker(q);

    for (int i = 0; i < M; ++i) {
        const double t0 = traj.times[i];
        const double t1 = traj.times[i + 1];
        const Vec& dY = incs[i];

        PredictResult pr = predict(cur, model, t0, dt, i, rng);
        const Vec scales = observation_channel_scales(obs, dY, dt);
        Mat H0 = observe_all(pr.particles, obs, t1);
        Mat R0 = increment_residuals(obs, dY, H0, dt);
        H0.array().rowwise() /= scales.transpose().array();
        Mat G0 = compute_gain(pr.particles, H0);
        Mat x1 = initial_update(pr.particles, G0, R0);
        if (!x1.allFinite())
            throw numeric_overflow("initial update produced a non-finite particle", i, -1, 0);

        double b1v = cfg.beta1_value;
        if (cfg.beta1_mode == KsConfig::Beta1Mode::linesearch) {
            Mat H1 = observe_all(x1, obs, t1);
            Mat R1 = increment_residuals(obs, dY, H1, dt);
            H1.array().rowwise() /= scales.transpose().array();
            Mat G1 = compute_gain(x1, H1);
            Vec rbar = R1.colwise().mean();
            Vec u = G1 * rbar;
            Vec m = x1.colwise().mean();
            b1v = select_beta1(m, u, dY, t1, dt, obs, cfg).beta1;
        }

        InnerResult ir = inner_iterate(x1, obs, dY, t1, dt, cfg, b1v, i);
        Mat next = cfg.final_correction
                       ? finalize_step(cur, ir, pr.dB, model, t0, t1, dt, i)
                       : std::move(ir.particles);

        rec.times[i] = t1;
        rec.estimates.row(i) = next.colwise().mean();
        for (int c = 0; c < n; ++c) {
            const double m2 = next.col(c).squaredNorm() / cfg.N;
            const double mu = rec.estimates(i, c);
            rec.spread(i, c) = std::sqrt(std::max(0.0, m2 - mu * mu));
        }
        rec.truth.row(i) =
            (truth_override ? (*truth_override)[i + 1] : traj.states[i + 1]).transpose();
        rec.beta1_used[i] = b1v;

        Mat Hpost = observe_all(next, obs, t1);
        Vec mean_h = Hpost.colwise().mean();
        Mat Hbar(1, q);
        Hbar.row(0) = mean_h.transpose();
        Vec mean_resid = increment_residuals(obs, dY, Hbar, dt).row(0);
        Vec denom = whiteness_denominator(obs, dY, dt);
        Vec zstd(q);
        for (int c = 0; c < q; ++c) zstd[c] = mean_resid[c] / denom[c];
        tracker.add(zstd);
        rec.ks_stat[i] = tracker.statistic();

        // ensemble-residual form of the stopping diagnostic (recorded only)
        if (cfg.N >= 5) {
            Mat Rpost = increment_residuals(obs, dY, Hpost, dt);
            double worst = 0.0;
            for (int c = 0; c < q; ++c) {
                std::vector<double> zs(cfg.N);
                for (int j = 0; j < cfg.N; ++j) zs[j] = Rpost(j, c) / denom[c];
                worst = std::max(worst, ks_test(zs, standard_normal_cdf, 0.05).statistic);
            }
            rec.ens_ks_stat[i] = worst;
        } else {
            rec.ens_ks_stat[i] = std::nan("");
        }

        cur = std::move(next);
    }
    return rec;
}

}  // namespace ksmc
