#include "ksmc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "ksmc/diagnostics.hpp"

namespace ksmc {

std::vector<int> systematic_resample(const std::vector<double>& weights, double u) {
    const int N = static_cast<int>(weights.size());
    require(N >= 1, "systematic_resample: empty weight vector");
    require(u >= 0.0 && u < 1.0, "systematic_resample: offset must lie in [0, 1)");
    std::vector<int> idx(N);
    double cum = weights[0];
    int j = 0;
    for (int i = 0; i < N; ++i) {
        const double threshold = (i + u) / N;
        while (cum < threshold && j + 1 < N) cum += weights[++j];
        idx[i] = j;
    }
    return idx;
}

std::vector<double> normalized_from_log(std::vector<double> log_weights, bool* all_impossible) {
    const int N = static_cast<int>(log_weights.size());
    require(N >= 1, "normalized_from_log: empty weight vector");
    double mx = -std::numeric_limits<double>::infinity();
    for (double lw : log_weights) mx = std::max(mx, lw);
    if (all_impossible) *all_impossible = false;
    if (!std::isfinite(mx)) {
        if (all_impossible) *all_impossible = true;
        return std::vector<double>(N, 1.0 / N);
    }
    double sum = 0.0;
    for (double& lw : log_weights) {
        lw = std::exp(lw - mx);
        sum += lw;
    }
    for (double& w : log_weights) w /= sum;
    return log_weights;
}

double effective_sample_size(const std::vector<double>& weights) {
    double s2 = 0.0;
    for (double w : weights) s2 += w * w;
    require(s2 > 0, "effective_sample_size: zero weight vector");
    return 1.0 / s2;
}

namespace {

double log_gaussian(const Vec& resid, const Mat& cov) {
    const int q = static_cast<int>(resid.size());
    Eigen::LDLT<Mat> ldlt(cov);
    require(ldlt.info() == Eigen::Success, "log_gaussian: covariance factorization failed");
    double logdet = 0.0;
    for (int c = 0; c < q; ++c) logdet += std::log(ldlt.vectorD()[c]);
    const double quad = resid.dot(ldlt.solve(resid));
    return -0.5 * (q * std::log(2.0 * M_PI) + logdet + quad);
}

}  // namespace

double log_observation_density(const ObservationModel& obs, const Vec& dY,
                               const Vec& h, double dt, bool increment_form) {
    const Vec z = dY / dt;
    Mat base = obs.noise.covariance_at(z);
    Vec resid;
    Mat cov;
    if (increment_form) {
        if (obs.form == ObservationModel::Form::algebraic)
            resid = observation_residual(obs, z, h) * dt;
        else
            resid = dY - h * dt;
        cov = base * dt;
    } else {
        resid = observation_residual(obs, z, h);
        cov = base;
    }
    if (obs.noise.kind == ObservationNoise::Kind::glint_mixture &&
        obs.noise.glint_gamma > 0.0) {
        const double g = obs.noise.glint_gamma;
        const double l0 = std::log1p(-g) + log_gaussian(resid, cov);
        const double l1 = std::log(g) + log_gaussian(resid, Mat(obs.noise.glint_scale * cov));
        const double m = std::max(l0, l1);
        return m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
    }
    return log_gaussian(resid, cov);
}

RunRecord enkf_run(const Trajectory& traj, const ProcessModel& model,
                   const ObservationModel& obs, const EnkfConfig& cfg,
                   const InitialEnsemble& init, const RngStream& rng,
                   const std::vector<Vec>* truth_override) {
    cfg.validate();
    model.validate();
    obs.validate();
    const int M = traj.steps();
    require(M >= 1, "enkf_run: trajectory has no steps");
    const double dt = traj.dt;
    require(std::abs(dt - cfg.dt) <= 1e-9 * std::max(1.0, dt),
            "enkf_run: config dt does not match trajectory dt");
    require(init.dim() == model.dim_state, "enkf_run: initial ensemble dimension mismatch");
    if (truth_override)
        require(static_cast<int>(truth_override->size()) == M + 1,
                "enkf_run: truth override length mismatch");

    const auto incs = observation_increments(traj, obs);
    const int n = model.dim_state;
    const int q = obs.dim_obs;
    const int N = cfg.N;
    const bool integrated = obs.form == ObservationModel::Form::sde_integrated;

    Mat cur = sample_initial_ensemble(init, N, rng);

    RunRecord rec;
    rec.filter_name = "enkf";
    rec.times.resize(M);
    rec.estimates.resize(M, n);
    rec.truth.resize(M, n);
    rec.spread.resize(M, n);
    rec.ks_stat.resize(M);
    rec.beta1_used.assign(M, std::nan(""));
    rec.ens_ks_stat.assign(M, std::nan(""));

    WhitenessTracker tracker(q);

    Mat pert_chol_const;
    if (integrated)
        pert_chol_const = Mat(obs.noise.covariance * dt).llt().matrixL();

    for (int i = 0; i < M; ++i) {
        const double t0 = traj.times[i];
        const double t1 = traj.times[i + 1];
        const Vec& dY = incs[i];

        PredictResult pr = predict(cur, model, t0, dt, i, rng);
        Mat H = observe_all(pr.particles, obs, t1);
        Vec mx = pr.particles.colwise().mean();
        Vec mh = H.colwise().mean();
        Mat Xc = pr.particles.rowwise() - mx.transpose();
        Mat Hc = H.rowwise() - mh.transpose();
        Mat Cxh = Xc.transpose() * Hc / (N - 1);
        Mat Chh = Hc.transpose() * Hc / (N - 1);

        Mat S, pert_chol;
        if (integrated) {
            S = Chh * dt + obs.noise.covariance;
            pert_chol = pert_chol_const;
        } else {
            const Vec z = dY / dt;
            Mat Seff = obs.noise.covariance_at(z);
            if (obs.noise.kind == ObservationNoise::Kind::glint_mixture)
                Seff *= (1.0 - obs.noise.glint_gamma) +
                        obs.noise.glint_gamma * obs.noise.glint_scale;
            S = Chh + Seff;
            pert_chol = Seff.llt().matrixL();
        }
        Mat Kt = S.ldlt().solve(Cxh.transpose());  // K = Cxh S^-1

        Mat resid(N, q);
        const Vec z = dY / dt;
        for (int j = 0; j < N; ++j) {
            Vec xi(q);
            for (int c = 0; c < q; ++c)
                xi[c] = rng.normal(RngDomain::enkf_perturb, i, j, c);
            const Vec eta = pert_chol * xi;
            if (integrated)
                resid.row(j) = (dY - H.row(j).transpose() * dt + eta).transpose();
            else
                resid.row(j) = (observation_residual(obs, z, H.row(j)) + eta).transpose();
        }
        Mat next = pr.particles + resid * Kt;
        if (cfg.jitter > 0) {
            for (int j = 0; j < N; ++j)
                for (int c = 0; c < n; ++c)
                    next(j, c) += cfg.jitter * rng.normal(RngDomain::enkf_perturb, i, j, q + c);
        }
        if (!next.allFinite())
            throw numeric_overflow("enkf update produced a non-finite particle", i, -1, -1);

        rec.times[i] = t1;
        rec.estimates.row(i) = next.colwise().mean();
        for (int c = 0; c < n; ++c) {
            const double m2 = next.col(c).squaredNorm() / N;
            const double mu = rec.estimates(i, c);
            rec.spread(i, c) = std::sqrt(std::max(0.0, m2 - mu * mu));
        }
        rec.truth.row(i) =
            (truth_override ? (*truth_override)[i + 1] : traj.states[i + 1]).transpose();

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

        cur = std::move(next);
    }
    return rec;
}

RunRecord abs_run(const Trajectory& traj, const ProcessModel& model,
                  const ObservationModel& obs, const AbsConfig& cfg,
                  const InitialEnsemble& init, const RngStream& rng,
                  const std::vector<Vec>* truth_override) {
    cfg.validate();
    model.validate();
    obs.validate();
    const int M = traj.steps();
    require(M >= 1, "abs_run: trajectory has no steps");
    const double dt = traj.dt;
    require(std::abs(dt - cfg.dt) <= 1e-9 * std::max(1.0, dt),
            "abs_run: config dt does not match trajectory dt");
    require(init.dim() == model.dim_state, "abs_run: initial ensemble dimension mismatch");
    if (truth_override)
        require(static_cast<int>(truth_override->size()) == M + 1,
                "abs_run: truth override length mismatch");

    const auto incs = observation_increments(traj, obs);
    const int n = model.dim_state;
    const int q = obs.dim_obs;
    const int N = cfg.N;
    const bool increment_form = cfg.likelihood == AbsConfig::Likelihood::increment;
    const double sq = std::sqrt(dt);

    Mat cur = sample_initial_ensemble(init, N, rng);
    std::vector<double> w_prev(N, 1.0 / N);

    RunRecord rec;
    rec.filter_name = increment_form ? "abs2" : "abs1";
    rec.times.resize(M);
    rec.estimates.resize(M, n);
    rec.truth.resize(M, n);
    rec.spread.resize(M, n);
    rec.ks_stat.resize(M);
    rec.beta1_used.assign(M, std::nan(""));
    rec.ess.resize(M);
    rec.ens_ks_stat.assign(M, std::nan(""));

    WhitenessTracker tracker(q);

    for (int i = 0; i < M; ++i) {
        const double t0 = traj.times[i];
        const double t1 = traj.times[i + 1];
        const Vec& dY = incs[i];

        // first stage: score the noise-free drift pushforward
        std::vector<double> l1(N), logw(N);
        for (int j = 0; j < N; ++j) {
            const Vec mu = cur.row(j).transpose() + model.drift(cur.row(j), t0) * dt;
            l1[j] = log_observation_density(obs, dY, obs.observe(mu, t1), dt, increment_form);
            logw[j] = std::log(w_prev[j]) + l1[j];
        }
        bool impossible = false;
        std::vector<double> wtilde = normalized_from_log(std::move(logw), &impossible);
        if (impossible) ++rec.degeneracy_events;

        const double u = rng.uniform(RngDomain::abs_resample, i, 0, 0);
        const std::vector<int> anc = systematic_resample(wtilde, u);

        // second stage: propagate ancestors, correct the first-stage bias
        Mat next(N, n);
        std::vector<double> logw2(N);
        Mat Hpost(N, q);
        for (int j = 0; j < N; ++j) {
            Vec dB(model.dim_noise);
            for (int c = 0; c < model.dim_noise; ++c)
                dB[c] = sq * rng.normal(RngDomain::abs_propagate, i, j, c);
            const Vec x = em_step(model, cur.row(anc[j]), t0, dt, dB, i, j);
            next.row(j) = x.transpose();
            const Vec h = obs.observe(x, t1);
            Hpost.row(j) = h.transpose();
            logw2[j] = log_observation_density(obs, dY, h, dt, increment_form) - l1[anc[j]];
        }
        std::vector<double> w = normalized_from_log(std::move(logw2), &impossible);
        if (impossible) ++rec.degeneracy_events;

        const double ess = effective_sample_size(w);
        rec.ess[i] = ess;
        if (ess < cfg.degeneracy_fraction * N) ++rec.degeneracy_events;

        Vec est = Vec::Zero(n), m2 = Vec::Zero(n), mean_h = Vec::Zero(q);
        for (int j = 0; j < N; ++j) {
            est += w[j] * next.row(j).transpose();
            m2 += w[j] * next.row(j).transpose().cwiseAbs2();
            mean_h += w[j] * Hpost.row(j).transpose();
        }
        rec.times[i] = t1;
        rec.estimates.row(i) = est.transpose();
        for (int c = 0; c < n; ++c)
            rec.spread(i, c) = std::sqrt(std::max(0.0, m2[c] - est[c] * est[c]));
        rec.truth.row(i) =
            (truth_override ? (*truth_override)[i + 1] : traj.states[i + 1]).transpose();

        Mat Hbar(1, q);
        Hbar.row(0) = mean_h.transpose();
        Vec mean_resid = increment_residuals(obs, dY, Hbar, dt).row(0);
        Vec denom = whiteness_denominator(obs, dY, dt);
        Vec zstd(q);
        for (int c = 0; c < q; ++c) zstd[c] = mean_resid[c] / denom[c];
        tracker.add(zstd);
        rec.ks_stat[i] = tracker.statistic();

        cur = std::move(next);
        w_prev = std::move(w);
    }
    return rec;
}

KalmanTerms linear_gaussian_kalman_terms(const LinearGaussianProblem& lg, double dt) {
    require(dt > 0, "kalman terms: dt must be positive");
    KalmanTerms kt;
    kt.phi = 1.0 + lg.a * dt;
    kt.qd = lg.q * dt;
    // whitened integrated channel: dY = (x / sqrt(r)) dt + dW
    kt.hd = dt / std::sqrt(lg.r);
    kt.rd = dt;
    return kt;
}

void kalman_predict(double& m, double& P, const KalmanTerms& kt) {
    m = kt.phi * m;
    P = kt.phi * kt.phi * P + kt.qd;
}

void kalman_update(double& m, double& P, const KalmanTerms& kt, double dY) {
    const double S = kt.hd * kt.hd * P + kt.rd;
    require(S > 0, "kalman update: degenerate innovation variance");
    const double K = P * kt.hd / S;
    m += K * (dY - kt.hd * m);
    P *= 1.0 - K * kt.hd;
}

KalmanPath kalman_increment_filter(const LinearGaussianProblem& lg,
                                   const std::vector<double>& dY, double dt) {
    const KalmanTerms kt = linear_gaussian_kalman_terms(lg, dt);
    KalmanPath path;
    path.means.reserve(dY.size());
    path.variances.reserve(dY.size());
    double m = lg.x0_mean, P = lg.p0;
    for (double inc : dY) {
        kalman_predict(m, P, kt);
        kalman_update(m, P, kt, inc);
        path.means.push_back(m);
        path.variances.push_back(P);
    }
    return path;
}

RunRecord kalman_run(const LinearGaussianProblem& lg, const Trajectory& traj) {
    const int M = traj.steps();
    require(M >= 1, "kalman_run: trajectory has no steps");
    require(static_cast<int>(traj.obs_Y.size()) == M + 1,
            "kalman_run: integrated observation record required");
    const double dt = traj.dt;
    const KalmanTerms kt = linear_gaussian_kalman_terms(lg, dt);

    RunRecord rec;
    rec.filter_name = "kalman";
    rec.times.resize(M);
    rec.estimates.resize(M, 1);
    rec.truth.resize(M, 1);
    rec.spread.resize(M, 1);
    rec.ks_stat.resize(M);
    rec.beta1_used.assign(M, std::nan(""));
    rec.ens_ks_stat.assign(M, std::nan(""));

    WhitenessTracker tracker(1);
    double m = lg.x0_mean, P = lg.p0;
    for (int i = 0; i < M; ++i) {
        const double dY = traj.obs_Y[i + 1][0] - traj.obs_Y[i][0];
        kalman_predict(m, P, kt);
        const double m_pred = m;
        kalman_update(m, P, kt, dY);
        rec.times[i] = traj.times[i + 1];
        rec.estimates(i, 0) = m;
        rec.spread(i, 0) = std::sqrt(std::max(0.0, P));
        rec.truth(i, 0) = traj.states[i + 1][0];
        Vec zstd(1);
        zstd[0] = (dY - kt.hd * m_pred) / std::sqrt(kt.rd);
        tracker.add(zstd);
        rec.ks_stat[i] = tracker.statistic();
    }
    return rec;
}

}  // namespace ksmc
