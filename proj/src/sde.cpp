#include "ksmc/sde.hpp"

#include <cmath>

namespace ksmc {

Vec em_step(const ProcessModel& model, const Vec& x, double t, double dt,
            const Vec& dB, long time_index, long particle) {
    Vec next = x + model.drift(x, t) * dt;
    if (dB.size() > 0) next += model.diffusion(x, t) * dB;
    if (!next.allFinite())
        throw numeric_overflow("em_step produced a non-finite state", time_index, particle, -1);
    return next;
}

Trajectory generate_truth(const ProcessModel& model, const Vec& x0,
                          const ObservationModel* obs_sde,
                          const ObservationModel* obs_alg,
                          const TruthOptions& opt, const RngStream& rng) {
    model.validate();
    require(opt.dt > 0 && opt.T > 0, "generate_truth: T and dt must be positive");
    require(x0.size() == model.dim_state, "generate_truth: x0 dimension mismatch");
    const double steps_real = opt.T / opt.dt;
    const int M = static_cast<int>(std::lround(steps_real));
    require(M >= 1 && std::abs(steps_real - M) < 1e-9, "generate_truth: T must be a multiple of dt");
    const int refine = model.discrete ? 1 : std::max(1, opt.refine);
    const double dtf = opt.dt / refine;

    Trajectory traj;
    traj.dt = opt.dt;
    traj.times.reserve(M + 1);
    traj.states.reserve(M + 1);

    const int q_sde = obs_sde ? obs_sde->dim_obs : 0;
    Mat chol_sde;
    if (obs_sde) {
        obs_sde->validate();
        chol_sde = Mat(obs_sde->noise.covariance.llt().matrixL());
    }
    Mat chol_alg_fixed;
    const bool alg_state_scaled =
        obs_alg && (obs_alg->noise.relative_std > 0.0 || obs_alg->noise.fixed_std.size() > 0);
    if (obs_alg) {
        obs_alg->validate();
        if (!alg_state_scaled)
            chol_alg_fixed = Mat(obs_alg->noise.covariance.llt().matrixL());
    }

    auto record_algebraic = [&](const Vec& x, double t, long out_index) {
        const auto& noise = obs_alg->noise;
        Vec h = obs_alg->observe(x, t);
        Vec y = h;
        if (opt.with_obs_noise) {
            Vec eta(obs_alg->dim_obs);
            for (int c = 0; c < obs_alg->dim_obs; ++c)
                eta[c] = rng.normal(RngDomain::truth_obs_algebraic, out_index, 0, c);
            Vec v;
            if (alg_state_scaled) {
                v = noise.covariance_at(h).diagonal().array().sqrt().matrix().asDiagonal() * eta;
            } else {
                v = chol_alg_fixed * eta;
            }
            if (noise.kind == ObservationNoise::Kind::glint_mixture) {
                double u = rng.uniform(RngDomain::truth_glint_select, out_index, 0, 0);
                if (u < noise.glint_gamma) v *= std::sqrt(noise.glint_scale);
            }
            y += v;
        }
        traj.obs_y.push_back(y);
    };

    Vec x = x0;
    Vec Y = Vec::Zero(q_sde);
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    if (obs_sde) traj.obs_Y.push_back(Y);
    if (obs_alg) record_algebraic(x, 0.0, 0);

    const double sq_dtf = std::sqrt(dtf);
    Vec dB(model.dim_noise);
    for (int i = 0; i < M; ++i) {
        for (int s = 0; s < refine; ++s) {
            const long fi = static_cast<long>(i) * refine + s;
            const double t = fi * dtf;
            for (int c = 0; c < model.dim_noise; ++c)
                dB[c] = sq_dtf * rng.normal(RngDomain::truth_process, fi, 0, c);
            Vec xn = em_step(model, x, t, dtf, dB, fi, 0);
            if (obs_sde) {
                Vec h0 = obs_sde->observe(x, t);
                Vec h1 = obs_sde->observe(xn, t + dtf);
                Y += 0.5 * (h0 + h1) * dtf;
                if (opt.with_obs_noise) {
                    for (int c = 0; c < q_sde; ++c) {
                        // dW ~ N(0, R dtf), correlated through chol(R)
                        double acc = 0.0;
                        for (int c2 = 0; c2 <= c; ++c2)
                            acc += chol_sde(c, c2) *
                                   rng.normal(RngDomain::truth_obs_brownian, fi, 0, c2);
                        Y[c] += sq_dtf * acc;
                    }
                }
            }
            x = xn;
        }
        traj.times.push_back((i + 1) * opt.dt);
        traj.states.push_back(x);
        if (obs_sde) traj.obs_Y.push_back(Y);
        if (obs_alg) record_algebraic(x, (i + 1) * opt.dt, i + 1);
    }
    return traj;
}

Trajectory subsample(const Trajectory& traj, int k) {
    require(k >= 1, "subsample: k must be >= 1");
    const int M = traj.steps();
    require(M % k == 0, "subsample: step count not divisible by k");
    Trajectory out;
    out.dt = traj.dt * k;
    for (int i = 0; i <= M; i += k) {
        out.times.push_back(traj.times[i]);
        out.states.push_back(traj.states[i]);
        if (!traj.obs_Y.empty()) out.obs_Y.push_back(traj.obs_Y[i]);
        if (!traj.obs_y.empty()) out.obs_y.push_back(traj.obs_y[i]);
    }
    return out;
}

}  // namespace ksmc
