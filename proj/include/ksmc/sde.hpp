#pragma once

#include <vector>

#include "ksmc/models.hpp"
#include "ksmc/rng.hpp"

namespace ksmc {

/// Simulated ground truth plus both observation records on a uniform grid
/// t_i = i * dt, i = 0..M. obs_Y is the cumulative integrated observation
/// Y(t_i) (trapezoidal quadrature of h along the fine grid plus Brownian
/// observation noise); obs_y holds algebraic measurements y(t_i). Either
/// record may be empty if the matching observation model was not supplied.
struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> obs_Y;
    std::vector<Vec> obs_y;

    int steps() const { return static_cast<int>(times.size()) - 1; }
};

/// One Euler-Maruyama step x + b dt + f dB. dB carries the Brownian
/// increments (already scaled by sqrt(dt)). Throws numeric_overflow if the
/// result is not finite.
Vec em_step(const ProcessModel& model, const Vec& x, double t, double dt,
            const Vec& dB, long time_index = -1, long particle = -1);

struct TruthOptions {
    double T = 1.0;
    double dt = 0.01;
    int refine = 32;          // fine substeps per output interval (forced 1 for discrete models)
    bool with_obs_noise = true;
};

/// Simulates the model on the refined grid and subsamples to the output
/// grid. Observation noise draws and process noise draws are addressed by
/// fine-grid index so a run is reproducible independent of traversal.
/// obs_sde / obs_alg may be null.
Trajectory generate_truth(const ProcessModel& model, const Vec& x0,
                          const ObservationModel* obs_sde,
                          const ObservationModel* obs_alg,
                          const TruthOptions& opt, const RngStream& rng);

/// Keeps every k-th sample of a trajectory (cumulative records subsample
/// exactly). Step count must be divisible by k.
Trajectory subsample(const Trajectory& traj, int k);

}  // namespace ksmc
