#pragma once

#include <vector>

#include "ksmc/ksfilter.hpp"
#include "ksmc/models.hpp"
#include "ksmc/record.hpp"
#include "ksmc/rng.hpp"
#include "ksmc/sde.hpp"

namespace ksmc {

/// Stochastic ensemble Kalman filter with perturbed observations. Gains use
/// the sample-covariance convention (divisor N-1). Integrated observations
/// are assimilated as increments with noise covariance R dt; algebraic ones
/// directly with their (moment-matched Gaussian) covariance. `jitter` adds
/// independent N(0, jitter^2) noise per component after the update.
struct EnkfConfig {
    int N = 200;
    double dt = 0.0;
    double jitter = 0.0;

    void validate() const {
        require(N >= 2, "enkf config: N must be >= 2");
        require(dt > 0, "enkf config: dt must be positive");
        require(jitter >= 0, "enkf config: jitter must be >= 0");
    }
};

RunRecord enkf_run(const Trajectory& traj, const ProcessModel& model,
                   const ObservationModel& obs, const EnkfConfig& cfg,
                   const InitialEnsemble& init, const RngStream& rng,
                   const std::vector<Vec>* truth_override = nullptr);

/// Auxiliary bootstrap particle filter. Every step: first-stage weights from
/// the deterministic drift pushforward, systematic resampling, stochastic
/// propagation of the ancestors, second-stage likelihood correction. The
/// `algebraic` likelihood treats dY/dt as a direct measurement with the
/// nominal covariance; `increment` uses the increment model with covariance
/// scaled by dt. A glint mixture enters the likelihood as a two-component
/// Gaussian mixture.
struct AbsConfig {
    enum class Likelihood { algebraic, increment };
    int N = 500;
    double dt = 0.0;
    Likelihood likelihood = Likelihood::increment;
    double degeneracy_fraction = 0.05;  // ESS below this fraction of N counts as an event

    void validate() const {
        require(N >= 2, "abs config: N must be >= 2");
        require(dt > 0, "abs config: dt must be positive");
        require(degeneracy_fraction > 0 && degeneracy_fraction < 1,
                "abs config: degeneracy fraction must lie in (0, 1)");
    }
};

RunRecord abs_run(const Trajectory& traj, const ProcessModel& model,
                  const ObservationModel& obs, const AbsConfig& cfg,
                  const InitialEnsemble& init, const RngStream& rng,
                  const std::vector<Vec>* truth_override = nullptr);

/// Ancestor indices for systematic resampling with offset u in [0, 1):
/// thresholds (j + u) / N against the cumulative weight sum.
std::vector<int> systematic_resample(const std::vector<double>& weights, double u);

/// Normalizes log weights via the log-sum-exp shift. All minus-infinity
/// input collapses to uniform weights (callers count this as degeneracy).
std::vector<double> normalized_from_log(std::vector<double> log_weights,
                                        bool* all_impossible = nullptr);

double effective_sample_size(const std::vector<double>& weights);

/// Log observation density of one particle's predicted observation h.
/// increment_form selects N(dY; h dt, C dt) over N(dY/dt; h, C) with
/// C = covariance_at(dY/dt); mixture noise mixes the two scales.
double log_observation_density(const ObservationModel& obs, const Vec& dY,
                               const Vec& h, double dt, bool increment_form);

/// Scalar discrete Kalman terms matching the Euler-Maruyama prediction and
/// the increment observation dY = x dt + sqrt(r dt) eta.
struct KalmanTerms {
    double phi = 1.0;  // state transition 1 + a dt
    double qd = 0.0;   // process noise variance q dt
    double hd = 0.0;   // observation coefficient dt
    double rd = 0.0;   // observation noise variance r dt
};

KalmanTerms linear_gaussian_kalman_terms(const LinearGaussianProblem& lg, double dt);

void kalman_predict(double& m, double& P, const KalmanTerms& kt);
void kalman_update(double& m, double& P, const KalmanTerms& kt, double dY);

struct KalmanPath {
    std::vector<double> means;      // post-update, one per step
    std::vector<double> variances;
};

KalmanPath kalman_increment_filter(const LinearGaussianProblem& lg,
                                   const std::vector<double>& dY, double dt);

/// Reference run on the trajectory's integrated record; spread is sqrt(P).
RunRecord kalman_run(const LinearGaussianProblem& lg, const Trajectory& traj);

}  // namespace ksmc
