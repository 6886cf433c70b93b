#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ksmc/common.hpp"

namespace ksmc {

/// Ito diffusion dX = b(X,t) dt + f(X,t) dB with an n-dimensional state and
/// an m-dimensional driving Brownian motion. A model flagged `discrete` is a
/// one-step map in disguise: exactly one Euler-Maruyama step of size dt
/// reproduces it, and truth generation must not subdivide the interval.
struct ProcessModel {
    int dim_state = 0;  // n
    int dim_noise = 0;  // m
    std::function<Vec(const Vec&, double)> drift;       // b: R^n x t -> R^n
    std::function<Mat(const Vec&, double)> diffusion;   // f: R^n x t -> R^(n x m)
    bool discrete = false;

    void validate() const {
        require(dim_state > 0, "process model: dim_state must be positive");
        require(dim_noise >= 0, "process model: dim_noise must be >= 0");
        require(static_cast<bool>(drift), "process model: drift not set");
        require(static_cast<bool>(diffusion), "process model: diffusion not set");
    }
};

/// Observation-noise law. `covariance` is the per-unit-time intensity of the
/// Brownian observation noise for integrated observations, or the variance of
/// the additive noise for algebraic ones. If relative_std > 0 the per-channel
/// standard deviation is max(relative_std * |z_ch|, floor_std) instead and
/// `covariance` is ignored; a channel with fixed_std[ch] > 0 keeps that
/// absolute standard deviation regardless of the reading. A glint mixture
/// replaces the base covariance S by scale*S with probability gamma.
struct ObservationNoise {
    enum class Kind { gaussian, glint_mixture };
    Kind kind = Kind::gaussian;
    Mat covariance;             // q x q
    double glint_scale = 100.0;
    double glint_gamma = 0.0;
    double relative_std = 0.0;
    double floor_std = 1e-6;
    Vec fixed_std;              // empty, or one entry per channel (0 = not fixed)

    // Base covariance resolved for a concrete measurement vector.
    Mat covariance_at(const Vec& z) const;
};

/// Observation map h with its noise law. `sde_integrated` means the filter
/// consumes increments of Y_t = int h dt + W_t; `algebraic` means direct
/// measurements y_i = h(x_i) + v_i.
struct ObservationModel {
    enum class Form { sde_integrated, algebraic };
    int dim_obs = 0;  // q
    Form form = Form::sde_integrated;
    std::function<Vec(const Vec&, double)> observe;  // h: R^n x t -> R^q
    ObservationNoise noise;
    // Channels measuring an angle; residuals on these wrap to (-pi, pi].
    std::vector<bool> angular;

    void validate() const {
        require(dim_obs > 0, "observation model: dim_obs must be positive");
        require(static_cast<bool>(observe), "observation model: observe not set");
    }
    bool is_angular(int ch) const {
        return ch < static_cast<int>(angular.size()) && angular[ch];
    }
};

// Residual z - h with angular channels wrapped into (-pi, pi].
Vec observation_residual(const ObservationModel& obs, const Vec& z, const Vec& h);

/// Joint state-parameter model for system identification. `base` runs the
/// reference dynamics (used to generate truth); `augmented` appends the
/// parameter block as zero-drift random walks and reads parameter values from
/// the state vector inside the base drift.
struct AugmentedModel {
    ProcessModel base;
    ProcessModel augmented;
    std::vector<std::string> parameter_names;
    Vec parameter_noise;   // random-walk intensities, one per parameter
    Vec reference_values;  // harness-only truth, never read by the filter
    ObservationModel obs_sde;
    ObservationModel obs_alg;
    int base_dim = 0;

    int n_params() const { return static_cast<int>(parameter_names.size()); }
    // Truth state padded with reference parameters, for error reporting
    // against augmented-state estimates.
    Vec pad_truth(const Vec& base_state) const;
};

/// Single-degree-of-freedom forced hardening oscillator with unknown
/// stiffness, damping and cubic coefficient. Augmented state
/// (x1, x2, k, c, alpha):
///   dx1 = x2 dt
///   dx2 = (-c x2 - k x1 - alpha x1^3 + 4 pi^2 eps3 cos(2 pi t)) dt + f dB
/// with reference values c = 2 pi eps1, k = alpha = 4 pi^2 eps2. The scalar
/// observation is h(X) = x1 / sigma_m against standard Brownian noise; the
/// algebraic record is y = x1 + sigma_m eta.
AugmentedModel make_duffing(double eps1, double eps2, double eps3,
                            double f_intensity, double sigma_m,
                            const Vec& f_mu);

/// Five-storey shear frame with unknown storey stiffnesses and dampings.
/// Base state: 5 displacements then 5 velocities; augmented adds K1..K5 and
/// C1..C5 (20 states). [K] and [C] are assembled in the standard chain
/// pattern (row i couples storeys i and i+1). All five displacements are
/// observed. Parameter random walks default to zero intensity (static
/// parameters).
AugmentedModel make_shear_frame(
    const Vec& K, const Vec& C,
    std::function<Vec(const Vec&)> nonlinear_field,  // displacement -> force; pass nullptr for none
    std::function<Vec(double)> forcing,              // t -> per-floor force; nullptr => A sin(w t) defaults
    double sigma, double sigma_m,
    const Vec& param_noise = Vec());

// Chain-pattern stiffness/damping assembly, exposed for tests.
Mat chain_matrix(const Vec& k);

// Cubic inter-storey restoring force with coefficient kappa_nl.
std::function<Vec(const Vec&)> cubic_interstorey(double kappa_nl);

/// Constant-velocity planar tracker observed in bearing and range.
struct TrackerProblem {
    ProcessModel filter_process;  // CV model, discrete, noise intensity q
    ProcessModel truth_process;   // same plus scheduled maneuver accelerations
    ObservationModel obs;         // (bearing, range), algebraic
    Vec x0;                       // (x, vx, y, vy)
    double dt = 1.0;
    Mat F;      // one-step transition
    Mat Gamma;  // noise input map
};

/// accel_schedule: list of (time, axy) pairs; the acceleration acts for the
/// single step starting at that time. noise: relative_std fraction of the
/// measurement (per channel), optional glint mixture.
TrackerProblem make_tracker(double dt, const Vec& x0,
                            const std::vector<std::pair<double, Vec>>& accel_schedule,
                            double process_noise_intensity,
                            const Vec& observer,
                            const ObservationNoise& noise);

/// Scalar Ornstein-Uhlenbeck benchmark dx = a x dt + sqrt(q) dB observed as
/// dY = x dt + sqrt(r) dW (plus an algebraic record y = x + sqrt(r) eta).
/// Exact discrete Kalman matrices for step dt are available from
/// linear_gaussian_kalman_terms().
struct LinearGaussianProblem {
    double a = -1.0;
    double q = 1.0;
    double r = 1.0;
    double x0_mean = 0.0;
    double p0 = 1.0;
    ProcessModel process;
    ObservationModel obs_sde;
    ObservationModel obs_alg;
};

LinearGaussianProblem make_linear_gaussian(double a, double q, double r,
                                           double x0_mean, double p0);

}  // namespace ksmc
