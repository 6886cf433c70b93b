#include "ksmc/models.hpp"

#include <cmath>

namespace ksmc {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_angle(double a) {
    // maps to (-pi, pi]
    double w = std::fmod(a + kPi, kTwoPi);
    if (w <= 0.0) w += kTwoPi;
    return w - kPi;
}
}  // namespace

Mat ObservationNoise::covariance_at(const Vec& z) const {
    if (relative_std > 0.0 || fixed_std.size() > 0) {
        Mat cov = Mat::Zero(z.size(), z.size());
        for (int i = 0; i < z.size(); ++i) {
            double sd = (fixed_std.size() > i && fixed_std[i] > 0.0)
                            ? fixed_std[i]
                            : std::max(relative_std * std::abs(z[i]), floor_std);
            cov(i, i) = sd * sd;
        }
        return cov;
    }
    return covariance;
}

Vec observation_residual(const ObservationModel& obs, const Vec& z, const Vec& h) {
    Vec r = z - h;
    for (int ch = 0; ch < r.size(); ++ch)
        if (obs.is_angular(ch)) r[ch] = wrap_angle(r[ch]);
    return r;
}

Vec AugmentedModel::pad_truth(const Vec& base_state) const {
    Vec out(base_dim + n_params());
    out.head(base_dim) = base_state;
    out.tail(n_params()) = reference_values;
    return out;
}

AugmentedModel make_duffing(double eps1, double eps2, double eps3,
                            double f_intensity, double sigma_m, const Vec& f_mu) {
    require(eps1 > 0 && eps2 > 0 && eps3 > 0, "duffing: eps1, eps2, eps3 must be positive");
    require(f_intensity > 0, "duffing: process noise intensity must be positive");
    require(sigma_m > 0, "duffing: sigma_m must be positive");
    require(f_mu.size() == 3, "duffing: f_mu must have 3 entries");
    require((f_mu.array() > 0).all(), "duffing: parameter noise intensities must be positive");

    const double c_ref = kTwoPi * eps1;
    const double k_ref = 4.0 * kPi * kPi * eps2;
    const double alpha_ref = k_ref;
    const double forcing_amp = 4.0 * kPi * kPi * eps3;

    auto accel = [forcing_amp](double x1, double x2, double kk, double cc,
                               double aa, double t) {
        return -cc * x2 - kk * x1 - aa * x1 * x1 * x1 + forcing_amp * std::cos(kTwoPi * t);
    };

    AugmentedModel m;
    m.base_dim = 2;
    m.parameter_names = {"k", "c", "alpha"};
    m.parameter_noise = f_mu;
    m.reference_values = Vec(3);
    m.reference_values << k_ref, c_ref, alpha_ref;

    m.base.dim_state = 2;
    m.base.dim_noise = 1;
    m.base.drift = [accel, k_ref, c_ref, alpha_ref](const Vec& x, double t) {
        Vec b(2);
        b[0] = x[1];
        b[1] = accel(x[0], x[1], k_ref, c_ref, alpha_ref, t);
        return b;
    };
    m.base.diffusion = [f_intensity](const Vec&, double) {
        Mat f = Mat::Zero(2, 1);
        f(1, 0) = f_intensity;
        return f;
    };

    m.augmented.dim_state = 5;
    m.augmented.dim_noise = 4;
    m.augmented.drift = [accel](const Vec& x, double t) {
        Vec b = Vec::Zero(5);
        b[0] = x[1];
        b[1] = accel(x[0], x[1], x[2], x[3], x[4], t);
        return b;
    };
    m.augmented.diffusion = [f_intensity, f_mu](const Vec&, double) {
        Mat f = Mat::Zero(5, 4);
        f(1, 0) = f_intensity;
        f(2, 1) = f_mu[0];
        f(3, 2) = f_mu[1];
        f(4, 3) = f_mu[2];
        return f;
    };

    m.obs_sde.dim_obs = 1;
    m.obs_sde.form = ObservationModel::Form::sde_integrated;
    m.obs_sde.observe = [sigma_m](const Vec& x, double) {
        Vec h(1);
        h[0] = x[0] / sigma_m;
        return h;
    };
    m.obs_sde.noise.covariance = Mat::Identity(1, 1);

    m.obs_alg.dim_obs = 1;
    m.obs_alg.form = ObservationModel::Form::algebraic;
    m.obs_alg.observe = [](const Vec& x, double) {
        Vec h(1);
        h[0] = x[0];
        return h;
    };
    m.obs_alg.noise.covariance = Mat::Identity(1, 1) * (sigma_m * sigma_m);

    return m;
}

Mat chain_matrix(const Vec& k) {
    const int n = static_cast<int>(k.size());
    Mat K = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        K(i, i) = k[i] + (i + 1 < n ? k[i + 1] : 0.0);
        if (i + 1 < n) {
            K(i, i + 1) = -k[i + 1];
            K(i + 1, i) = -k[i + 1];
        }
    }
    return K;
}

std::function<Vec(const Vec&)> cubic_interstorey(double kappa_nl) {
    return [kappa_nl](const Vec& d) {
        const int n = static_cast<int>(d.size());
        Vec f = Vec::Zero(n);
        if (kappa_nl == 0.0) return f;
        for (int i = 0; i < n; ++i) {
            double below = d[i] - (i > 0 ? d[i - 1] : 0.0);
            double cube = below * below * below;
            f[i] += kappa_nl * cube;
            if (i > 0) f[i - 1] -= kappa_nl * cube;
        }
        return f;
    };
}

AugmentedModel make_shear_frame(const Vec& K, const Vec& C,
                                std::function<Vec(const Vec&)> nonlinear_field,
                                std::function<Vec(double)> forcing,
                                double sigma, double sigma_m, const Vec& param_noise) {
    const int ns = static_cast<int>(K.size());
    require(ns == 5, "shear frame: expected 5 storey stiffnesses");
    require(C.size() == ns, "shear frame: C must match K in length");
    require((K.array() > 0).all(), "shear frame: stiffnesses must be positive");
    require((C.array() >= 0).all(), "shear frame: dampings must be non-negative");
    require(sigma > 0, "shear frame: process noise intensity must be positive");
    require(sigma_m > 0, "shear frame: sigma_m must be positive");

    Vec pn = param_noise;
    if (pn.size() == 0) pn = Vec::Zero(2 * ns);
    require(pn.size() == 2 * ns, "shear frame: param_noise must have 10 entries");
    require((pn.array() >= 0).all(), "shear frame: param_noise must be non-negative");

    if (!nonlinear_field) nonlinear_field = cubic_interstorey(0.0);
    if (!forcing) {
        forcing = [ns](double t) {
            return Vec::Constant(ns, std::sin(kTwoPi * t)).eval();
        };
    }

    AugmentedModel m;
    m.base_dim = 2 * ns;
    m.parameter_noise = pn;
    m.reference_values = Vec(2 * ns);
    m.reference_values.head(ns) = K;
    m.reference_values.tail(ns) = C;
    for (int i = 0; i < ns; ++i) m.parameter_names.push_back("K" + std::to_string(i + 1));
    for (int i = 0; i < ns; ++i) m.parameter_names.push_back("C" + std::to_string(i + 1));

    // shared second-order dynamics; kv/cv supplied by base or read from state
    auto accel = [ns, nonlinear_field, forcing](const Vec& disp, const Vec& vel,
                                                const Vec& kv, const Vec& cv, double t) {
        Mat Km = chain_matrix(kv);
        Mat Cm = chain_matrix(cv);
        return (forcing(t) - Km * disp - Cm * vel - nonlinear_field(disp)).eval();
    };

    m.base.dim_state = 2 * ns;
    m.base.dim_noise = ns;
    m.base.drift = [ns, accel, K, C](const Vec& x, double t) {
        Vec b(2 * ns);
        b.head(ns) = x.segment(ns, ns);
        b.tail(ns) = accel(x.head(ns), x.segment(ns, ns), K, C, t);
        return b;
    };
    m.base.diffusion = [ns, sigma](const Vec&, double) {
        Mat f = Mat::Zero(2 * ns, ns);
        f.block(ns, 0, ns, ns) = sigma * Mat::Identity(ns, ns);
        return f;
    };

    const int na = 4 * ns;  // 10 base states + 10 parameters
    m.augmented.dim_state = na;
    m.augmented.dim_noise = ns + 2 * ns;
    m.augmented.drift = [ns, na, accel](const Vec& x, double t) {
        Vec b = Vec::Zero(na);
        b.head(ns) = x.segment(ns, ns);
        b.segment(ns, ns) =
            accel(x.head(ns), x.segment(ns, ns), x.segment(2 * ns, ns), x.segment(3 * ns, ns), t);
        return b;
    };
    m.augmented.diffusion = [ns, na, sigma, pn](const Vec&, double) {
        Mat f = Mat::Zero(na, 3 * ns);
        f.block(ns, 0, ns, ns) = sigma * Mat::Identity(ns, ns);
        for (int i = 0; i < 2 * ns; ++i) f(2 * ns + i, ns + i) = pn[i];
        return f;
    };

    m.obs_sde.dim_obs = ns;
    m.obs_sde.form = ObservationModel::Form::sde_integrated;
    m.obs_sde.observe = [ns, sigma_m](const Vec& x, double) {
        return (x.head(ns) / sigma_m).eval();
    };
    m.obs_sde.noise.covariance = Mat::Identity(ns, ns);

    m.obs_alg.dim_obs = ns;
    m.obs_alg.form = ObservationModel::Form::algebraic;
    m.obs_alg.observe = [ns](const Vec& x, double) { return x.head(ns).eval(); };
    m.obs_alg.noise.covariance = Mat::Identity(ns, ns) * (sigma_m * sigma_m);

    return m;
}

TrackerProblem make_tracker(double dt, const Vec& x0,
                            const std::vector<std::pair<double, Vec>>& accel_schedule,
                            double process_noise_intensity, const Vec& observer,
                            const ObservationNoise& noise) {
    require(dt > 0, "tracker: dt must be positive");
    require(x0.size() == 4, "tracker: x0 must be (x, vx, y, vy)");
    require(process_noise_intensity > 0, "tracker: process noise intensity must be positive");
    require(observer.size() == 2, "tracker: observer must be planar");
    for (const auto& [t, a] : accel_schedule)
        require(a.size() == 2, "tracker: accelerations must be planar");

    TrackerProblem p;
    p.dt = dt;
    p.x0 = x0;

    Mat F = Mat::Identity(4, 4);
    F(0, 1) = dt;
    F(2, 3) = dt;
    Mat G = Mat::Zero(4, 2);
    G(0, 0) = 0.5 * dt * dt;
    G(1, 0) = 1.0;
    G(2, 1) = 0.5 * dt * dt;
    G(3, 1) = 1.0;
    p.F = F;
    p.Gamma = G;

    const double w = std::sqrt(process_noise_intensity);

    // One EM step of size dt reproduces X' = F X + Gamma * (a + w eta):
    // drift (F - I) x / dt (+ Gamma a / dt), diffusion Gamma sqrt(q) / sqrt(dt).
    p.filter_process.dim_state = 4;
    p.filter_process.dim_noise = 2;
    p.filter_process.discrete = true;
    p.filter_process.drift = [F, dt](const Vec& x, double) {
        return (((F - Mat::Identity(4, 4)) * x) / dt).eval();
    };
    p.filter_process.diffusion = [G, w, dt](const Vec&, double) {
        return (G * (w / std::sqrt(dt))).eval();
    };

    p.truth_process = p.filter_process;
    auto schedule = accel_schedule;
    p.truth_process.drift = [F, G, dt, schedule](const Vec& x, double t) {
        Vec b = ((F - Mat::Identity(4, 4)) * x) / dt;
        for (const auto& [ts, a] : schedule) {
            if (t >= ts - 0.5 * dt && t < ts + 0.5 * dt) b += (G * a) / dt;
        }
        return b;
    };

    p.obs.dim_obs = 2;
    p.obs.form = ObservationModel::Form::algebraic;
    p.obs.angular = {true, false};
    p.obs.observe = [observer](const Vec& x, double) {
        double rx = x[0] - observer[0];
        double ry = x[2] - observer[1];
        double range = std::hypot(rx, ry);
        if (range < 1e-12)
            throw singular_geometry("tracker observation: target collocated with observer");
        Vec z(2);
        z[0] = std::atan2(ry, rx);
        z[1] = range;
        return z;
    };
    p.obs.noise = noise;
    return p;
}

LinearGaussianProblem make_linear_gaussian(double a, double q, double r,
                                           double x0_mean, double p0) {
    require(q > 0, "linear gaussian: process intensity must be positive");
    require(r > 0, "linear gaussian: observation intensity must be positive");
    require(p0 > 0, "linear gaussian: prior variance must be positive");

    LinearGaussianProblem lg;
    lg.a = a;
    lg.q = q;
    lg.r = r;
    lg.x0_mean = x0_mean;
    lg.p0 = p0;

    lg.process.dim_state = 1;
    lg.process.dim_noise = 1;
    lg.process.drift = [a](const Vec& x, double) { return (a * x).eval(); };
    lg.process.diffusion = [q](const Vec&, double) {
        return Mat::Constant(1, 1, std::sqrt(q));
    };

    // integrated channel is whitened: dY = (x / sigma_m) dt + dW, unit noise
    const double sigma_m = std::sqrt(r);
    lg.obs_sde.dim_obs = 1;
    lg.obs_sde.form = ObservationModel::Form::sde_integrated;
    lg.obs_sde.observe = [sigma_m](const Vec& x, double) { return (x / sigma_m).eval(); };
    lg.obs_sde.noise.covariance = Mat::Identity(1, 1);

    lg.obs_alg.dim_obs = 1;
    lg.obs_alg.form = ObservationModel::Form::algebraic;
    lg.obs_alg.observe = [](const Vec& x, double) { return x; };
    lg.obs_alg.noise.covariance = Mat::Constant(1, 1, r);

    return lg;
}

}  // namespace ksmc
