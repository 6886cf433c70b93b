#include "ksmc/annealing.hpp"

#include <cmath>

namespace ksmc {

ScheduleState ScheduleState::exponential(double beta1) {
    require(beta1 > 0, "schedule: beta1 must be positive");
    ScheduleState s;
    s.variant = Variant::exponential;
    s.beta = beta1;
    return s;
}

ScheduleState ScheduleState::lam(double beta1, double lambda) {
    require(beta1 > 0, "schedule: beta1 must be positive");
    require(lambda > 0, "schedule: lambda must be positive");
    ScheduleState s;
    s.variant = Variant::lam;
    s.beta = beta1;
    s.lambda = lambda;
    return s;
}

void next_beta_exponential(ScheduleState& s) {
    s.beta /= std::exp(static_cast<double>(s.k + 1));
    s.k += 1;
}

void next_beta_lam(ScheduleState& s, const std::vector<double>& prev_energies,
                   const std::vector<double>& energies) {
    if (energies.size() < 2 || prev_energies.size() != energies.size())
        throw insufficient_data("lam schedule: need matching energy snapshots from two iterations");
    const double n = static_cast<double>(energies.size());
    double rho = 0.0, mean = 0.0;
    for (std::size_t j = 0; j < energies.size(); ++j) {
        const double d = energies[j] - prev_energies[j];
        rho += d * d;
        mean += energies[j];
    }
    rho /= n;
    mean /= n;
    double var = 0.0;
    for (double e : energies) var += (e - mean) * (e - mean);
    var /= n;
    const double sigma = std::sqrt(var);
    if (sigma <= 0.0) {
        s.held = true;  // degenerate spread: freeze rather than divide by zero
        s.k += 1;
        return;
    }
    s.held = false;
    s.beta = 1.0 / (1.0 / s.beta + s.lambda * rho / (2.0 * sigma * sigma * sigma));
    s.k += 1;
}

}  // namespace ksmc
