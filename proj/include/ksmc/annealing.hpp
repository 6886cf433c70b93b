#pragma once

#include <vector>

#include "ksmc/common.hpp"

namespace ksmc {

/// Inverse-temperature schedule state for the inner update loop. `beta`
/// is the value used at inner iteration `k` (k starts at 1); advancing the
/// schedule produces the value for k+1. Both variants keep beta positive and
/// non-increasing.
struct ScheduleState {
    enum class Variant { exponential, lam };
    Variant variant = Variant::exponential;
    double beta = 1.0;
    int k = 1;
    double lambda = 0.5;               // Lam aggressiveness
    std::vector<double> energy_history;  // mean innovation energy per iteration
    bool held = false;                 // Lam: last advance skipped (zero spread)

    static ScheduleState exponential(double beta1);
    static ScheduleState lam(double beta1, double lambda);
};

/// beta_{k+1} = beta_k / exp(k+1). With beta_1 = 1 the value used at k = 2 is
/// exp(-2), and five advances reach exp(-(2+3+4+5+6)) = exp(-20).
void next_beta_exponential(ScheduleState& s);

/// Statistics-driven advance 1/beta_{k+1} = 1/beta_k + lambda * rho / (2 sigma^3)
/// where rho is the mean squared change of per-particle innovation energies
/// between the last two iterations and sigma their current spread (population
/// convention). Zero spread holds beta and sets `held`.
void next_beta_lam(ScheduleState& s, const std::vector<double>& prev_energies,
                   const std::vector<double>& energies);

}  // namespace ksmc
