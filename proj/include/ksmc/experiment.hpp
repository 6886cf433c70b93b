#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ksmc/baselines.hpp"
#include "ksmc/config.hpp"
#include "ksmc/diagnostics.hpp"
#include "ksmc/models.hpp"
#include "ksmc/record.hpp"

namespace ksmc {

/// Everything a campaign needs, assembled from an ExperimentConfig: the
/// process models for truth and filtering (they differ for augmented and
/// maneuvering problems), the available observation records, the truth
/// initial law and the filter's initial ensemble.
struct BuiltProblem {
    ProcessModel truth_model;
    ProcessModel filter_model;
    bool has_sde = false;
    bool has_alg = false;
    ObservationModel obs_sde;
    ObservationModel obs_alg;
    Vec truth_x0_mean;
    Vec truth_x0_std;  // zero entries make the truth start deterministic
    InitialEnsemble init;
    bool augmented = false;
    AugmentedModel aug;  // valid when augmented
    bool has_lg = false;
    LinearGaussianProblem lg;  // valid for the linear_gaussian experiment

    const ObservationModel& consumed_obs(const std::string& obs_form) const;
};

BuiltProblem build_problem(const ExperimentConfig& cfg);

/// Truth initial state for one seed (domain-separated draws).
Vec draw_truth_x0(const BuiltProblem& bp, const RngStream& rng);

struct FilterRuns {
    std::string name;
    std::vector<RunRecord> runs;  // one per seed, seed order
};

struct CampaignResult {
    ExperimentConfig cfg;
    std::vector<std::uint64_t> seeds;
    std::vector<Trajectory> truths;  // per seed
    std::vector<FilterRuns> filters;
};

/// Runs every configured filter on every seed's shared truth. Seeds are
/// processed by `jobs` worker threads; all randomness is counter-addressed,
/// so the result is identical for any job count. truth_only skips the
/// filters (the `generate` subcommand).
CampaignResult run_campaign(const ExperimentConfig& cfg, int jobs, bool truth_only = false);

/// Writes truth and run CSVs plus summary.txt and manifest.cfg into out_dir
/// (created if missing) and returns the manifest hash. seed_source records
/// where the base seed came from ("config", "cli" or "env").
std::uint64_t write_campaign(const CampaignResult& result, const std::string& out_dir,
                             const std::string& seed_source);

struct FilterSummary {
    std::string name;
    Vec rmse_by_component;     // time RMSE per component, averaged over seeds
    double rmse_total = 0.0;
    double tail_rmse_total = 0.0;    // same, final quarter of the run
    double whiteness_fraction = 0.0; // per-step whiteness pass rate, averaged
    double mean_ess_fraction = 0.0;  // NaN for unweighted filters
    int degeneracy_events = 0;
};

struct CampaignSummary {
    std::vector<FilterSummary> filters;
};

CampaignSummary summarize(const CampaignResult& result);
std::string render_summary(const CampaignSummary& summary);

struct SweepResult {
    std::vector<double> levels;
    std::vector<double> errors;  // seed-averaged RMSE against the reference filter
    RateFit fit;
};

/// Ensemble-size sweep on the linear-Gaussian problem: for each N the filter
/// mean is compared against the same-step Kalman reference on shared data.
SweepResult n_sweep(const ExperimentConfig& cfg, const std::vector<int>& ensemble_sizes,
                    int sweep_seeds);

/// Step-size sweep: one finely sampled truth per seed, coarser levels consume
/// subsampled increments, and every level is compared against the Kalman
/// reference run at the finest grid.
SweepResult dt_sweep(const ExperimentConfig& cfg, const std::vector<double>& dts,
                     int sweep_seeds);

}  // namespace ksmc
