#pragma once

#include "hysis/estimator.hpp"
#include "hysis/ingest.hpp"
#include "hysis/io.hpp"
#include "hysis/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hysis {

enum class Regime { Noiseless, Observation, Process };

std::string to_string(Regime regime);
Regime regime_from_string(const std::string& name);

/// Step-size sweep over noise regimes.
///
/// The scenario's update times are t_i = T_i h and its horizon is
/// T_{m+1} h. Truth is generated once on a grid of spacing truth_step
/// (RK4 with truth_substeps substeps per sample, or Euler-Maruyama for the
/// process regime) and subsampled for every h in the sweep, with
/// T_i(h) = ceil(t_i / h).
struct ExperimentPlan {
    Scenario scenario;
    std::vector<Regime> regimes{Regime::Noiseless, Regime::Observation, Regime::Process};
    std::vector<double> h_values{1.0, 0.5, 0.2, 0.1, 0.05, 0.02};
    double sigma = 0.02;
    int trials = 32; ///< noisy regimes only; the noiseless regime always runs once
    std::uint64_t seed = 0;
    double truth_step = 0.01;
    int truth_substeps = 10;
};

ExperimentPlan plan_from_json(const Json& j);
Json to_json(const ExperimentPlan& plan);

struct CellResult {
    Regime regime = Regime::Noiseless;
    double h = 0.0;
    int trial = 0;
    bool ok = false;
    IdentifiabilityReport identifiability;
    std::optional<EstimationResult> estimate; ///< carries `errors` when ok
    std::size_t clamp_count = 0;
};

struct CellSummary {
    Regime regime = Regime::Noiseless;
    double h = 0.0;
    int trials = 0;
    int failed = 0;
    std::vector<double> median_parameter_error;
    std::vector<double> max_parameter_error;
    std::vector<double> median_r0_error;
    std::vector<double> max_r0_error;
};

struct NoiseStudy {
    std::vector<std::string> parameter_names;
    std::vector<CellResult> cells;     ///< ordered by regime, h, trial
    std::vector<CellSummary> summary;  ///< ordered by regime, h

    const CellSummary* find(Regime regime, double h) const;
};

/// Runs every (regime, h, trial) cell. Cells that fail the identifiability
/// check are kept with their report and excluded from the summary statistics.
NoiseStudy run_noise_study(const ExperimentPlan& plan);

/// `regime,h,trial,param,true,estimate,rel_error`
void write_parameter_table(std::ostream& out, const NoiseStudy& study);
/// `regime,h,trial,interval,r0_true,r0_est,rel_error`
void write_r0_table(std::ostream& out, const NoiseStudy& study);
Json summary_json(const NoiseStudy& study);

double median(std::vector<double> values);

struct HoldoutForecast {
    int fit_steps = 0;     ///< samples 0..fit_steps were used for fitting
    int horizon = 0;
    bool produced = false;
    bool tail_contains_updates = false;
    IdentifiabilityReport identifiability;
    std::optional<Trajectory> forecast;
    double rmse_counts = 0.0;
};

struct RealDataReport {
    IdentifiabilityReport identifiability;
    std::optional<EstimationResult> estimate;
    std::optional<Trajectory> resimulated;
    std::vector<double> interval_rmse_counts;
    double rmse_counts = 0.0;
    std::optional<HoldoutForecast> holdout;
    std::vector<std::string> warnings;
};

struct RealDataOptions {
    std::optional<int> holdout;
    bool lenient = false; ///< estimate even when identifiability fails
};

/// Fits every interval at once, re-simulates from x^0 with the estimates
/// only and reports RMSE in count units. With a holdout the tail is cut off,
/// the prefix is refit and the tail is forecast from the last fitted sample.
RealDataReport run_realdata_study(const AlignedDataset& dataset, const RealDataOptions& options = {});

Json to_json(const RealDataReport& report, const AlignedDataset& dataset);

} // namespace hysis
