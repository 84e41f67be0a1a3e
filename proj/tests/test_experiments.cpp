#include "hysis/errors.hpp"
#include "hysis/experiments.hpp"
#include "hysis/simulator.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hysis;
using hysis::testing::reference_spec;

namespace {

ExperimentPlan reference_plan()
{
    return ExperimentPlan{Scenario{reference_spec(), 0.05, std::nullopt}};
}

std::string tables(const NoiseStudy& study)
{
    std::ostringstream out;
    write_parameter_table(out, study);
    write_r0_table(out, study);
    out << summary_json(study).dump();
    return out.str();
}

AlignedDataset synthetic_dataset(const HybridModelSpec& spec, double x0, std::int64_t n)
{
    auto x = simulate_dt(spec, x0).trajectory;
    return AlignedDataset{x.with_population(n), spec.schedule(), n, parse_date("2023-01-01"), false, {}};
}

} // namespace

TEST(Plan, DefaultsAndParsing)
{
    auto plan = reference_plan();
    EXPECT_EQ(plan.h_values, (std::vector<double>{1.0, 0.5, 0.2, 0.1, 0.05, 0.02}));
    EXPECT_EQ(plan.sigma, 0.02);
    auto j = to_json(plan);
    auto back = plan_from_json(j);
    EXPECT_EQ(back.scenario.spec, plan.scenario.spec);
    EXPECT_EQ(back.trials, plan.trials);
    j["trails"] = 3;
    EXPECT_THROW(plan_from_json(j), ValidationError);
    auto bad = to_json(plan);
    bad["regimes"] = Json::array({"observational"});
    EXPECT_THROW(plan_from_json(bad), ValidationError);
}

TEST(Plan, BundledPlanLoads)
{
    auto j = read_json_file(HYSIS_TEST_DATA_DIR "/study_plan.json");
    j["scenario"] = read_json_file(HYSIS_TEST_DATA_DIR "/reference_scenario.json");
    auto plan = plan_from_json(j);
    EXPECT_EQ(plan.scenario.spec, reference_spec());
    EXPECT_EQ(plan.trials, 32);
}

TEST(NoiseStudy, NoiselessSweepBoundAndTrend)
{
    auto plan = reference_plan();
    plan.regimes = {Regime::Noiseless};
    plan.trials = 5;
    auto study = run_noise_study(plan);
    ASSERT_EQ(study.summary.size(), 6u);
    const auto* h1 = study.find(Regime::Noiseless, 1.0);
    ASSERT_NE(h1, nullptr);
    EXPECT_EQ(h1->trials, 1);
    for (double e : h1->median_r0_error) {
        EXPECT_LE(e, 0.0125 + 0.005);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        double previous = 1.0;
        for (double h : {1.0, 0.5, 0.2, 0.1, 0.05}) {
            double e = study.find(Regime::Noiseless, h)->median_r0_error[i];
            EXPECT_LE(e, previous) << "interval " << i << " h=" << h;
            previous = e;
        }
    }
}

TEST(NoiseStudy, ReproducibleTables)
{
    auto plan = reference_plan();
    plan.trials = 3;
    plan.h_values = {1.0, 0.1};
    plan.seed = 77;
    EXPECT_EQ(tables(run_noise_study(plan)), tables(run_noise_study(plan)));
    auto other = plan;
    other.seed = 78;
    EXPECT_NE(tables(run_noise_study(plan)), tables(run_noise_study(other)));
}

TEST(NoiseStudy, CellSeedsIndependentOfSweepOrder)
{
    auto plan = reference_plan();
    plan.regimes = {Regime::Process};
    plan.trials = 2;
    plan.h_values = {1.0, 0.5};
    auto forward = run_noise_study(plan);
    plan.regimes = {Regime::Noiseless, Regime::Process};
    auto with_extra = run_noise_study(plan);
    EXPECT_EQ(forward.find(Regime::Process, 0.5)->median_r0_error,
              with_extra.find(Regime::Process, 0.5)->median_r0_error);
}

TEST(NoiseStudy, NoisyCellsDominateNoiseless)
{
    auto plan = reference_plan();
    plan.seed = 12;
    auto study = run_noise_study(plan);
    for (Regime regime : {Regime::Observation, Regime::Process}) {
        for (double h : plan.h_values) {
            const auto* noisy = study.find(regime, h);
            const auto* clean = study.find(Regime::Noiseless, h);
            for (std::size_t j = 0; j < study.parameter_names.size(); ++j) {
                EXPECT_GE(noisy->median_parameter_error[j], clean->median_parameter_error[j])
                    << to_string(regime) << " h=" << h << " " << study.parameter_names[j];
            }
        }
    }
}

TEST(NoiseStudy, FailedCellsDoNotAbort)
{
    auto plan = reference_plan();
    plan.regimes = {Regime::Noiseless};
    plan.h_values = {20.0, 1.0};
    auto study = run_noise_study(plan);
    ASSERT_EQ(study.summary.size(), 2u);
    EXPECT_EQ(study.find(Regime::Noiseless, 20.0)->failed, 1);
    EXPECT_FALSE(study.cells[0].identifiability.overall);
    EXPECT_FALSE(study.cells[0].identifiability.intervals[0].length_ok);
    EXPECT_EQ(study.find(Regime::Noiseless, 1.0)->failed, 0);
    auto summary = summary_json(study);
    EXPECT_EQ(summary["failures"].size(), 1u);
}

TEST(NoiseStudy, RejectsOffGridStep)
{
    auto plan = reference_plan();
    plan.h_values = {0.015};
    EXPECT_THROW(run_noise_study(plan), ValidationError);
}

TEST(NoiseStudy, TableHeaders)
{
    auto plan = reference_plan();
    plan.regimes = {Regime::Noiseless};
    plan.h_values = {1.0};
    auto study = run_noise_study(plan);
    std::ostringstream params;
    write_parameter_table(params, study);
    EXPECT_EQ(params.str().substr(0, params.str().find('\n')), "regime,h,trial,param,true,estimate,rel_error");
    EXPECT_NE(params.str().find("noiseless,1,0,beta0,0.5,"), std::string::npos);
    std::ostringstream r0;
    write_r0_table(r0, study);
    EXPECT_EQ(r0.str().substr(0, r0.str().find('\n')), "regime,h,trial,interval,r0_true,r0_est,rel_error");
}

TEST(Median, OddEvenEmpty)
{
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
    EXPECT_TRUE(std::isnan(median({})));
}

TEST(RealData, SyntheticDtIsReproducedExactly)
{
    auto dataset = synthetic_dataset(reference_spec(), 0.05, 1000000);
    auto report = run_realdata_study(dataset);
    ASSERT_TRUE(report.estimate.has_value());
    EXPECT_LE(report.rmse_counts, 1e-6);
    for (double e : report.interval_rmse_counts) {
        EXPECT_LE(e, 1e-6);
    }
    EXPECT_EQ(report.interval_rmse_counts.size(), 3u);
}

TEST(RealData, ConstantDataReportsFailure)
{
    const std::int64_t n = 1000000;
    AlignedDataset dataset{Trajectory(std::vector<double>(151, 0.6), 1.0, n), reference_spec().schedule(), n,
                           parse_date("2023-01-01"), false, {}};
    auto report = run_realdata_study(dataset);
    EXPECT_FALSE(report.identifiability.overall);
    EXPECT_FALSE(report.estimate.has_value());
    EXPECT_FALSE(report.identifiability.intervals[0].reasons.empty());
    auto lenient = run_realdata_study(dataset, {std::nullopt, true});
    EXPECT_TRUE(lenient.estimate.has_value());
    EXPECT_FALSE(lenient.warnings.empty());
}

TEST(RealData, HoldoutLastIntervalMinusThree)
{
    auto spec = reference_spec();
    auto dataset = synthetic_dataset(spec, 0.05, 1000000);
    // Last interval spans steps 90..150; keep three of its steps.
    int holdout = (150 - 90) - 3;
    auto report = run_realdata_study(dataset, {holdout, false});
    ASSERT_TRUE(report.holdout.has_value());
    EXPECT_EQ(report.holdout->fit_steps, 93);
    EXPECT_TRUE(report.holdout->identifiability.overall);
    EXPECT_TRUE(report.holdout->produced);
    EXPECT_LE(report.holdout->rmse_counts, 1e-6);

    // A constant tail leaves the truncated last interval without variation.
    std::vector<double> x(dataset.trajectory.values().begin(), dataset.trajectory.values().end());
    for (std::size_t k = 90; k < x.size(); ++k) {
        x[k] = 0.3;
    }
    AlignedDataset flat{Trajectory(x, 1.0, 1000000), spec.schedule(), 1000000, dataset.start_date, false, {}};
    auto flat_report = run_realdata_study(flat, {holdout, true});
    EXPECT_FALSE(flat_report.holdout->produced);
    EXPECT_FALSE(flat_report.holdout->identifiability.intervals[2].variation_ok);
}

TEST(RealData, HoldoutAcrossUpdateWarns)
{
    auto dataset = synthetic_dataset(reference_spec(), 0.05, 1000000);
    auto report = run_realdata_study(dataset, {70, false});
    ASSERT_TRUE(report.holdout.has_value());
    EXPECT_TRUE(report.holdout->tail_contains_updates);
    EXPECT_FALSE(report.warnings.empty());
    EXPECT_THROW(run_realdata_study(dataset, {150, false}), ValidationError);
}

TEST(RealData, HoldoutOnUpdateStepStopsEarlier)
{
    auto dataset = synthetic_dataset(reference_spec(), 0.05, 1000000);
    auto report = run_realdata_study(dataset, {60, false});
    EXPECT_EQ(report.holdout->fit_steps, 89);
    EXPECT_EQ(report.holdout->horizon, 61);
}
