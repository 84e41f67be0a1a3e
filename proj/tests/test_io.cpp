#include "hysis/errors.hpp"
#include "hysis/io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hysis;
using hysis::testing::reference_spec;

TEST(ScenarioJson, BundledScenarioLoads)
{
    auto scenario = load_scenario(HYSIS_TEST_DATA_DIR "/reference_scenario.json");
    EXPECT_EQ(scenario.spec, reference_spec());
    EXPECT_EQ(scenario.x0, 0.05);
    EXPECT_FALSE(scenario.population.has_value());
}

TEST(ScenarioJson, RoundTrip)
{
    Scenario s{reference_spec(0.5), 0.1, 1000000};
    auto back = scenario_from_json(to_json(s));
    EXPECT_EQ(back.spec, s.spec);
    EXPECT_EQ(back.x0, s.x0);
    EXPECT_EQ(back.population, s.population);
}

TEST(ScenarioJson, FieldNamesAndOrder)
{
    Scenario s{reference_spec(), 0.05, std::nullopt};
    EXPECT_EQ(to_json(s).dump(),
              R"({"h":1.0,"update_steps":[30,90],"final_step":150,"intervals":[{"beta":0.5,"gamma":0.2},)"
              R"({"alpha":0.5,"beta":0.19,"gamma":0.15},{"alpha":-0.3,"beta":0.25,"gamma":0.15}],"x0":0.05})");
}

TEST(ScenarioJson, Rejections)
{
    auto base = to_json(Scenario{reference_spec(), 0.05, std::nullopt});
    auto alpha_first = base;
    alpha_first["intervals"][0]["alpha"] = 0.1;
    EXPECT_THROW(scenario_from_json(alpha_first), ValidationError);
    auto missing_alpha = base;
    missing_alpha["intervals"][1].erase("alpha");
    EXPECT_THROW(scenario_from_json(missing_alpha), ValidationError);
    auto unknown = base;
    unknown["X0"] = 0.1;
    EXPECT_THROW(scenario_from_json(unknown), ValidationError);
    auto bad_x0 = base;
    bad_x0["x0"] = 1.5;
    EXPECT_THROW(scenario_from_json(bad_x0), ValidationError);
    auto wrong_type = base;
    wrong_type["final_step"] = "150";
    EXPECT_THROW(scenario_from_json(wrong_type), ValidationError);
    auto bad_steps = base;
    bad_steps["update_steps"] = Json::array({90, 30});
    EXPECT_THROW(scenario_from_json(bad_steps), ValidationError);
}

TEST(ScheduleJson, ScenarioDoublesAsSchedule)
{
    auto s = load_schedule(HYSIS_TEST_DATA_DIR "/reference_scenario.json");
    EXPECT_EQ(s, reference_spec().schedule());
}

TEST(TrajectoryCsv, Format)
{
    std::ostringstream out;
    write_trajectory_csv(out, Trajectory({0.1, 0.25, 0.5}, 0.5, 1000));
    EXPECT_EQ(out.str(), "step,time,x,count\n0,0,0.10000000000000001,100\n1,0.5,0.25,250\n2,1,0.5,500\n");
    std::ostringstream plain;
    write_trajectory_csv(plain, Trajectory({0.1, 0.25}, 1.0), 3);
    EXPECT_EQ(plain.str(), "step,time,x\n0,0,0.1\n1,1,0.25\n");
}

TEST(TrajectoryCsv, RoundTripIsLossless)
{
    auto x = simulate_dt(reference_spec(0.1), 0.05).trajectory.with_population(1000000);
    std::stringstream buffer;
    write_trajectory_csv(buffer, x);
    auto back = read_trajectory_csv(buffer);
    EXPECT_EQ(back.trajectory, x);
    EXPECT_EQ(back.clamp_count, 0u);
}

TEST(TrajectoryCsv, PopulationRecoveredDespiteRounding)
{
    // 0.6000004 N rounds to 600000, so count / x alone would suggest 999999.
    Trajectory x({0.1, 0.6000004, 0.3}, 1.0, 1000000);
    std::stringstream buffer;
    write_trajectory_csv(buffer, x);
    EXPECT_EQ(read_trajectory_csv(buffer).trajectory.population(), std::optional<std::int64_t>(1000000));
}

TEST(TrajectoryCsv, ReadClampsAndValidates)
{
    std::istringstream clampy("step,time,x\n0,0,-0.01\n1,1,0.5\n2,2,1.2\n");
    auto loaded = read_trajectory_csv(clampy);
    EXPECT_EQ(loaded.clamp_count, 2u);
    EXPECT_EQ(loaded.trajectory[2], 1.0);

    std::istringstream bad_header("t,x\n0,0.1\n");
    EXPECT_THROW(read_trajectory_csv(bad_header), ValidationError);
    std::istringstream bad_steps("step,time,x\n0,0,0.1\n2,2,0.2\n");
    EXPECT_THROW(read_trajectory_csv(bad_steps), ValidationError);
    std::istringstream bad_number("step,time,x\n0,0,0.1\n1,1,abc\n");
    EXPECT_THROW(read_trajectory_csv(bad_number), ValidationError);
    std::istringstream one_row("step,time,x\n0,0,0.1\n");
    EXPECT_THROW(read_trajectory_csv(one_row), ValidationError);
}

TEST(ResultJson, KeyOrder)
{
    auto spec = reference_spec();
    auto x = simulate_dt(spec, 0.05).trajectory;
    auto sys = build_regression(x, spec.schedule());
    auto result = estimate(sys);
    result.errors = error_metrics(result, spec);
    auto j = to_json(result, check_identifiability(sys, x, spec.schedule()));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) {
        keys.push_back(it.key());
    }
    EXPECT_EQ(keys, (std::vector<std::string>{"theta", "intervals", "r0", "residual_norm", "identifiability", "errors",
                                              "unique", "warnings"}));
    EXPECT_EQ(j["identifiability"]["psi_rank"], 8);
    EXPECT_LE(j["errors"]["max_parameter_error"].get<double>(), 1e-8);
}
