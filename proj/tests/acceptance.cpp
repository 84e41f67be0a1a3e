// Acceptance checks. Prints one PASS/FAIL line per criterion; `--only N` runs
// a single criterion. Exit status is nonzero if any selected criterion fails.

#include "hysis/cli.hpp"
#include "hysis/estimator.hpp"
#include "hysis/experiments.hpp"
#include "hysis/ingest.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace hysis;
using hysis::testing::reference_spec;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    std::vector<std::string> notes; ///< printed, never fail the criterion
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0)
{
    char buffer[160];
    std::snprintf(buffer, sizeof buffer, pattern, a, b);
    return buffer;
}

ExperimentPlan reference_plan()
{
    ExperimentPlan plan{Scenario{reference_spec(), 0.05, std::nullopt}};
    plan.seed = 20240611;
    return plan;
}

Outcome exact_recovery()
{
    Outcome o;
    auto start = Clock::now();
    Rng rng(2024);
    double worst_rel = 0.0;
    double worst_residual = 0.0;
    int rejected = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto c = hysis::testing::random_identifiable_case(rng, static_cast<std::size_t>(trial % 4), &rejected);
        auto result = estimate(build_regression(c.trajectory, c.spec.schedule()));
        auto truth = c.spec.theta();
        for (std::size_t j = 0; j < truth.size(); ++j) {
            worst_rel = std::max(worst_rel, std::abs(result.theta[j] - truth[j]) / std::abs(truth[j]));
        }
        worst_residual = std::max(worst_residual, result.residual_norm);
    }
    double elapsed = seconds_since(start);
    o.pass = worst_rel <= 1e-8 && worst_residual <= 1e-10 && elapsed < 5.0;
    o.detail = fmt("max rel error %.3g, max residual %.3g", worst_rel, worst_residual) + fmt(", %.2f s", elapsed) +
               ", " + std::to_string(rejected) + " draws rejected (out of range or not identifiable)";
    return o;
}

Outcome noiseless_sweep()
{
    Outcome o;
    auto start = Clock::now();
    auto plan = reference_plan();
    plan.regimes = {Regime::Noiseless};
    plan.h_values = {1.0, 0.5, 0.2, 0.1, 0.05};
    auto study = run_noise_study(plan);
    double elapsed = seconds_since(start);

    const auto* h1 = study.find(Regime::Noiseless, 1.0);
    double worst = 0.0;
    for (double e : h1->median_r0_error) {
        worst = std::max(worst, e);
    }
    bool trend = true;
    for (std::size_t i = 0; i < h1->median_r0_error.size(); ++i) {
        double previous = h1->median_r0_error[i];
        for (double h : plan.h_values) {
            double e = study.find(Regime::Noiseless, h)->median_r0_error[i];
            trend = trend && e <= previous;
            previous = e;
        }
    }
    o.pass = h1->failed == 0 && worst <= 0.0125 + 0.005 && trend && elapsed < 10.0;
    o.detail = fmt("h=1 max R0 error %.4f (bound 0.0175)", worst) + (trend ? ", trend non-increasing" : ", TREND BROKEN") +
               fmt(", %.2f s", elapsed);
    return o;
}

Outcome observation_noise()
{
    Outcome o;
    auto start = Clock::now();
    auto plan = reference_plan();
    plan.regimes = {Regime::Observation};
    plan.sigma = 0.02;
    plan.trials = 32;
    auto study = run_noise_study(plan);
    double elapsed = seconds_since(start);

    double worst_median = 0.0;
    double worst_h = 0.0;
    for (double h : plan.h_values) {
        const auto* cell = study.find(Regime::Observation, h);
        for (std::size_t i = 0; i < cell->median_r0_error.size(); ++i) {
            double med = cell->median_r0_error[i];
            if (!(med < 0.08)) {
                o.pass = false;
            }
            if (med > worst_median) {
                worst_median = med;
                worst_h = h;
            }
            if (cell->max_r0_error[i] > 0.16) {
                o.notes.push_back(fmt("investigate: h=%g max-over-trials R0 error %.4f > 0.16", h,
                                      cell->max_r0_error[i]) +
                                  " (interval " + std::to_string(i) + ")");
            }
        }
        o.pass = o.pass && cell->failed == 0;
    }
    o.pass = o.pass && elapsed < 60.0;
    o.detail = fmt("worst median R0 error %.4f at h=%g (bound < 0.08)", worst_median, worst_h) +
               fmt(", %.2f s", elapsed);
    return o;
}

Outcome process_noise()
{
    Outcome o;
    auto start = Clock::now();
    auto plan = reference_plan();
    plan.regimes = {Regime::Process};
    plan.sigma = 0.02;
    plan.trials = 32;
    auto study = run_noise_study(plan);
    double elapsed = seconds_since(start);

    double worst_param = 0.0;
    double worst_r0 = 0.0;
    for (double h : plan.h_values) {
        const auto* cell = study.find(Regime::Process, h);
        o.pass = o.pass && cell->failed == 0;
        for (double e : cell->median_parameter_error) {
            worst_param = std::max(worst_param, e);
        }
        for (double e : cell->median_r0_error) {
            worst_r0 = std::max(worst_r0, e);
        }
    }
    o.pass = o.pass && worst_param <= 0.50 && worst_r0 <= 0.04 && elapsed < 60.0;
    o.detail = fmt("worst median parameter error %.4f (bound 0.50), worst median R0 error %.4f (bound 0.04)",
                   worst_param, worst_r0) +
               fmt(", %.2f s", elapsed);
    return o;
}

Outcome identifiability_iff()
{
    Outcome o;
    Rng rng(31337);
    int mismatches = 0;
    int identifiable = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t m = static_cast<std::size_t>(trial % 4);
        std::vector<int> steps;
        int t = hysis::testing::uniform_int(rng, 1, 10);
        for (std::size_t i = 0; i < m; ++i) {
            steps.push_back(t);
            t += hysis::testing::uniform_int(rng, 1, 10);
        }
        UpdateSchedule schedule(steps, t, hysis::testing::uniform(rng, 0.05, 1.5));
        std::vector<double> x(static_cast<std::size_t>(t) + 1);
        for (double& v : x) {
            v = rng.uniform();
        }
        // Planted degeneracies: zero jump states, constant or zero segments.
        for (std::size_t i = 0; i < schedule.interval_count(); ++i) {
            StepRange r = sis_step_range(schedule, i);
            double plant = rng.uniform();
            if (plant < 0.12 && i > 0) {
                x[static_cast<std::size_t>(schedule.interval_begin(i) - 1)] = 0.0;
            } else if (plant < 0.24) {
                double c = rng.uniform();
                for (int k = r.first; k <= r.last; ++k) {
                    x[static_cast<std::size_t>(k)] = c;
                }
            } else if (plant < 0.3) {
                for (int k = r.first; k <= r.last; ++k) {
                    x[static_cast<std::size_t>(k)] = 0.0;
                }
            }
        }
        Trajectory traj(x, schedule.step_size());
        auto system = build_regression(traj, schedule);
        auto report = check_identifiability(system, traj, schedule);
        bool numeric = hysis::testing::dense_rank(system.psi, kRankTolerance) == system.psi.cols();
        mismatches += report.overall != numeric ? 1 : 0;
        identifiable += report.overall ? 1 : 0;
    }
    o.pass = mismatches == 0;
    o.detail = std::to_string(mismatches) + " mismatches over 200 trajectories (" + std::to_string(identifiable) +
               " identifiable, " + std::to_string(200 - identifiable) + " not)";
    return o;
}

Outcome simplification_grid()
{
    Outcome o;
    int mismatches = 0;
    const long n = 49;
    for (long a = 0; a <= n; ++a) {
        for (long b = 0; b <= n; ++b) {
            // Exact arithmetic on the grid x = a / 49.
            bool inequality = a * (n - b) * b != b * (n - a) * a;
            bool simplified = a * b * (a - b) != 0;
            std::vector<double> pair{static_cast<double>(a) / n, static_cast<double>(b) / n};
            mismatches += (inequality != simplified || has_variation(pair) != inequality) ? 1 : 0;
        }
    }
    o.pass = mismatches == 0;
    o.detail = std::to_string(mismatches) + " mismatches over the 50x50 grid";
    return o;
}

Outcome sde_degeneracy()
{
    Outcome o;
    SimulationConfig config;
    config.integrator = Integrator::Euler;
    config.sigma = 0.0;
    config.seed = 17;
    int differing = 0;
    for (int substeps : {1, 10, 100}) {
        config.fine_substeps = substeps;
        auto ct = simulate_ct(reference_spec(), 0.05, config).trajectory;
        auto sde = simulate_sde(reference_spec(), 0.05, config).trajectory;
        for (std::size_t k = 0; k < ct.size(); ++k) {
            differing += ct[k] != sde[k] ? 1 : 0;
        }
    }
    o.pass = differing == 0;
    o.detail = std::to_string(differing) + " samples differ (substeps 1, 10, 100)";
    return o;
}

Outcome real_data()
{
    Outcome o;
    const std::int64_t n = 1000000;
    auto spec = reference_spec();
    auto x = simulate_dt(spec, 0.05).trajectory;
    AlignedDataset synthetic{x.with_population(n), spec.schedule(), n, parse_date("2023-01-01"), false, {}};
    auto report = run_realdata_study(synthetic);
    bool exact = report.estimate.has_value() && report.rmse_counts <= 1e-6;

    // A count series written to disk and run through the command-line fit:
    // seasonal process-noise data standing in for a real export.
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "hysis_acceptance";
    fs::create_directories(dir);
    SimulationConfig config;
    config.sigma = 0.05;
    config.seed = 8;
    config.fine_substeps = 10;
    config.range_policy = RangePolicy::Clamp;
    auto noisy = simulate_sde(spec, 0.05, config).trajectory;
    Date start = parse_date("2021-02-01");
    {
        std::ofstream csv(dir / "players.csv");
        csv << "date,peak_players\n";
        for (std::size_t k = 0; k < noisy.size(); ++k) {
            double weekly = 1.0 + 0.04 * ((k % 7) >= 5 ? 1.0 : -0.4);
            csv << format_date(start + std::chrono::days(k)) << ','
                << std::llround(std::min(1.0, noisy[k] * weekly) * static_cast<double>(n)) << '\n';
        }
        std::ofstream updates(dir / "updates.json");
        updates << "[\"" << format_date(start + std::chrono::days(30)) << "\", \""
                << format_date(start + std::chrono::days(90)) << "\"]\n";
    }
    std::ostringstream out;
    std::ostringstream err;
    int code = hysis::cli::run({"fit", "--data", (dir / "players.csv").string(), "--updates",
                                (dir / "updates.json").string(), "--population", std::to_string(n), "--out",
                                (dir / "fit.json").string()},
                               out, err);
    double rmse = -1.0;
    if (code == 0) {
        std::ifstream in(dir / "fit.json");
        auto j = Json::parse(in);
        rmse = j.value("rmse_counts", -1.0);
    }
    fs::remove_all(dir);
    bool completes = code == 0 && rmse >= 0.0 && std::isfinite(rmse);
    o.pass = exact && completes;
    o.detail = fmt("synthetic re-simulation RMSE %.3g counts; CSV fit RMSE %.1f counts", report.rmse_counts, rmse) +
               (completes ? "" : " (CSV pipeline failed: " + err.str() + ")");
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv)
{
    int only = 0;
    if (argc == 3 && std::strcmp(argv[1], "--only") == 0) {
        only = std::atoi(argv[2]);
    } else if (argc != 1) {
        std::cerr << "usage: acceptance [--only N]\n";
        return 2;
    }
    const std::vector<Criterion> criteria{
        {1, "exact recovery on random specs", exact_recovery},
        {2, "noiseless h-sweep", noiseless_sweep},
        {3, "observation noise", observation_noise},
        {4, "process noise", process_noise},
        {5, "identifiability iff rank", identifiability_iff},
        {6, "variation simplification grid", simplification_grid},
        {7, "SDE with zero noise equals Euler", sde_degeneracy},
        {8, "real-data pipeline", real_data},
    };
    int failures = 0;
    int ran = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) {
            continue;
        }
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail << '\n';
        for (const auto& note : o.notes) {
            std::cout << "      " << note << '\n';
        }
        failures += o.pass ? 0 : 1;
    }
    if (ran == 0) {
        std::cerr << "no criterion " << only << '\n';
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
