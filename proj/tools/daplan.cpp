#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include "CLI11.hpp"

#include "daplan/audit.hpp"
#include "daplan/exact.hpp"
#include "daplan/io.hpp"
#include "daplan/placement.hpp"
#include "daplan/scenario.hpp"
#include "daplan/sim.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

daplan::Scenario load(const std::string& scenario_path,
                      const std::string& config_path) {
    return daplan::load_scenario(scenario_path, config_path);
}

int run_generate(int n_sm, int n_poles, double area_km2,
                 const std::string& profile, uint64_t seed,
                 const std::string& config_path, const std::string& out) {
    daplan::DensityProfile p = daplan::DensityProfile::Suburban;
    if (profile == "rural")
        p = daplan::DensityProfile::Rural;
    else if (profile == "urban")
        p = daplan::DensityProfile::Urban;
    else if (profile != "suburban")
        throw daplan::ParseError("unknown profile: " + profile);

    daplan::Scenario s =
        daplan::generate_synthetic(n_sm, n_poles, area_km2, p, seed);
    if (!config_path.empty()) {
        s.config = daplan::load_config(config_path);
        daplan::finalize_scenario(s);
    }
    fs::create_directories(out);
    daplan::write_scenario(s, join(out, "scenario.csv"), join(out, "config"));
    std::cout << "generate: " << n_sm << " SMs, " << n_poles << " poles over "
              << area_km2 << " km2 (" << profile << ", seed " << seed
              << ") -> " << join(out, "scenario.csv") << "\n";
    return 0;
}

int run_plan(const std::string& scenario_path, const std::string& config_path,
             uint64_t seed, const std::string& out, int threads) {
    const auto t0 = Clock::now();
    daplan::Scenario s = load(scenario_path, config_path);
    daplan::PlacementSolution sol = daplan::plan(s, threads);

    fs::create_directories(out);
    daplan::write_solution_json(join(out, "solution.json"), s, sol, seed);
    daplan::write_geojson(join(out, "network.geojson"), s, sol, seed);
    daplan::write_hops_cdf(join(out, "hops_cdf.csv"), s, sol.forest, seed);
    daplan::write_connections_cdf(join(out, "connections_cdf.csv"), s,
                                  sol.forest, seed);
    daplan::write_queue_delay_cdf(join(out, "queue_delay_cdf.csv"), s,
                                  sol.forest, sol.audit, seed);
    daplan::write_summary(join(out, "summary.txt"), s, sol, seed);

    int max_hops = 0;
    for (size_t i = 0; i < s.nodes.size(); ++i)
        if (sol.forest.routed(static_cast<int>(i)))
            max_hops = std::max(max_hops, sol.forest.depth[i]);
    std::cout << "plan: " << sol.dap_nodes.size() << " DAPs, "
              << sol.forest.unconnected.size() << " unconnected, max "
              << max_hops << " hops, " << sol.iterations.size()
              << " iterations, " << seconds_since(t0) << " s\n";
    if (!sol.forest.unconnected.empty()) {
        std::cerr << "warning: " << sol.forest.unconnected.size()
                  << " SMs have no serviceable route\n";
        return 3;
    }
    return 0;
}

int run_validate(const std::string& scenario_path,
                 const std::string& config_path,
                 const std::string& solution_path, double duration_s,
                 uint64_t seed, const std::string& out, int threads,
                 bool corrupt_analytic) {
    daplan::Scenario s = load(scenario_path, config_path);
    daplan::RoutingForest forest;
    if (solution_path.empty()) {
        forest = daplan::plan(s, threads).forest;
    } else {
        forest = daplan::load_solution_json(solution_path, s).forest;
    }
    daplan::AuditResult audit = daplan::audit_reliability(s, forest, threads);
    if (corrupt_analytic) {
        for (size_t i = 0; i < s.nodes.size(); ++i) {
            audit.mc[i].path_r = std::min(1.0, audit.mc[i].path_r * 0.5);
            audit.nc[i].path_r = std::min(1.0, audit.nc[i].path_r * 0.5);
        }
    }

    const daplan::SimResult sim =
        daplan::simulate_des(s, forest, duration_s, seed, true);
    const daplan::ValidationReport rep =
        daplan::validate(s, forest, audit, sim.summary);

    fs::create_directories(out);
    daplan::write_validation_csv(join(out, "validation.csv"), s, rep, seed);
    daplan::write_samples_csv(join(out, "delays.csv"), s, sim.samples, seed);
    std::cout << daplan::validation_text(s, rep);
    if (!sim.summary.drained)
        std::cerr << "warning: simulation drain cap hit; residual packets "
                     "counted as lost\n";

    const bool class_gap_bad = rep.class_gap[0] > 0.05 || rep.class_gap[1] > 0.05;
    return (rep.flagged > 0 || class_gap_bad) ? 1 : 0;
}

int run_exact(const std::string& scenario_path, const std::string& config_path,
              int max_poles, int max_sms, double timeout_s, uint64_t seed,
              const std::string& out, int threads) {
    daplan::Scenario s = load(scenario_path, config_path);

    const auto t0 = Clock::now();
    const daplan::PlacementSolution sol = daplan::plan(s, threads);
    const double heuristic_wall = seconds_since(t0);

    daplan::ExactLimits limits;
    limits.max_poles = max_poles;
    limits.max_sms = max_sms;
    limits.timeout_s = timeout_s;
    const daplan::ExactResult oracle =
        daplan::exact_min_daps(s, limits, threads);

    const auto heuristic = static_cast<int>(sol.dap_nodes.size());
    const double ratio =
        oracle.optimal_count > 0
            ? static_cast<double>(heuristic) / oracle.optimal_count
            : (heuristic == 0 ? 1.0
                              : std::numeric_limits<double>::infinity());

    fs::create_directories(out);
    std::string csv =
        "# " + daplan::output_header(seed, daplan::config_hash(s.config)) +
        "\nheuristic,oracle,ratio,heuristic_wall_s,oracle_wall_s,status,"
        "explored\n";
    csv += std::to_string(heuristic) + "," +
           std::to_string(oracle.optimal_count) + "," + std::to_string(ratio) +
           "," + std::to_string(heuristic_wall) + "," +
           std::to_string(oracle.wall_s) + "," + oracle.status + "," +
           std::to_string(oracle.explored) + "\n";
    std::ofstream file(join(out, "exact.csv"), std::ios::binary);
    file << csv;

    std::cout << "exact: heuristic=" << heuristic
              << " oracle=" << oracle.optimal_count << " ratio=" << ratio
              << " status=" << oracle.status << " (explored "
              << oracle.explored << " subsets in " << oracle.wall_s << " s)\n";
    return 0;
}

int run_report(const std::string& scenario_path,
               const std::string& config_path,
               const std::string& solution_path, uint64_t seed,
               const std::string& out, int threads) {
    daplan::Scenario s = load(scenario_path, config_path);
    daplan::LoadedSolution loaded =
        daplan::load_solution_json(solution_path, s);

    daplan::PlacementSolution sol;
    sol.dap_nodes = loaded.dap_nodes;
    sol.forest = std::move(loaded.forest);
    sol.audit = daplan::audit_reliability(s, sol.forest, threads);

    fs::create_directories(out);
    daplan::write_geojson(join(out, "network.geojson"), s, sol, seed);
    daplan::write_hops_cdf(join(out, "hops_cdf.csv"), s, sol.forest, seed);
    daplan::write_connections_cdf(join(out, "connections_cdf.csv"), s,
                                  sol.forest, seed);
    daplan::write_queue_delay_cdf(join(out, "queue_delay_cdf.csv"), s,
                                  sol.forest, sol.audit, seed);
    daplan::write_summary(join(out, "summary.txt"), s, sol, seed);
    std::cout << "report: " << sol.dap_nodes.size() << " DAPs, "
              << sol.forest.unconnected.size() << " unconnected -> " << out
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DAP placement and multi-hop route planning for wireless "
                 "smart-meter networks"};
    app.set_version_flag("--version", daplan::kToolVersion);
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Create a synthetic scenario");
    int gen_sms = 0, gen_poles = 0;
    double gen_area = 2.0;
    std::string gen_profile = "suburban", gen_config, gen_out = ".";
    uint64_t gen_seed = 1;
    gen->add_option("--sms", gen_sms, "Number of smart meters")->required();
    gen->add_option("--poles", gen_poles, "Number of candidate poles")
        ->required();
    gen->add_option("--area", gen_area, "Service area in km^2");
    gen->add_option("--profile", gen_profile, "rural, suburban or urban");
    gen->add_option("--config", gen_config, "Config file to embed")
        ->envname("DAPLAN_CONFIG");
    gen->add_option("--seed", gen_seed, "Generator seed")
        ->envname("DAPLAN_SEED");
    gen->add_option("--out", gen_out, "Output directory")
        ->envname("DAPLAN_OUT");

    // shared options for the solver-side subcommands
    struct SolverArgs {
        std::string scenario, config, out = ".";
        uint64_t seed = 1;
        int threads = 0;
    };
    auto add_solver_args = [](CLI::App* cmd, SolverArgs& a,
                              bool scenario_required = true) {
        auto* sc = cmd->add_option("--scenario", a.scenario,
                                   "Scenario CSV (id,kind,x,y,...)");
        if (scenario_required) sc->required();
        cmd->add_option("--config", a.config, "Config file (defaults if omitted)")
            ->envname("DAPLAN_CONFIG");
        cmd->add_option("--seed", a.seed, "Run seed stamped into outputs")
            ->envname("DAPLAN_SEED");
        cmd->add_option("--out", a.out, "Output directory")
            ->envname("DAPLAN_OUT");
        cmd->add_option("--threads", a.threads,
                        "Worker threads (0 = hardware)")
            ->envname("DAPLAN_THREADS");
    };

    auto* plan_cmd = app.add_subcommand("plan", "Place DAPs and build routes");
    SolverArgs plan_args;
    add_solver_args(plan_cmd, plan_args);

    auto* val_cmd =
        app.add_subcommand("validate", "Compare the analysis to a simulation");
    SolverArgs val_args;
    std::string val_solution;
    double val_duration = 14400.0;
    bool val_corrupt = false;
    add_solver_args(val_cmd, val_args);
    val_cmd->add_option("--solution", val_solution,
                        "solution.json to validate (re-plans if omitted)");
    val_cmd->add_option("--duration", val_duration,
                        "Simulated seconds of traffic");
    val_cmd->add_flag("--corrupt-analytic", val_corrupt)->group("");

    auto* exact_cmd =
        app.add_subcommand("exact", "Compare the planner to the exact optimum");
    SolverArgs exact_args;
    int exact_max_poles = 20, exact_max_sms = 80;
    double exact_timeout = 60.0;
    add_solver_args(exact_cmd, exact_args);
    exact_cmd->add_option("--max-poles", exact_max_poles,
                          "Refuse instances with more poles");
    exact_cmd->add_option("--max-sms", exact_max_sms,
                          "Refuse instances with more SMs");
    exact_cmd->add_option("--timeout", exact_timeout,
                          "Search budget in seconds");

    auto* report_cmd =
        app.add_subcommand("report", "Re-emit report files for a solution");
    SolverArgs report_args;
    std::string report_solution;
    add_solver_args(report_cmd, report_args);
    report_cmd
        ->add_option("--solution", report_solution, "solution.json to report")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return run_generate(gen_sms, gen_poles, gen_area, gen_profile,
                                gen_seed, gen_config, gen_out);
        if (plan_cmd->parsed())
            return run_plan(plan_args.scenario, plan_args.config,
                            plan_args.seed, plan_args.out, plan_args.threads);
        if (val_cmd->parsed())
            return run_validate(val_args.scenario, val_args.config,
                                val_solution, val_duration, val_args.seed,
                                val_args.out, val_args.threads, val_corrupt);
        if (exact_cmd->parsed())
            return run_exact(exact_args.scenario, exact_args.config,
                             exact_max_poles, exact_max_sms, exact_timeout,
                             exact_args.seed, exact_args.out,
                             exact_args.threads);
        if (report_cmd->parsed())
            return run_report(report_args.scenario, report_args.config,
                              report_solution, report_args.seed,
                              report_args.out, report_args.threads);
    } catch (const daplan::InfeasibleRadioBudget& e) {
        std::cerr << "error: infeasible radio budget: " << e.what() << "\n";
        return 4;
    } catch (const daplan::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
