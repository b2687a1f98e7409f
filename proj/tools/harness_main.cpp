// SPDX-License-Identifier: Apache-2.0
// harness: drives producers, attacks and verification against a pipeline.

#include <fstream>
#include <iostream>

#include <unistd.h>

#include "CLI11.hpp"
#include "pipechain/harness/runner.hpp"

using namespace pipechain::harness;

int main(int argc, char** argv) {
    CLI::App app{"End-to-end pipeline harness"};
    app.require_subcommand(1);
    auto* run = app.add_subcommand("run", "Run one scenario");
    std::string scenario_path, report_path, work_dir;
    bool sim = false;
    std::optional<std::uint64_t> seed;
    run->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_flag("--sim", sim, "Run against an in-process simulated cluster");
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--report", report_path, "Write line-delimited report records here");
    run->add_option("--work-dir", work_dir, "Node and gateway state for --sim (default: a fresh temp dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::filesystem::path dir;
    try {
        Scenario sc = load_scenario(scenario_path);
        if (seed) sc.seed = *seed;
        std::unique_ptr<Deployment> d;
        if (sim) {
            dir = work_dir.empty() ? std::filesystem::temp_directory_path() /
                                         ("pipechain-harness-" + std::to_string(::getpid()))
                                   : std::filesystem::path(work_dir);
            if (std::filesystem::exists(dir / "nodes")) {
                std::cerr << "harness: " << dir.string() << " already holds a run\n";
                return 2;
            }
            d = make_sim_deployment(sc, dir);
        } else {
            d = make_remote_deployment(sc);
        }
        RunReport report = run_scenario(sc, *d);
        if (!report_path.empty()) {
            std::ofstream out(report_path);
            out << report.to_records();
            if (!out) throw HarnessError("cannot write " + report_path);
        }
        std::cout << report.human_summary();
        d.reset();
        if (sim && work_dir.empty()) std::filesystem::remove_all(dir);
        return report.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "harness: " << e.what() << "\n";
        if (sim && work_dir.empty() && !dir.empty()) std::filesystem::remove_all(dir);
        return 2;
    }
}
