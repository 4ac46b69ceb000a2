#include <atomic>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "iodinesim/config.hpp"
#include "iodinesim/scenario.hpp"

namespace {

struct RunOutcome {
    std::string name;
    bool ok = false;          // ran to completion
    bool check_passed = true;
    std::string message;      // error text or summary path
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iodine-stabilized 501.7 nm laser chain: scenarios and analysis"};
    app.set_version_flag("--version", std::string("iodinesim ") + iodinesim::kVersion);

    std::vector<std::string> scenarios;
    std::string config_path;
    const char* env_out = std::getenv("IODINESIM_OUT");
    std::string out_root = env_out ? env_out : "out";
    std::uint64_t seed = 1;
    std::vector<std::string> overrides;
    bool check = false;
    unsigned jobs = 1;
    std::string validate_path;
    bool list = false;
    bool dump = false;

    app.add_option("-s,--scenario", scenarios,
                   "Scenario name (repeatable), or 'all'. See --list-scenarios.");
    app.add_option("-c,--config", config_path, "Config file (TOML-style key = value)");
    app.add_option("-o,--out", out_root,
                   "Output root; each scenario writes to <out>/<scenario>/ "
                   "(default from IODINESIM_OUT, else ./out)");
    app.add_option("--seed", seed, "Master seed (default 1)");
    app.add_option("--set", overrides, "Override key=value (repeatable)");
    app.add_flag("--check", check, "Evaluate the scenario pass predicate; exit 3 on failure");
    app.add_option("-j,--jobs", jobs, "Run scenarios concurrently")->check(CLI::Range(1u, 64u));
    app.add_option("--validate-config", validate_path,
                   "Validate a config file and print the report, then exit");
    app.add_flag("--list-scenarios", list, "List scenario names and exit");
    app.add_flag("--dump-config", dump, "Print the resolved effective config and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (list) {
        for (const auto& n : iodinesim::scenario_names()) std::cout << n << "\n";
        return 0;
    }

    iodinesim::Config cfg;
    try {
        if (!validate_path.empty()) {
            const auto report = iodinesim::validate_config_file(validate_path);
            for (const auto& issue : report.issues) {
                std::cout << (issue.severity == iodinesim::ValidationIssue::Severity::error
                                  ? "error: "
                                  : "warning: ")
                          << issue.message << "\n";
            }
            std::cout << "# effective config\n" << report.effective;
            return report.ok() ? 0 : 1;
        }
        if (!config_path.empty()) cfg.load_file(config_path);
        for (const auto& o : overrides) cfg.apply_override(o);
    } catch (const iodinesim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (dump) {
        std::cout << cfg.dump();
        return 0;
    }

    if (scenarios.empty()) {
        std::cerr << "error: no --scenario given (use --list-scenarios)\n";
        return 1;
    }
    if (scenarios.size() == 1 && scenarios.front() == "all") {
        scenarios = iodinesim::scenario_names();
    }
    for (const auto& name : scenarios) {
        const auto& known = iodinesim::scenario_names();
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            std::cerr << "error: unknown scenario '" << name << "' (use --list-scenarios)\n";
            return 1;
        }
    }

    std::vector<RunOutcome> outcomes(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= scenarios.size()) return;
            RunOutcome& res = outcomes[i];
            res.name = scenarios[i];
            iodinesim::ScenarioRequest req;
            req.name = scenarios[i];
            req.out_dir = out_root + "/" + scenarios[i];
            req.seed = seed;
            req.config = cfg;
            req.check = check;
            try {
                const auto result = iodinesim::run_scenario(req);
                res.ok = true;
                res.check_passed = result.check_passed;
                res.message = req.out_dir + "/summary.json";
            } catch (const std::exception& e) {
                res.ok = false;
                res.message = e.what();
            }
        }
    };

    const unsigned n_threads = std::min<std::size_t>(jobs, scenarios.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    bool any_error = false;
    bool any_check_failed = false;
    for (const auto& res : outcomes) {
        if (!res.ok) {
            any_error = true;
            std::cerr << res.name << ": error: " << res.message << "\n";
            continue;
        }
        std::cout << res.name << ": ok";
        if (check) std::cout << (res.check_passed ? " (check passed)" : " (CHECK FAILED)");
        std::cout << " -> " << res.message << "\n";
        if (!res.check_passed) any_check_failed = true;
    }
    if (any_error) return 2;
    if (check && any_check_failed) return 3;
    return 0;
}
