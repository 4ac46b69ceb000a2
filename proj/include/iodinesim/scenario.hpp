#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iodinesim/comb.hpp"
#include "iodinesim/config.hpp"
#include "iodinesim/lineshape.hpp"
#include "iodinesim/servo.hpp"
#include "iodinesim/sigchain.hpp"

namespace iodinesim {

inline constexpr const char* kVersion = "1.0.0";

// Every model object the scenarios need, resolved from one config. The
// unperturbed line center is anchored so that the lock point at the reference
// conditions (line.reference_pressure, shift.reference_probe_power) equals
// line.frequency_khz exactly.
struct ModelBundle {
    HyperfineLine line;
    BroadeningModel broadening;
    ShiftModel shift;
    CellConditions cell;
    LineContext ctx;
    ModulationConfig probe_mod;
    PumpModConfig pump;
    CombConfig comb;
    CounterConfig counter;
    NoiseModel laser_noise;
    PrestabConfig prestab;
    ErrorChainConfig chain;
    PiConfig pi;
    OpticalFrequency configured_lock_value;
};

ModelBundle build_models(const Config& cfg);

struct ScenarioRequest {
    std::string name;
    std::string out_dir;
    std::uint64_t seed = 1;
    Config config;
    bool check = false;  // evaluate the scenario's pass predicate
};

struct ScenarioResult {
    std::string summary_json;  // also written to <out_dir>/summary.json
    bool check_passed = true;
    std::vector<std::string> files;
};

const std::vector<std::string>& scenario_names();

// Runs one scenario; writes data files plus summary.json into req.out_dir
// (created if missing). Identical requests produce byte-identical files.
// Throws ConfigError for config problems, std::exception for runtime ones.
ScenarioResult run_scenario(const ScenarioRequest& req);

}  // namespace iodinesim
