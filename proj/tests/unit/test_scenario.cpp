#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "iodinesim/config.hpp"
#include "iodinesim/scenario.hpp"

using namespace iodinesim;
namespace fs = std::filesystem;

namespace {

// Scratch directory removed on destruction.
struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& stem) {
        path = fs::temp_directory_path() / (stem + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::map<std::string, std::string> bytes_by_basename(const std::vector<std::string>& files) {
    std::map<std::string, std::string> out;
    for (const auto& f : files) out[fs::path(f).filename().string()] = read_bytes(f);
    return out;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("the catalogue is fixed") {
    const auto& names = scenario_names();
    CHECK(names.size() == 9);
    for (const char* expected :
         {"lineshape-scan", "notch-fig2", "ram-reject", "lock-run", "comb-measure", "allan",
          "pressure-shift", "repeatability", "full-pipeline"}) {
        CHECK(std::find(names.begin(), names.end(), expected) != names.end());
    }
}

TEST_CASE("unknown scenario names are rejected") {
    ScenarioRequest req;
    req.name = "bogus";
    req.out_dir = (fs::temp_directory_path() / "iodinesim-never-created").string();
    try {
        run_scenario(req);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("unknown scenario 'bogus'") != std::string::npos);
        CHECK(what.find("comb-measure") != std::string::npos);
    }
    CHECK(!fs::exists(req.out_dir));
}

TEST_CASE("comb-measure produces a checked, well-formed summary") {
    const TempDir dir("iodinesim-scen-comb");
    ScenarioRequest req;
    req.name = "comb-measure";
    req.out_dir = dir.path.string();
    req.seed = 1;
    req.check = true;

    const ScenarioResult res = run_scenario(req);
    CHECK(res.check_passed);
    REQUIRE(!res.files.empty());
    for (const auto& f : res.files) CHECK(fs::exists(f));

    const auto summary = nlohmann::json::parse(res.summary_json);
    CHECK(summary.at("scenario") == "comb-measure");
    CHECK(summary.at("seed") == 1);
    CHECK(summary.at("config_hash") == req.config.hash_hex());
    CHECK(summary.at("version") == "1.0.0");
    CHECK(summary.at("check_passed") == true);
    const auto& results = summary.at("results");
    CHECK(results.at("p").get<long long>() > 0);
    CHECK(results.at("f_rep_Hz") == 1e9);
    CHECK(results.at("n_gates") == 1000);
    CHECK(results.at("p") == results.at("true_p"));
    CHECK(results.at("absolute_kHz").is_string());

    // The summary file on disk is byte-for-byte the returned string.
    const auto on_disk = std::find_if(res.files.begin(), res.files.end(), [](const auto& f) {
        return fs::path(f).filename() == "summary.json";
    });
    REQUIRE(on_disk != res.files.end());
    CHECK(read_bytes(*on_disk) == res.summary_json);
}

TEST_CASE("reruns are byte-identical, seeds are not") {
    ScenarioRequest req;
    req.name = "comb-measure";
    req.seed = 7;

    const TempDir dir_a("iodinesim-scen-a");
    req.out_dir = dir_a.path.string();
    const ScenarioResult first = run_scenario(req);

    const TempDir dir_b("iodinesim-scen-b");
    req.out_dir = dir_b.path.string();
    const ScenarioResult second = run_scenario(req);

    CHECK(first.summary_json == second.summary_json);
    const auto bytes_a = bytes_by_basename(first.files);
    const auto bytes_b = bytes_by_basename(second.files);
    REQUIRE(bytes_a.size() == bytes_b.size());
    for (const auto& [name, content] : bytes_a) {
        REQUIRE(bytes_b.count(name) == 1);
        CHECK(bytes_b.at(name) == content);
    }

    const TempDir dir_c("iodinesim-scen-c");
    req.out_dir = dir_c.path.string();
    req.seed = 8;
    const ScenarioResult reseeded = run_scenario(req);
    CHECK(reseeded.summary_json != first.summary_json);
}

TEST_CASE("allan runs a locked chain and reports finite deviations") {
    const TempDir dir("iodinesim-scen-allan");
    ScenarioRequest req;
    req.name = "allan";
    req.out_dir = dir.path.string();
    req.seed = 3;
    req.check = true;
    req.config.set("lock.gates", 64.0);  // keep the run short

    const ScenarioResult res = run_scenario(req);
    CHECK(res.check_passed);

    const auto summary = nlohmann::json::parse(res.summary_json);
    const auto& results = summary.at("results");
    CHECK(results.at("n_gates") == 64);
    CHECK(results.at("overlapping") == false);
    const auto taus = results.at("taus_s").get<std::vector<double>>();
    const auto sigmas = results.at("sigmas").get<std::vector<double>>();
    REQUIRE(!taus.empty());
    CHECK(taus.size() == sigmas.size());
    CHECK(std::is_sorted(taus.begin(), taus.end()));
    for (double s : sigmas) {
        CHECK(std::isfinite(s));
        CHECK(s > 0.0);
    }

    const fs::path csv = dir.path / "allan.csv";
    REQUIRE(fs::exists(csv));
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "tau_s,sigma");
}

}  // TEST_SUITE
