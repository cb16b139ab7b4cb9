#pragma once

#include "glab/config.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace glab {

struct RunOptions {
    int workers{0};          // 0: available parallelism
    std::string out_dir;     // overrides the config when non-empty
    bool seed_set{false};
    unsigned long long seed{0};
};

struct Check {
    std::string name;
    bool pass{false};
    std::string detail;
};

struct RunOutcome {
    nlohmann::json report;
    std::vector<Check> checks;
    std::vector<std::string> files;
    bool all_pass() const;
};

struct ExperimentInfo {
    std::string name;
    std::string description;
};

const std::vector<ExperimentInfo>& experiment_catalog();

// runs the experiment and writes report.json and CSVs into the output directory
RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

} // namespace glab
