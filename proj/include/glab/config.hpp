#pragma once

#include "glab/lindblad.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace glab {

// malformed configuration text; exit code 2
struct ConfigError : std::runtime_error {
    int line{-1};
    int column{-1};
    ConfigError(const std::string& msg, int l = -1, int c = -1) : std::runtime_error(msg), line(l), column(c) {}
};

struct FilterSpec {
    std::string kind{"metropolis"}; // metropolis | gaussian | metropolis_regularized
    double sigma_gamma{1.0};
    double delta{0.05};
    double theta{0.3};
};

struct ExperimentConfig {
    ModelSpec model;
    double beta{1.0};
    FilterSpec filter;
    std::vector<SigmaE> sigma_E{SigmaE::inf()};
    std::vector<int> M{12};
    std::string experiment;
    std::map<std::string, double> tolerances;
    std::map<std::string, std::vector<double>> params;   // numeric experiment parameters (scalars stored as size-1)
    std::map<std::string, std::string> string_params;
    std::map<std::string, std::pair<double, double>> expect; // result field -> [lo, hi]
    unsigned long long seed{0};
    std::string output_dir{"out"};
    std::string source_text;

    double tol(const std::string& key, double fallback) const;
    double param(const std::string& key, double fallback) const;
    std::vector<double> param_list(const std::string& key, std::vector<double> fallback) const;
    std::string sparam(const std::string& key, const std::string& fallback) const;
};

const std::vector<std::string>& experiment_names();

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

FilterFunction make_filter(const FilterSpec& f, double beta);

// throws PreconditionError for values the invoked operations would reject
void validate_config(const ExperimentConfig& cfg);

} // namespace glab
