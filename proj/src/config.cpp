#include "glab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace glab {

namespace {

ConfigError at(const YAML::Node& n, const std::string& msg) {
    const YAML::Mark m = n.Mark();
    return ConfigError(msg, m.line >= 0 ? m.line + 1 : -1, m.column >= 0 ? m.column + 1 : -1);
}

double as_num(const YAML::Node& n, const std::string& key) {
    if (!n.IsScalar()) throw at(n, "'" + key + "' must be a number");
    std::string s = n.Scalar();
    std::string low = s;
    std::transform(low.begin(), low.end(), low.begin(), ::tolower);
    if (low == "inf" || low == ".inf" || low == "infinity" || low == "+inf") return std::numeric_limits<double>::infinity();
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
        throw at(n, "'" + key + "' must be a number, got '" + s + "'");
    }
}

std::vector<double> as_list(const YAML::Node& n, const std::string& key) {
    std::vector<double> v;
    if (n.IsSequence())
        for (const auto& e : n) v.push_back(as_num(e, key));
    else
        v.push_back(as_num(n, key));
    return v;
}

int as_int(const YAML::Node& n, const std::string& key) {
    double v = as_num(n, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw at(n, "'" + key + "' must be an integer");
    return static_cast<int>(v);
}

void read_model(const YAML::Node& n, ExperimentConfig& c) {
    if (n.IsScalar()) {
        c.model.name = n.Scalar();
        return;
    }
    if (!n.IsMap()) throw at(n, "'model' must be a name or a mapping");
    for (const auto& kv : n) {
        const std::string k = kv.first.Scalar();
        if (k == "name" || k == "kind") c.model.name = kv.second.Scalar();
        else if (k == "gamma") c.model.gamma = as_num(kv.second, k);
        else if (k == "U") c.model.U = as_num(kv.second, k);
        else if (k == "psi") c.model.psi = as_num(kv.second, k);
        else if (k == "h" || k == "table") {
            c.model.name = "table";
            c.model.table = as_list(kv.second, k);
        } else
            throw at(kv.first, "unknown model field '" + k + "'");
    }
}

void read_filter(const YAML::Node& n, ExperimentConfig& c) {
    if (n.IsScalar()) {
        c.filter.kind = n.Scalar();
        return;
    }
    if (!n.IsMap()) throw at(n, "'filter' must be a name or a mapping");
    for (const auto& kv : n) {
        const std::string k = kv.first.Scalar();
        if (k == "kind" || k == "name") c.filter.kind = kv.second.Scalar();
        else if (k == "sigma_gamma") c.filter.sigma_gamma = as_num(kv.second, k);
        else if (k == "delta") c.filter.delta = as_num(kv.second, k);
        else if (k == "theta") c.filter.theta = as_num(kv.second, k);
        else
            throw at(kv.first, "unknown filter field '" + k + "'");
    }
}

void read_params(const YAML::Node& n, ExperimentConfig& c) {
    if (!n.IsMap()) throw at(n, "'params' must be a mapping");
    for (const auto& kv : n) {
        const std::string k = kv.first.Scalar();
        const YAML::Node& v = kv.second;
        bool numeric = true;
        try {
            c.params[k] = as_list(v, k);
        } catch (const ConfigError&) {
            numeric = false;
        }
        if (!numeric) {
            if (!v.IsScalar()) throw at(v, "parameter '" + k + "' must be numeric or a string");
            c.string_params[k] = v.Scalar();
        }
    }
}

} // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"gap",    "scan-sigma", "scan-trunc",  "dynamics", "certify-bd",
                                                "quad",   "trunc-study", "coercivity", "filters"};
    return names;
}

double ExperimentConfig::tol(const std::string& key, double fallback) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
}

double ExperimentConfig::param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() || it->second.empty() ? fallback : it->second.front();
}

std::vector<double> ExperimentConfig::param_list(const std::string& key, std::vector<double> fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

std::string ExperimentConfig::sparam(const std::string& key, const std::string& fallback) const {
    auto it = string_params.find(key);
    return it == string_params.end() ? fallback : it->second;
}

ExperimentConfig parse_config_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    if (!root.IsMap()) throw ConfigError("config must be a mapping of keys to values", 1, 1);
    ExperimentConfig c;
    c.source_text = text;
    bool have_experiment = false;
    for (const auto& kv : root) {
        const std::string k = kv.first.Scalar();
        const YAML::Node& v = kv.second;
        if (k == "model") read_model(v, c);
        else if (k == "beta") c.beta = as_num(v, k);
        else if (k == "filter") read_filter(v, c);
        else if (k == "sigma_E") {
            c.sigma_E.clear();
            for (double s : as_list(v, k)) {
                if (s < 0) throw at(v, "'sigma_E' entries must be >= 0");
                c.sigma_E.push_back(SigmaE::of(s));
            }
        } else if (k == "M") {
            c.M.clear();
            if (v.IsSequence())
                for (const auto& e : v) c.M.push_back(as_int(e, k));
            else
                c.M.push_back(as_int(v, k));
        } else if (k == "experiment") {
            have_experiment = true;
            if (v.IsScalar()) c.experiment = v.Scalar();
            else if (v.IsMap()) {
                for (const auto& e : v) {
                    const std::string ek = e.first.Scalar();
                    if (ek == "name") c.experiment = e.second.Scalar();
                    else {
                        YAML::Node one;
                        one[ek] = e.second;
                        read_params(one, c);
                    }
                }
            } else
                throw at(v, "'experiment' must be a name or a mapping");
        } else if (k == "tolerances") {
            if (!v.IsMap()) throw at(v, "'tolerances' must be a mapping");
            for (const auto& e : v) c.tolerances[e.first.Scalar()] = as_num(e.second, e.first.Scalar());
        } else if (k == "params") read_params(v, c);
        else if (k == "expect") {
            if (!v.IsMap()) throw at(v, "'expect' must be a mapping of field: [lo, hi]");
            for (const auto& e : v) {
                auto r = as_list(e.second, e.first.Scalar());
                if (r.size() != 2) throw at(e.second, "'expect' ranges need exactly two numbers");
                c.expect[e.first.Scalar()] = {r[0], r[1]};
            }
        } else if (k == "seed") {
            double s = as_num(v, k);
            if (s < 0 || s != std::floor(s)) throw at(v, "'seed' must be a nonnegative integer");
            c.seed = static_cast<unsigned long long>(s);
        } else if (k == "output_dir") c.output_dir = v.Scalar();
        else
            throw at(kv.first, "unknown key '" + k + "'");
    }
    if (!have_experiment) throw ConfigError("missing required key 'experiment'", 1, 1);
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
        std::string list;
        for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
        YAML::Node e = root["experiment"];
        throw at(e, "unknown experiment '" + c.experiment + "'; valid names: " + list);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

FilterFunction make_filter(const FilterSpec& f, double beta) {
    if (f.kind == "metropolis") return metropolis(beta);
    if (f.kind == "gaussian") return gaussian(beta, f.sigma_gamma);
    if (f.kind == "metropolis_regularized") return metropolis_regularized(beta, f.delta, f.theta);
    throw PreconditionError("unknown filter kind '" + f.kind + "'",
                            "filter in {metropolis, gaussian, metropolis_regularized}");
}

void validate_config(const ExperimentConfig& c) {
    if (!(c.beta > 0) || !std::isfinite(c.beta)) throw PreconditionError("beta must be positive and finite", "beta > 0");
    make_filter(c.filter, c.beta);
    c.model.h(0);
    if (c.model.name == "linear" && !(c.model.gamma > 0))
        throw PreconditionError("linear model needs gamma > 0", "gamma > 0");
    if (c.M.empty()) throw PreconditionError("M list is empty", "M >= 1");
    for (int M : c.M)
        if (M < 1 || M > 400) throw PreconditionError("M entries must lie in [1, 400]", "1 <= M <= 400");
    if (c.model.name == "table")
        for (int M : c.M)
            if (static_cast<int>(c.model.table.size()) < M + 1)
                throw PreconditionError("h table shorter than M+1", "h tabulated on {0..M}");
    if (c.sigma_E.empty()) throw PreconditionError("sigma_E list is empty", "sigma_E >= 0");
    for (const auto& kv : c.tolerances)
        if (!(kv.second > 0)) throw PreconditionError("tolerance '" + kv.first + "' must be positive", "tolerance > 0");
    const std::string& e = c.experiment;
    if (e == "scan-trunc")
        for (size_t k = 1; k < c.M.size(); ++k)
            if (c.M[k] <= c.M[k - 1]) throw PreconditionError("M grid must be strictly increasing", "M ascending");
    if (e == "scan-sigma")
        for (size_t k = 1; k < c.sigma_E.size(); ++k)
            if (c.sigma_E[k].as_double() < c.sigma_E[k - 1].as_double())
                throw PreconditionError("sigma_E grid must be ascending", "sigma_E ascending");
    if (e == "certify-bd") {
        if (c.filter.kind != "metropolis")
            throw PreconditionError("certify-bd uses the Metropolis filter", "f metropolis");
        if (!c.model.number_preserving() || c.model.name == "mf_bh")
            throw PreconditionError("certify-bd needs H = h(N)", "H = h(N)");
        if (c.param("n_max", 200) < 10) throw PreconditionError("n_max must be >= 10", "n_max >= 10");
    }
    if (e == "quad") {
        for (double n : c.param_list("n", {4, 8, 16, 24}))
            if (n < 1 || n != std::floor(n)) throw PreconditionError("node counts must be integers >= 1", "n >= 1");
        for (const auto& s : c.sigma_E)
            if (s.is_zero()) throw PreconditionError("quadrature path is undefined at sigma_E = 0", "sigma_E > 0");
    }
    if (e == "coercivity") {
        if (!(c.param("delta", 1.0) > 0)) throw PreconditionError("delta must be positive", "delta > 0");
        if (c.params.count("omega") && !(c.param("omega", 1.0) > 0))
            throw PreconditionError("omega must be positive", "omega > 0");
    }
    if (e == "dynamics") {
        if (!(c.param("t_max", 20.0) > 0)) throw PreconditionError("t_max must be positive", "t_max > 0");
        if (c.param("n_t", 81) < 2) throw PreconditionError("n_t must be >= 2", "n_t >= 2");
    }
    if (e == "trunc-study") {
        double kappa = c.param("kappa", 0.25);
        if (!(kappa > 0 && kappa <= 0.5)) throw PreconditionError("kappa in (0,1/2]", "kappa in (0,1/2]");
    }
}

} // namespace glab
