#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code{-1};
    std::string out;
};

std::string bin() {
    const char* b = std::getenv("GLAB_BIN");
    return b ? b : "./glab";
}

Result run(const std::string& args) {
    Result r;
    std::string cmd = bin() + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("glab_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
    fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json report(const fs::path& out) { return json::parse(slurp(out / "report.json")); }

double value(const json& r, const std::string& key) { return r["results"][key]["value"].get<double>(); }

} // namespace

TEST_CASE("minimal gap config") {
    auto d = scratch("minimal");
    auto cfg = write(d, "c.yaml", "{model: linear, beta: 1, filter: metropolis, experiment: gap, M: [30]}\n");
    auto r = run("run " + cfg.string() + " --out " + (d / "out").string());
    CHECK(r.code == 0);
    json j = report(d / "out");
    CHECK(value(j, "gap") == doctest::Approx(0.2569).epsilon(1e-3));
    CHECK(j["status"] == "pass");
    CHECK(j["provenance"].contains("timestamp"));
    CHECK(j["results"]["gap"]["source"].get<std::string>().find("hs_spectral.") == 0);

    auto v = run("validate " + cfg.string());
    CHECK(v.code == 0);
    CHECK(v.out.find("ok") != std::string::npos);
}

TEST_CASE("coercivity config") {
    auto d = scratch("coercivity");
    auto cfg = write(d, "c.yaml", "model: linear\nbeta: 8\nexperiment: coercivity\nparams:\n  delta: 1\n  omega: 1\n  residues: [0]\nseed: 7\n");
    auto r = run("run " + cfg.string() + " --out " + (d / "out").string());
    CHECK(r.code == 0);
    CHECK(value(report(d / "out"), "c_beta") == doctest::Approx(0.19188).epsilon(5e-4));
}

TEST_CASE("precondition violation exits 3") {
    auto d = scratch("theta");
    auto cfg = write(d, "c.yaml",
                     "model: quadratic\nbeta: 1\nfilter: {kind: metropolis_regularized, delta: 0.01, theta: 0.7}\nexperiment: filters\n");
    auto r = run("run " + cfg.string() + " --out " + (d / "out").string());
    CHECK(r.code == 3);
    CHECK(r.out.find("(0,1/2)") != std::string::npos);
    CHECK(run("validate " + cfg.string()).code == 3);
}

TEST_CASE("config errors exit 2 with a position") {
    auto d = scratch("bad");
    auto unknown = write(d, "u.yaml", "model: linear\nbeta: 1\nexperiment: nonsense\n");
    auto r = run("validate " + unknown.string());
    CHECK(r.code == 2);
    for (const char* name : {"gap", "scan-sigma", "scan-trunc", "dynamics", "certify-bd", "quad", "trunc-study", "coercivity", "filters"})
        CHECK(r.out.find(name) != std::string::npos);

    auto broken = write(d, "b.yaml", "model: linear\nbeta: [1\nexperiment: gap\n");
    auto p = run("validate " + broken.string());
    CHECK(p.code == 2);
    // file:line:column: error: ...
    CHECK(p.out.find("b.yaml:3:11:") != std::string::npos);

    auto key = write(d, "k.yaml", "model: linear\nbeta: 1\nexperiment: gap\nbogus: 3\n");
    auto k = run("validate " + key.string());
    CHECK(k.code == 2);
    CHECK(k.out.find("bogus") != std::string::npos);
    CHECK(k.out.find("k.yaml:4:1:") != std::string::npos);

    CHECK(run("validate " + (d / "missing.yaml").string()).code == 2);
}

TEST_CASE("experiment catalog") {
    auto r = run("list-experiments");
    CHECK(r.code == 0);
    int lines = 0;
    std::istringstream in(r.out);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) ++lines;
    CHECK(lines == 9);
}

TEST_CASE("reruns are identical apart from timing fields") {
    auto d = scratch("determinism");
    auto cfg = write(d, "c.yaml",
                     "model: quadratic\nbeta: 1\nfilter: metropolis\nsigma_E: [1]\nM: [6]\nexperiment: coercivity\n"
                     "params:\n  delta: 1\n  probes: 20\nseed: 11\n");
    auto a = run("run " + cfg.string() + " --workers 1 --out " + (d / "a").string());
    auto b = run("run " + cfg.string() + " --workers 2 --out " + (d / "b").string());
    REQUIRE(a.code == b.code);
    json ja = report(d / "a"), jb = report(d / "b");
    for (json* j : {&ja, &jb}) {
        (*j)["provenance"].erase("timestamp");
        (*j)["provenance"].erase("wall_time_s");
        (*j)["provenance"].erase("workers");
    }
    CHECK(ja.dump() == jb.dump());
    for (const auto& e : fs::directory_iterator(d / "a"))
        if (e.path().extension() == ".csv") CHECK(slurp(e.path()) == slurp(d / "b" / e.path().filename()));
}
