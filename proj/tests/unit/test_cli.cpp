#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "runner.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = ucplan::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ucplan_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "summary.json")); }

} // namespace

TEST_CASE("unknown command exits 2 and writes nothing") {
    const fs::path dir = fresh_dir("unknown");
    const Run r = run({"bogus", "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: config:", 0) == 0);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("invalid parameters are rejected before solving") {
    const fs::path dir = fresh_dir("invalid");
    CHECK(run({"robust-chance", "--grid", "41", "--epsilon", "1.5", "--out", dir.string()}).code == 2);
    CHECK(run({"plan-fixed", "--grid", "41", "--probs", "0.5,0.6,0.1,0.1", "--out", dir.string()}).code == 2);
    CHECK(run({"plan-fixed", "--scenario", "missing.json", "--out", dir.string()}).code == 2);
    CHECK(run({"plan-fixed", "--T", "abc", "--out", dir.string()}).code == 2);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("infeasible instances exit 1 and write nothing") {
    const fs::path dir = fresh_dir("infeasible");
    const Run r = run({"robust-hard", "--grid", "41", "--C", "0.01", "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: infeasible:", 0) == 0);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("plan-fixed summary reports the total and residuals") {
    const fs::path dir = fresh_dir("fixed");
    REQUIRE(run({"plan-fixed", "--grid", "51", "--T", "0.4", "--out", dir.string()}).code == 0);
    const auto s = summary(dir);
    CHECK(s["command"] == "plan-fixed");
    CHECK(s["expected_total"].get<double>() == doctest::Approx(0.4 + s["q_at_waypoint"].get<double>()));
    CHECK(s["max_residuals"]["targets"].size() == 4);
    CHECK(s["max_residuals"].contains("start"));
    CHECK(fs::exists(dir / "trajectory.csv"));
    CHECK(fs::exists(dir / "reach_contour.csv"));
}

TEST_CASE("chance-constrained policy file") {
    const fs::path dir = fresh_dir("chance");
    REQUIRE(run({"robust-chance", "--C", "0.365", "--epsilon", "0.25", "--probs", "0.18,0.18,0.35,0.29", "--out",
                 dir.string()})
                .code == 0);
    const auto pol = nlohmann::json::parse(slurp(dir / "policy.json"));
    REQUIRE(pol["atoms"].size() == 2);
    std::vector<double> p{pol["atoms"][0]["probability"], pol["atoms"][1]["probability"]};
    std::sort(p.begin(), p.end());
    CHECK(p[0] == doctest::Approx(0.3889).epsilon(0.02));
    CHECK(p[1] == doctest::Approx(0.6111).epsilon(0.02));
}

TEST_CASE("repeated runs are byte-identical") {
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    for (const auto& dir : {a, b})
        REQUIRE(run({"robust-dr", "--grid", "41", "--delta", "0.3", "--out", dir.string()}).code == 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        ++files;
        CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
    CHECK(files >= 1);
}

TEST_CASE("every command runs on a coarse grid") {
    const std::vector<std::vector<std::string>> cmds{
        {"solve"},
        {"plan-discrete", "--scenario", "drone_rescue"},
        {"plan-discrete", "--times", "0.2,0.4", "--time-probs", "0.5,0.5"},
        {"plan-exponential", "--lambda", "2.5"},
        {"robust-worst"},
        {"robust-risk", "--beta", "10"},
        {"robust-hard", "--C", "0.8"},
        {"pareto"},
        {"pareto", "--lambda", "2.5"},
        {"coarsen-check", "--cell", "0.04"},
        {"solve", "--scenario", "storm"},
    };
    for (const auto& c : cmds) {
        std::vector<std::string> args = c;
        const fs::path dir = fresh_dir("all_" + c[0]);
        args.insert(args.end(), {"--grid", "51", "--out", dir.string()});
        CAPTURE(c[0]);
        const Run r = run(args);
        CHECK_MESSAGE(r.code == 0, r.err);
        CHECK(fs::exists(dir / "summary.json"));
    }
}
