#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "isoflow/cli.hpp"
#include "isoflow/curve.hpp"
#include "isoflow/io.hpp"
#include "isoflow/metric.hpp"
#include "isoflow/metric_spec.hpp"

using namespace isoflow;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    std::random_device rd;
    const fs::path dir = fs::temp_directory_path() / ("isoflow_cli_" + name + "_" + std::to_string(rd()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct Invocation {
    int code;
    std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "isoflow");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

json load(const fs::path& p) { return json::parse(read_text(p)); }

void write_points(const fs::path& p, const std::vector<Point>& pts) {
    std::ofstream f(p);
    f << "x,y\n";
    f.precision(17);
    for (Point q : pts) f << q.x << ',' << q.y << '\n';
}

} // namespace

TEST_CASE("check reports the cusp envelope constants") {
    const fs::path dir = fresh_dir("check");
    const Invocation r = invoke({"check", "--c1", "1", "--c2", "1", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const json rep = load(dir / "report.json");
    const double c0 = 2.0 * std::exp(std::numbers::pi);
    CHECK(rep.at("c0").get<double>() == doctest::Approx(c0).epsilon(1e-12));
    CHECK(rep.at("c0").get<double>() == doctest::Approx(46.28139).epsilon(1e-6));
    CHECK(fs::exists(dir / "margins.csv"));
    const json manifest = load(dir / "manifest.json");
    CHECK(manifest.at("config").at("command") == "check");
    CHECK(manifest.at("versions").at("isoflow") == kVersion);
    CHECK(manifest.at("artifacts") == json::array({"report.json", "margins.csv"}));
    CHECK(manifest.at("timing").at("wall_seconds").get<double>() >= 0.0);
    fs::remove_all(dir);
}

TEST_CASE("ratio of the sphere equator") {
    const fs::path dir = fresh_dir("ratio");
    write_curve_csv(dir / "equator.csv", ClosedCurve::circle({}, 1.0, 512));
    const Invocation r =
        invoke({"ratio", "--metric", "sphere", "--curve", (dir / "equator.csv").string(), "--out", dir.string()});
    REQUIRE(r.code == 0);
    const json doc = load(dir / "ratio.json");
    CHECK(doc.at("I").get<double>() == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(doc.at("A_in").get<double>() == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-3));
    CHECK(r.out.find("I = ") != std::string::npos);
    CHECK(r.out.find("A_out = ") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("a self-intersecting curve is a domain error") {
    const fs::path dir = fresh_dir("bowtie");
    std::vector<Point> pts;
    const Point corners[] = {{0, 0}, {2, 2}, {2, 0}, {0, 1}};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            const Point a = corners[i], b = corners[(i + 1) % 4];
            pts.push_back({a.x + (b.x - a.x) * k / 4.0, a.y + (b.y - a.y) * k / 4.0});
        }
    write_points(dir / "bowtie.csv", pts);
    const Invocation r =
        invoke({"ratio", "--metric", "sphere", "--curve", (dir / "bowtie.csv").string(), "--out", dir.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("SelfIntersection") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("configuration errors exit with code 2") {
    const fs::path dir = fresh_dir("config");
    write_curve_csv(dir / "c.csv", ClosedCurve::circle({}, 1.0, 64));
    const std::string curve = (dir / "c.csv").string();
    CHECK(invoke({"ratio", "--metric", "nonsense", "--curve", curve, "--out", dir.string()}).code == 2);
    CHECK(invoke({"ratio", "--metric", "{\"family\": \"torus\"}", "--curve", curve, "--out", dir.string()}).code == 2);
    CHECK(invoke({"ratio", "--metric", "{not json", "--curve", curve, "--out", dir.string()}).code == 2);
    CHECK(invoke({"ratio", "--metric", "sphere", "--curve", (dir / "missing.csv").string()}).code == 2);
    CHECK(invoke({"ratio", "--metric", "sphere"}).code == 2);
    CHECK(invoke({"minimize", "--starts", "many"}).code == 2);
    CHECK(invoke({"flow", "--curve", curve, "--mode", "sideways", "--out", dir.string()}).code == 2);
    CHECK(invoke({"bogus"}).code == 2);
    CHECK(invoke({}).code == 2);
    fs::remove_all(dir);
}

TEST_CASE("unknown log level is rejected") {
    const fs::path dir = fresh_dir("log");
    REQUIRE(setenv("ISOFLOW_LOG", "verbose", 1) == 0);
    const Invocation bad = invoke({"check", "--out", dir.string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("ISOFLOW_LOG") != std::string::npos);
    REQUIRE(setenv("ISOFLOW_LOG", "info", 1) == 0);
    const Invocation info = invoke({"check", "--out", dir.string()});
    CHECK(info.code == 0);
    CHECK(info.err.find("[info]") != std::string::npos);
    unsetenv("ISOFLOW_LOG");
    const Invocation quiet = invoke({"check", "--out", dir.string()});
    CHECK(quiet.code == 0);
    CHECK(quiet.err.empty());
    fs::remove_all(dir);
}

TEST_CASE("flow writes a trajectory that starts at step zero") {
    const fs::path dir = fresh_dir("flow");
    write_curve_csv(dir / "c.csv", ClosedCurve::polar({}, [](double t) { return 1.0 + 0.1 * std::cos(3 * t); }, 256));
    const Invocation r = invoke({"flow", "--metric", "sphere", "--curve", (dir / "c.csv").string(), "--max-steps",
                                 "50", "--out", dir.string()});
    REQUIRE(r.code == 0);
    std::ifstream f(dir / "trajectory.csv");
    std::string header, first;
    std::getline(f, header);
    std::getline(f, first);
    CHECK(first.rfind("0,", 0) == 0);
    CHECK(fs::exists(dir / "final_curve.csv"));
    CHECK(load(dir / "flow.json").is_object());
    fs::remove_all(dir);
}

TEST_CASE("metric specs round trip through their description") {
    const std::vector<std::string> specs = {
        "sphere",
        "cusp",
        "flat",
        "log_bump",
        "two_bump",
        R"({"family": "sphere", "params": {"scale": 2.5, "center": [1, -1]}})",
        R"({"family": "scale", "params": {"factor": 3, "metric": {"family": "cusp", "params": {"C": 2}}}})",
        R"({"family": "table", "params": {"r": [0, 1, 2, 4], "u": [1, 0.5, 0.2, 0.05]}})",
    };
    const std::vector<Point> probes = {{0.0, 0.0}, {0.3, -0.7}, {1.5, 2.0}, {-3.0, 0.5}, {10.0, 10.0}};
    for (const std::string& s : specs) {
        CAPTURE(s);
        const ConformalMetric a = parse_metric_spec(s);
        const ConformalMetric b = metric_from_json(a.describe());
        CHECK(b.describe() == a.describe());
        for (Point p : probes) CHECK(eval_u(b, p) == doctest::Approx(eval_u(a, p)).epsilon(1e-14));
    }
}

TEST_CASE("table specs read from files") {
    const fs::path dir = fresh_dir("table");
    {
        std::ofstream f(dir / "u.csv");
        f << "r,u\n0,1\n1,0.5\n2,0.2\n4,0.05\n";
    }
    {
        std::ofstream f(dir / "m.json");
        f << R"({"family": "table", "params": {"path": "u.csv", "tail": "power"}})";
    }
    const ConformalMetric csv = parse_metric_spec((dir / "u.csv").string());
    const ConformalMetric doc = parse_metric_spec((dir / "m.json").string());
    CHECK(eval_u(csv, {1.0, 0.0}) == doctest::Approx(0.5));
    CHECK(eval_u(doc, {0.0, 2.0}) == doctest::Approx(0.2));
    CHECK(eval_u(csv, {3.0, 0.0}) == doctest::Approx(eval_u(doc, {0.0, 3.0})));
    fs::remove_all(dir);
}
