#include "isoflow/metric_spec.hpp"

#include <numbers>

#include "isoflow/error.hpp"
#include "isoflow/io.hpp"

namespace isoflow {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, "metric spec: " + what); }

double number(const json& params, const char* key, double fallback) {
    if (!params.contains(key)) return fallback;
    const json& v = params.at(key);
    if (!v.is_number()) bad(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

Point point(const json& params, const char* key) {
    if (!params.contains(key)) return {};
    const json& v = params.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        bad(std::string("'") + key + "' must be [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<double> numbers(const json& params, const char* key) {
    if (!params.contains(key) || !params.at(key).is_array()) bad(std::string("'") + key + "' must be an array");
    std::vector<double> out;
    for (const json& v : params.at(key)) {
        if (!v.is_number()) bad(std::string("'") + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

TableTail tail_mode(const json& params) {
    const std::string tail = params.value("tail", std::string("power"));
    if (tail == "power") return TableTail::PowerLaw;
    if (tail == "cusp") return TableTail::Cusp;
    bad("table tail must be 'power' or 'cusp'");
}

} // namespace

ConformalMetric metric_from_json(const json& spec, const std::filesystem::path& base) {
    if (!spec.is_object() || !spec.contains("family") || !spec.at("family").is_string())
        bad("expected an object with a 'family' string");
    const std::string family = spec.at("family").get<std::string>();
    const json params = spec.value("params", json::object());
    if (!params.is_object()) bad("'params' must be an object");

    if (family == "sphere") return ConformalMetric::round_sphere(number(params, "scale", 1.0), point(params, "center"));
    if (family == "cusp") return ConformalMetric::cusp_profile(number(params, "C", 1.0), number(params, "r_cap", std::numbers::e));
    if (family == "constant" || family == "flat") return ConformalMetric::constant(number(params, "value", 1.0));
    if (family == "log_bump")
        return ConformalMetric::log_bump(number(params, "mass", 4.0 * std::numbers::pi), point(params, "center"));
    if (family == "table") {
        if (params.contains("path")) {
            if (!params.at("path").is_string()) bad("table 'path' must be a string");
            std::filesystem::path p = params.at("path").get<std::string>();
            if (p.is_relative()) p = base / p;
            auto [r, u] = read_radial_table(p);
            return ConformalMetric::radial_table(std::move(r), std::move(u), tail_mode(params));
        }
        return ConformalMetric::radial_table(numbers(params, "r"), numbers(params, "u"), tail_mode(params));
    }
    if (family == "scale") {
        if (!params.contains("metric")) bad("scale needs 'metric'");
        if (!params.contains("factor")) bad("scale needs 'factor'");
        return ConformalMetric::scaled(number(params, "factor", 1.0), metric_from_json(params.at("metric"), base));
    }
    if (family == "sum") {
        if (!params.contains("terms") || !params.at("terms").is_array() || params.at("terms").empty())
            bad("sum needs a non-empty 'terms' array");
        std::vector<ConformalMetric> terms;
        for (const json& t : params.at("terms")) terms.push_back(metric_from_json(t, base));
        return ConformalMetric::sum(terms);
    }
    bad("unknown family '" + family + "'");
}

ConformalMetric parse_metric_spec(const std::string& spec) {
    if (spec.empty()) bad("empty");
    if (spec == "sphere") return ConformalMetric::round_sphere();
    if (spec == "cusp") return ConformalMetric::cusp_profile();
    if (spec == "flat" || spec == "constant") return ConformalMetric::constant(1.0);
    if (spec == "log_bump") return ConformalMetric::log_bump(4.0 * std::numbers::pi);
    if (spec == "two_bump")
        return ConformalMetric::sum({ConformalMetric::round_sphere(1.0, {-3.0, 0.0}),
                                     ConformalMetric::round_sphere(1.0, {3.0, 0.0})});
    if (spec.front() == '{') {
        json doc = json::parse(spec, nullptr, false);
        if (doc.is_discarded()) bad("inline JSON does not parse");
        return metric_from_json(doc);
    }
    const std::filesystem::path path(spec);
    if (path.extension() == ".csv") {
        auto [r, u] = read_radial_table(path);
        return ConformalMetric::radial_table(std::move(r), std::move(u));
    }
    if (path.extension() == ".json") {
        json doc = json::parse(read_text(path), nullptr, false);
        if (doc.is_discarded()) bad(path.string() + " is not valid JSON");
        return metric_from_json(doc, path.parent_path());
    }
    bad("unknown metric '" + spec + "'");
}

} // namespace isoflow
