#include "isoflow/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "isoflow/error.hpp"

namespace isoflow {
namespace {

double parse_number(std::string_view field, const std::string& where) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw Error(ErrorCode::ConfigError, "cannot parse number '" + std::string(field) + "' in " + where);
    return value;
}

std::vector<std::pair<double, double>> read_two_columns(const std::filesystem::path& path, std::string_view header) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ConfigError, path.string() + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line != header)
        throw Error(ErrorCode::ConfigError, path.string() + ": expected header '" + std::string(header) + "'");
    std::vector<std::pair<double, double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (comma == std::string::npos) throw Error(ErrorCode::ConfigError, "missing column at " + where);
        rows.emplace_back(parse_number(std::string_view(line).substr(0, comma), where),
                          parse_number(std::string_view(line).substr(comma + 1), where));
    }
    return rows;
}

void format_json(const nlohmann::json& v, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (v.type()) {
    case nlohmann::json::value_t::object: {
        if (v.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) out += ",\n";
            first = false;
            out += inner + nlohmann::json(it.key()).dump() + ": ";
            format_json(it.value(), indent + 1, out);
        }
        out += "\n" + pad + "}";
        return;
    }
    case nlohmann::json::value_t::array: {
        if (v.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ",\n";
            out += inner;
            format_json(v[i], indent + 1, out);
        }
        out += "\n" + pad + "]";
        return;
    }
    case nlohmann::json::value_t::number_float: {
        const double d = v.get<double>();
        out += std::isfinite(d) ? format_number(d) : (std::isnan(d) ? "null" : (d > 0 ? "\"inf\"" : "\"-inf\""));
        return;
    }
    default: out += v.dump(); return;
    }
}

} // namespace

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::vector<Point> read_curve_points(const std::filesystem::path& path) {
    std::vector<Point> pts;
    for (auto [x, y] : read_two_columns(path, "x,y")) pts.push_back({x, y});
    return pts;
}

ClosedCurve read_curve_csv(const std::filesystem::path& path) { return ClosedCurve(read_curve_points(path)); }

std::string curve_csv(const ClosedCurve& curve) {
    std::string out = "x,y\n";
    for (Point p : curve.vertices()) out += format_number(p.x) + ',' + format_number(p.y) + '\n';
    return out;
}

void write_curve_csv(const std::filesystem::path& path, const ClosedCurve& curve) { write_text(path, curve_csv(curve)); }

std::pair<std::vector<double>, std::vector<double>> read_radial_table(const std::filesystem::path& path) {
    std::pair<std::vector<double>, std::vector<double>> out;
    for (auto [r, u] : read_two_columns(path, "r,u")) {
        out.first.push_back(r);
        out.second.push_back(u);
    }
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    out << content;
}

std::string dump_json(const nlohmann::json& value) {
    std::string out;
    format_json(value, 0, out);
    out += '\n';
    return out;
}

} // namespace isoflow
