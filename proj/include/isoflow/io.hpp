#pragma once

// Text interchange: number formatting and the CSV/JSON file formats.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "isoflow/curve.hpp"

namespace isoflow {

/// Locale-independent decimal with 17 significant digits.
std::string format_number(double value);

/// Vertices from a CSV with header "x,y". Throws ConfigError on malformed input.
std::vector<Point> read_curve_points(const std::filesystem::path& path);
ClosedCurve read_curve_csv(const std::filesystem::path& path);
std::string curve_csv(const ClosedCurve& curve);
void write_curve_csv(const std::filesystem::path& path, const ClosedCurve& curve);

/// Radial table from a CSV with header "r,u".
std::pair<std::vector<double>, std::vector<double>> read_radial_table(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

/// JSON with doubles written through format_number, 2-space indentation.
std::string dump_json(const nlohmann::json& value);

} // namespace isoflow
