#pragma once

// Metric specifications: family names, JSON documents and radial tables.
//
// JSON form {"family": F, "params": {...}} with
//   sphere    {scale = 1, center = [0, 0]}
//   cusp      {C = 1, r_cap = e}
//   constant  {value = 1}
//   log_bump  {mass = 4 pi, center = [0, 0]}
//   table     {r: [...], u: [...] | path: "file.csv", tail: "power" | "cusp"}
//   scale     {factor, metric: {...}}
//   sum       {terms: [{...}, ...]}
// Envelopes are not part of the spec.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "isoflow/metric.hpp"

namespace isoflow {

/// Builds a metric from its JSON description; relative table paths resolve
/// against `base`. ConfigError on malformed documents.
ConformalMetric metric_from_json(const nlohmann::json& spec, const std::filesystem::path& base = {});

/// Accepts a family name (sphere, cusp, flat, log_bump, two_bump), inline
/// JSON, a .json file, or a .csv radial table ("r,u", power-law tail).
ConformalMetric parse_metric_spec(const std::string& spec);

} // namespace isoflow
