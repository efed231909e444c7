#pragma once

#include "dh2/analysis.hpp"
#include "dh2/netmodel.hpp"

#include <json.hpp>

#include <string>

namespace dh2 {

using Json = nlohmann::json;

// Nested row-major arrays. Empty matrices serialize as [] and take their
// shape from the surrounding dimension fields.
Json matrix_to_json(const Mat& m);
Mat matrix_from_json(const Json& j, int rows, int cols, const std::string& what);
Mat matrix_from_json(const Json& j, const std::string& what);  // shape from data

Json model_to_json(const NetworkModel& model);
NetworkModel model_from_json(const Json& j);

// Certificate file: {"gamma", "nodes": [{"X", "rho"}], "multipliers": [...]}.
Json certificate_to_json(const AnalysisCertificate& cert);
AnalysisCertificate certificate_from_json(const Json& j, const NetworkModel& model);

Json multipliers_to_json(const MultiplierSet& m);
MultiplierSet multipliers_from_json(const Json& j, const Topology& topology);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace dh2
