#pragma once

#include "mtp/cantor.hpp"
#include "mtp/measure.hpp"
#include "mtp/randomsim.hpp"

#include <json.hpp>

#include <string>

namespace mtp {

using Json = nlohmann::ordered_json;

// Typed field access; every failure is an ArgumentError naming the key.
double get_real(const Json& j, const std::string& key);
double get_real(const Json& j, const std::string& key, double fallback);
long long get_int(const Json& j, const std::string& key);
long long get_int(const Json& j, const std::string& key, long long fallback);
bool get_bool(const Json& j, const std::string& key, bool fallback);
std::string get_string(const Json& j, const std::string& key);
std::string get_string(const Json& j, const std::string& key, const std::string& fallback);
Vec get_vec(const Json& j, const std::string& key);
const Json& get_object(const Json& j, const std::string& key);

// Doubles list: either an explicit array or {"lo","hi","count"} log-spaced,
// or {"base","from","to"} for base^-from .. base^-to.
std::vector<double> grid_from_json(const Json& j, const std::string& key);

Metric metric_from_string(const std::string& s);
std::string to_string(Metric m);

// One point per row, comma separated; '#' lines are skipped.
std::vector<Vec> read_points_csv(const std::string& path);
void write_points_csv(const std::string& path, const std::vector<Vec>& pts);

Json to_json(const SetModel& m);
SetModel model_from_json(const Json& j);

Json to_json(const Gauge& g);
Gauge gauge_from_json(const Json& j);
Json to_json(const GaugePair& p);
GaugePair gauge_pair_from_json(const Json& j);

Json to_json(const Ball& b);
Ball ball_from_json(const Json& j);

Json to_json(const ScalingFit& f);
Json to_json(const GaugeReport& r);

Json to_json(const RadiusRule& r);
RadiusRule radius_rule_from_json(const Json& j);
Json to_json(const SetSequence& s);
SetSequence sequence_from_json(const Json& j);

Json to_json(const CantorParams& p);
CantorParams cantor_params_from_json(const Json& j);
Json to_json(const CantorTree& t);
CantorTree tree_from_json(const Json& j);
Json to_json(const AuditReport& r);
Json to_json(const HolderResult& h);

Json to_json(const RandomScheme& s);
RandomScheme scheme_from_json(const Json& j);

}  // namespace mtp
