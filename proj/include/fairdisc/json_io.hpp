#pragma once

// nlohmann ADL bindings for the config structs. Include from .cpp files only;
// the config headers stay JSON-free.

#include "json.hpp"

#include "fairdisc/config.hpp"

namespace fairdisc::model {
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
} // namespace fairdisc::model

namespace fairdisc::train {
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
} // namespace fairdisc::train

namespace fairdisc::data {
void to_json(nlohmann::json& j, const SyntheticSpec& c);
void from_json(const nlohmann::json& j, SyntheticSpec& c);
} // namespace fairdisc::data

namespace fairdisc::eval {
void to_json(nlohmann::json& j, const ProbeConfig& c);
void from_json(const nlohmann::json& j, ProbeConfig& c);
void to_json(nlohmann::json& j, const SweepGrid& c);
void from_json(const nlohmann::json& j, SweepGrid& c);
} // namespace fairdisc::eval

namespace fairdisc::config {
void to_json(nlohmann::json& j, const DatasetSource& c);
void from_json(const nlohmann::json& j, DatasetSource& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);
} // namespace fairdisc::config
