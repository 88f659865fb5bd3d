#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "scs/policy.hpp"
#include "scs/trainer.hpp"
#include "scs/tree_env.hpp"

namespace scs {

/// {depth, branching, n_options, leaf_option_map, faithful_path, seed}
nlohmann::json tree_to_json(const ReasoningTree& tree);
ReasoningTree tree_from_json(const nlohmann::json& doc);

/// Checkpoint format "scs-policy-v1": flat bias / weight arrays with shapes.
nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& doc);

nlohmann::json metrics_to_json(const StepMetrics& metrics);
StepMetrics metrics_from_json(const nlohmann::json& doc);

nlohmann::json trace_to_json(const ResampleTraceRecord& record);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace scs
