#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sentinel/pipeline.hpp"

namespace sentinel {

inline constexpr const char* kBundleVersion = "pump-sentinel/1";

// Whole pipeline as one JSON document. Matrices are nested row-major arrays;
// ROCKET kernels are stored as (seed, n, input_len) and regenerated on load.
nlohmann::json bundle_to_json(const TrainedPipeline& p);
TrainedPipeline bundle_from_json(const nlohmann::json& doc);

std::string serialize_bundle(const TrainedPipeline& p);
void save_bundle(const TrainedPipeline& p, const std::filesystem::path& path);
// Throws sentinel::Error on a version mismatch or malformed document.
TrainedPipeline load_bundle(const std::filesystem::path& path);

}  // namespace sentinel
