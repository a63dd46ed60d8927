#pragma once

#include <json.hpp>

#include "sentinel/dataset.hpp"

namespace sentinel {

// Frame <-> JSON object with keys pump_id, timestamp, x, y, z and an optional
// integer label. Doubles are written in shortest round-trip form.
nlohmann::json frame_to_json(const Frame& frame);

// Throws ParseError (line 0) on schema problems, including
// "axis x: expected 512, got 511".
Frame frame_from_json(const nlohmann::json& object);

}  // namespace sentinel
