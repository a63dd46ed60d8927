#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sentinel/detector.hpp"
#include "sentinel/probabilities.hpp"

namespace sentinel {

inline constexpr std::size_t kSmoothingWindow = 15;
inline constexpr std::int64_t kSmoothingResetGapMs = 5 * 60 * 1000;

// Trailing buffer of the most recent probability vectors of one stream.
struct SmootherState {
    std::deque<ClassProbabilities> buffer;  // oldest first, at most 15
    std::optional<std::int64_t> last_timestamp_ms;

    bool operator==(const SmootherState&) const = default;
};

// Appends p, evicting the oldest vector beyond 15, and returns the
// renormalised mean of the buffer.
std::pair<SmootherState, ClassProbabilities> smooth_step(SmootherState state, const ClassProbabilities& p);

// As above, but first clears the buffer when more than 5 minutes passed since
// the previous timestamp (or time went backwards).
std::pair<SmootherState, ClassProbabilities> smooth_step(SmootherState state, const ClassProbabilities& p,
                                                         std::int64_t timestamp_ms);

// Smooths a whole stream from an empty state.
std::vector<ClassProbabilities> smooth_series(std::span<const ClassProbabilities> probs,
                                              std::span<const std::int64_t> timestamps_ms);

// Highest probability within the permitted class ids; ties to the smallest id.
ClassLabel argmax_within(const ClassProbabilities& p, std::span<const int> ids);

// The detector decides the health group; the classifier picks the class
// inside it.
ClassLabel vote(const ClassProbabilities& p_smoothed, AeFlag ae_flag);

}  // namespace sentinel
