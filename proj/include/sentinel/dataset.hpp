#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sentinel {

inline constexpr std::size_t kFrameLength = 512;
inline constexpr double kSampleRateHz = 6644.0;
inline constexpr std::size_t kNumClasses = 6;

// Operating condition of a pump. Ids 1, 2 and 6 are healthy (normal load,
// partial load, idle); 3, 4 and 5 are anomalies (dry running, hydraulic
// blockage, cavitation).
class ClassLabel {
public:
    explicit ClassLabel(int id);

    static ClassLabel from_index(std::size_t index) { return ClassLabel(static_cast<int>(index) + 1); }

    int id() const noexcept { return id_; }
    std::size_t index() const noexcept { return static_cast<std::size_t>(id_ - 1); }
    bool healthy() const noexcept { return id_ == 1 || id_ == 2 || id_ == 6; }
    bool anomaly() const noexcept { return !healthy(); }

    friend auto operator<=>(const ClassLabel&, const ClassLabel&) = default;

private:
    int id_;
};

inline constexpr std::array<int, 3> kHealthyIds{1, 2, 6};
inline constexpr std::array<int, 3> kAnomalyIds{3, 4, 5};

using Axis = std::array<double, kFrameLength>;

// One 512-sample triaxial burst.
struct Frame {
    std::string pump_id;
    std::int64_t timestamp_ms = 0;
    Axis x{};
    Axis y{};
    Axis z{};
    std::optional<ClassLabel> label;

    const Axis& axis(std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
    Axis& axis(std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }

    bool operator==(const Frame&) const = default;
};

// Throws sentinel::Error if any sample is non-finite.
void validate_frame(const Frame& frame);

struct Dataset {
    std::vector<Frame> frames;
    std::string provenance;

    std::size_t size() const noexcept { return frames.size(); }
    bool empty() const noexcept { return frames.empty(); }

    bool operator==(const Dataset&) const = default;
};

// Checks every frame and that timestamps never decrease within one pump id.
void validate_dataset(const Dataset& dataset);

// Frame counts per class index (0..5). Unlabeled frames raise.
std::array<std::size_t, kNumClasses> class_counts(const Dataset& dataset);

Dataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const Dataset& dataset, const std::filesystem::path& path);

// Per-class split: floor(n * test_fraction) frames of each class go to the
// test side. Both sides keep the input order. Returns (train, test).
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed);

// Concatenates frames; provenance is joined with '+'.
Dataset concat(const std::vector<Dataset>& parts);

}  // namespace sentinel
