#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/alignment.hpp"
#include "sentinel/dataset.hpp"

namespace sentinel {

// Generator constants. Every field can be overridden from a key=value file;
// the key is the field name.
struct SynthConstants {
    // pump family (nominal values; each pump scales them by U(1-spread, 1+spread))
    double shaft_hz = 49.0;
    int blade_count = 6;
    std::array<double, 5> shaft_amps{0.30, 0.12, 0.08, 0.05, 0.03};
    std::array<double, 2> blade_amps{0.25, 0.10};
    double noise_floor = 0.02;
    double impact_amp = 0.15;
    double impact_decay_ms = 0.8;
    double family_spread = 0.15;
    double mount_max_deg = 60.0;
    double gravity = 1.0;
    std::array<double, 3> axis_energy{1.0, 0.6, 0.3};
    double frame_jitter = 0.05;

    // class signatures
    double partial_blade_scale = 0.6;
    double partial_am_depth = 0.3;
    double partial_am_min_hz = 0.5;
    double partial_am_max_hz = 2.0;
    double idle_scale = 0.1;
    double idle_noise_scale = 1.0;
    double dry_odd_scale = 1.5;
    double dry_noise_scale = 2.0;
    double blockage_blade_scale = 2.5;
    double blockage_fundamental_scale = 0.5;
    double blockage_noise_scale = 1.0;
    double cavitation_noise_scale = 5.0;
    double cavitation_burst_min_ms = 10.0;
    double cavitation_burst_max_ms = 30.0;
    int cavitation_bursts = 2;

    // scenario jitters: rotation (degrees), gain, harmonic amplitude
    std::array<double, 3> cooldown{0.0, 0.01, 0.0};
    std::array<double, 3> sensor_reattach{15.0, 0.05, 0.0};
    std::array<double, 3> screws_reattach{15.0, 0.05, 0.10};
    std::array<double, 3> dismantle_rebuild{15.0, 0.08, 0.15};
    std::array<double, 3> different_pump{20.0, 0.10, 0.15};

    // series layout
    int frames_per_class = 30;
    std::int64_t frame_spacing_ms = 60'000;
    std::int64_t class_gap_ms = 2 * 3'600'000;
    std::int64_t start_ms = 1'600'000'000'000;

    // Throws sentinel::Error naming the offending field.
    void validate() const;
};

// Parses "key = value" lines ('#' starts a comment; arrays are
// comma-separated). Unknown keys and bad values raise ParseError naming the
// key and line.
SynthConstants parse_synth_constants(const std::string& text);
SynthConstants load_synth_constants(const std::filesystem::path& path);
std::string format_synth_constants(const SynthConstants& c);

struct PumpConfig {
    std::string pump_id;
    double shaft_hz = 49.0;
    int blade_count = 6;
    std::array<double, 5> shaft_amps{};
    std::array<double, 2> blade_amps{};
    double noise_floor = 0.0;
    double impact_amp = 0.0;
    double gain = 1.0;
    Rotation mounting;  // sensor_from_world

    double blade_hz() const { return shaft_hz * blade_count; }
    // Throws unless 10 < shaft_hz < 200 and every amplitude is >= 0.
    void validate() const;
    // Scalar parameters in a fixed order, for comparing drawn pumps.
    std::vector<double> parameter_vector() const;

    bool operator==(const PumpConfig&) const = default;
};

enum class Scenario { cooldown, sensor_reattach, screws_reattach, dismantle_rebuild, different_pump };

const char* to_string(Scenario s);

struct ScenarioPerturbation {
    Scenario kind = Scenario::cooldown;
    double rotation_deg = 0.0;
    double gain = 0.0;
    double harmonic = 0.0;

    static ScenarioPerturbation of(Scenario kind, const SynthConstants& c);
};

// Pump drawn from the family distribution with a random mounting rotation.
PumpConfig draw_pump(const std::string& pump_id, const SynthConstants& c, std::uint64_t seed);

// Perturbed copy of the pump: gain scaled by U(1-g, 1+g), each harmonic by
// U(1-h, 1+h), mounting composed with a rotation of up to rotation_deg about a
// random axis. Zero magnitudes leave the corresponding field untouched.
PumpConfig perturb(const PumpConfig& pump, const ScenarioPerturbation& p, std::uint64_t seed);

Frame simulate_frame(const PumpConfig& pump, ClassLabel label, std::int64_t timestamp_ms, std::uint64_t seed,
                     const SynthConstants& c = {});

struct Series {
    std::vector<std::pair<std::string, Dataset>> datasets;  // TrainingSetI, T1..T4, TrainingSetII, T5..T8
    std::map<std::string, PumpConfig> pumps;                // by dataset name

    const Dataset& at(const std::string& name) const;
};

// One dataset: classes 1..6 in runs of frames_per_class, frames
// frame_spacing_ms apart and runs class_gap_ms apart.
Dataset simulate_dataset(const PumpConfig& pump, const std::string& provenance, std::int64_t start_ms,
                         std::uint64_t seed, const SynthConstants& c);

Series generate_series(std::uint64_t base_seed, const SynthConstants& c = {});

}  // namespace sentinel
