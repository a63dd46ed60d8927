#include "sentinel/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <variant>

#include "sentinel/error.hpp"

namespace sentinel {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (std::uint64_t p : parts) h = splitmix(h ^ p);
    return h;
}

std::uint64_t hash_string(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) h = (h ^ ch) * 1099511628211ULL;
    return h;
}

constexpr double kTwoPi = 2.0 * M_PI;

using Field = std::variant<double SynthConstants::*, int SynthConstants::*, std::int64_t SynthConstants::*,
                           std::array<double, 2> SynthConstants::*, std::array<double, 3> SynthConstants::*,
                           std::array<double, 5> SynthConstants::*>;

const std::vector<std::pair<std::string, Field>>& fields() {
    using C = SynthConstants;
    static const std::vector<std::pair<std::string, Field>> table{
        {"shaft_hz", &C::shaft_hz},
        {"blade_count", &C::blade_count},
        {"shaft_amps", &C::shaft_amps},
        {"blade_amps", &C::blade_amps},
        {"noise_floor", &C::noise_floor},
        {"impact_amp", &C::impact_amp},
        {"impact_decay_ms", &C::impact_decay_ms},
        {"family_spread", &C::family_spread},
        {"mount_max_deg", &C::mount_max_deg},
        {"gravity", &C::gravity},
        {"axis_energy", &C::axis_energy},
        {"frame_jitter", &C::frame_jitter},
        {"partial_blade_scale", &C::partial_blade_scale},
        {"partial_am_depth", &C::partial_am_depth},
        {"partial_am_min_hz", &C::partial_am_min_hz},
        {"partial_am_max_hz", &C::partial_am_max_hz},
        {"idle_scale", &C::idle_scale},
        {"idle_noise_scale", &C::idle_noise_scale},
        {"dry_odd_scale", &C::dry_odd_scale},
        {"dry_noise_scale", &C::dry_noise_scale},
        {"blockage_blade_scale", &C::blockage_blade_scale},
        {"blockage_fundamental_scale", &C::blockage_fundamental_scale},
        {"blockage_noise_scale", &C::blockage_noise_scale},
        {"cavitation_noise_scale", &C::cavitation_noise_scale},
        {"cavitation_burst_min_ms", &C::cavitation_burst_min_ms},
        {"cavitation_burst_max_ms", &C::cavitation_burst_max_ms},
        {"cavitation_bursts", &C::cavitation_bursts},
        {"cooldown", &C::cooldown},
        {"sensor_reattach", &C::sensor_reattach},
        {"screws_reattach", &C::screws_reattach},
        {"dismantle_rebuild", &C::dismantle_rebuild},
        {"different_pump", &C::different_pump},
        {"frames_per_class", &C::frames_per_class},
        {"frame_spacing_ms", &C::frame_spacing_ms},
        {"class_gap_ms", &C::class_gap_ms},
        {"start_ms", &C::start_ms},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key, std::size_t line) {
    const std::string t = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ParseError("bad value for '" + key + "': '" + t + "'", line);
    }
    return value;
}

template <std::size_t N>
std::array<double, N> parse_array(const std::string& text, const std::string& key, std::size_t line) {
    std::array<double, N> out{};
    std::stringstream ss(text);
    std::string item;
    std::size_t i = 0;
    while (std::getline(ss, item, ',')) {
        if (i == N) throw ParseError("'" + key + "' expects " + std::to_string(N) + " values", line);
        out[i++] = parse_number<double>(item, key, line);
    }
    if (i != N) throw ParseError("'" + key + "' expects " + std::to_string(N) + " values", line);
    return out;
}

// Shortest text that parses back to the same double.
std::string shortest(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <std::size_t N>
std::string join(const std::array<double, N>& a) {
    std::string out;
    for (std::size_t i = 0; i < N; ++i) out += (i ? ", " : "") + shortest(a[i]);
    return out;
}

template <std::size_t N>
bool all_non_negative(const std::array<double, N>& a) {
    for (double v : a)
        if (!(v >= 0.0) || !std::isfinite(v)) return false;
    return true;
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        Eigen::Vector3d v(n(rng), n(rng), n(rng));
        if (v.norm() > 1e-6) return v.normalized();
    }
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Fixed per-harmonic, per-axis phase offsets shared by every pump of the family.
double phase_offset(std::size_t harmonic, std::size_t axis) {
    return kTwoPi * static_cast<double>(mix({harmonic, axis, 0x5eedULL}) >> 11) * 0x1.0p-53;
}

}  // namespace

void SynthConstants::validate() const {
    auto require = [](bool ok, const char* field) {
        if (!ok) throw Error(std::string("synth constant '") + field + "' is out of range");
    };
    require(shaft_hz > 10.0 && shaft_hz < 200.0, "shaft_hz");
    require(blade_count >= 1, "blade_count");
    require(all_non_negative(shaft_amps), "shaft_amps");
    require(all_non_negative(blade_amps), "blade_amps");
    require(noise_floor > 0.0, "noise_floor");
    require(impact_amp >= 0.0, "impact_amp");
    require(impact_decay_ms > 0.0, "impact_decay_ms");
    require(family_spread >= 0.0 && family_spread < 1.0, "family_spread");
    require(mount_max_deg >= 0.0 && mount_max_deg <= 180.0, "mount_max_deg");
    require(std::isfinite(gravity), "gravity");
    require(all_non_negative(axis_energy), "axis_energy");
    require(frame_jitter >= 0.0 && frame_jitter < 1.0, "frame_jitter");
    require(partial_blade_scale >= 0.0, "partial_blade_scale");
    require(partial_am_depth >= 0.0 && partial_am_depth < 1.0, "partial_am_depth");
    require(partial_am_min_hz >= 0.0 && partial_am_min_hz <= partial_am_max_hz, "partial_am_min_hz");
    require(idle_scale >= 0.0, "idle_scale");
    require(idle_noise_scale >= 0.0, "idle_noise_scale");
    require(dry_odd_scale >= 0.0, "dry_odd_scale");
    require(dry_noise_scale >= 0.0, "dry_noise_scale");
    require(blockage_blade_scale >= 0.0, "blockage_blade_scale");
    require(blockage_fundamental_scale >= 0.0, "blockage_fundamental_scale");
    require(blockage_noise_scale >= 0.0, "blockage_noise_scale");
    require(cavitation_noise_scale >= 0.0, "cavitation_noise_scale");
    require(cavitation_burst_min_ms > 0.0 && cavitation_burst_min_ms <= cavitation_burst_max_ms,
            "cavitation_burst_min_ms");
    require(cavitation_bursts >= 0, "cavitation_bursts");
    const std::array<const std::array<double, 3>*, 5> scenarios{&cooldown, &sensor_reattach, &screws_reattach,
                                                                &dismantle_rebuild, &different_pump};
    const std::array<const char*, 5> scenario_names{"cooldown", "sensor_reattach", "screws_reattach",
                                                    "dismantle_rebuild", "different_pump"};
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        const auto& j = *scenarios[s];
        require(all_non_negative(j) && j[1] < 1.0 && j[2] < 1.0, scenario_names[s]);
        if (s > 0) {
            const auto& prev = *scenarios[s - 1];
            for (std::size_t k = 0; k < 3; ++k) require(j[k] >= prev[k], scenario_names[s]);
        }
    }
    require(frames_per_class >= 2, "frames_per_class");
    require(frame_spacing_ms > 0, "frame_spacing_ms");
    require(class_gap_ms >= 0, "class_gap_ms");
}

SynthConstants parse_synth_constants(const std::string& text) {
    SynthConstants c;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string body = trim(raw.substr(0, raw.find('#')));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value', got '" + body + "'", line);
        const std::string key = trim(body.substr(0, eq));
        const std::string value = body.substr(eq + 1);
        const auto& table = fields();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
        if (it == table.end()) throw ParseError("unknown key '" + key + "'", line);
        std::visit(
            [&](auto member) {
                using T = std::remove_cvref_t<decltype(c.*member)>;
                if constexpr (std::is_same_v<T, double> || std::is_same_v<T, int> ||
                              std::is_same_v<T, std::int64_t>) {
                    c.*member = parse_number<T>(value, key, line);
                } else {
                    c.*member = parse_array<std::tuple_size_v<T>>(value, key, line);
                }
            },
            it->second);
    }
    c.validate();
    return c;
}

SynthConstants load_synth_constants(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_synth_constants(ss.str());
}

std::string format_synth_constants(const SynthConstants& c) {
    std::ostringstream os;
    for (const auto& [key, field] : fields()) {
        os << key << " = ";
        std::visit(
            [&](auto member) {
                using T = std::remove_cvref_t<decltype(c.*member)>;
                if constexpr (std::is_same_v<T, double>) {
                    os << shortest(c.*member);
                } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::int64_t>) {
                    os << c.*member;
                } else {
                    os << join(c.*member);
                }
            },
            field);
        os << '\n';
    }
    return os.str();
}

void PumpConfig::validate() const {
    if (!(shaft_hz > 10.0 && shaft_hz < 200.0)) throw Error("pump " + pump_id + ": shaft frequency out of (10, 200) Hz");
    if (blade_count < 1) throw Error("pump " + pump_id + ": blade count must be positive");
    if (!all_non_negative(shaft_amps) || !all_non_negative(blade_amps) || !(noise_floor >= 0.0) ||
        !(impact_amp >= 0.0) || !(gain > 0.0)) {
        throw Error("pump " + pump_id + ": amplitudes must be non-negative");
    }
}

std::vector<double> PumpConfig::parameter_vector() const {
    std::vector<double> v{shaft_hz};
    v.insert(v.end(), shaft_amps.begin(), shaft_amps.end());
    v.insert(v.end(), blade_amps.begin(), blade_amps.end());
    v.push_back(noise_floor);
    v.push_back(impact_amp);
    v.push_back(gain);
    for (double r : mounting.row_major()) v.push_back(r);
    return v;
}

const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::cooldown: return "cooldown";
        case Scenario::sensor_reattach: return "sensor_reattach";
        case Scenario::screws_reattach: return "screws_reattach";
        case Scenario::dismantle_rebuild: return "dismantle_rebuild";
        case Scenario::different_pump: return "different_pump";
    }
    return "?";
}

ScenarioPerturbation ScenarioPerturbation::of(Scenario kind, const SynthConstants& c) {
    const std::array<double, 3>* j = nullptr;
    switch (kind) {
        case Scenario::cooldown: j = &c.cooldown; break;
        case Scenario::sensor_reattach: j = &c.sensor_reattach; break;
        case Scenario::screws_reattach: j = &c.screws_reattach; break;
        case Scenario::dismantle_rebuild: j = &c.dismantle_rebuild; break;
        case Scenario::different_pump: j = &c.different_pump; break;
    }
    return {kind, (*j)[0], (*j)[1], (*j)[2]};
}

PumpConfig draw_pump(const std::string& pump_id, const SynthConstants& c, std::uint64_t seed) {
    c.validate();
    std::mt19937_64 rng(mix({seed, hash_string(pump_id)}));
    auto factor = [&] { return uniform(rng, 1.0 - c.family_spread, 1.0 + c.family_spread); };
    PumpConfig p;
    p.pump_id = pump_id;
    p.shaft_hz = c.shaft_hz * factor();
    p.blade_count = c.blade_count;
    for (std::size_t k = 0; k < p.shaft_amps.size(); ++k) p.shaft_amps[k] = c.shaft_amps[k] * factor();
    for (std::size_t k = 0; k < p.blade_amps.size(); ++k) p.blade_amps[k] = c.blade_amps[k] * factor();
    p.noise_floor = c.noise_floor * factor();
    p.impact_amp = c.impact_amp * factor();
    const Eigen::Vector3d axis = random_unit(rng);
    p.mounting = Rotation::axis_angle(axis, uniform(rng, 0.0, c.mount_max_deg) * M_PI / 180.0);
    p.validate();
    return p;
}

PumpConfig perturb(const PumpConfig& pump, const ScenarioPerturbation& s, std::uint64_t seed) {
    std::mt19937_64 rng(mix({seed, static_cast<std::uint64_t>(s.kind) + 1, hash_string(pump.pump_id)}));
    PumpConfig p = pump;
    if (s.gain > 0.0) p.gain *= uniform(rng, 1.0 - s.gain, 1.0 + s.gain);
    if (s.harmonic > 0.0) {
        for (double& a : p.shaft_amps) a *= uniform(rng, 1.0 - s.harmonic, 1.0 + s.harmonic);
        for (double& a : p.blade_amps) a *= uniform(rng, 1.0 - s.harmonic, 1.0 + s.harmonic);
    }
    if (s.rotation_deg > 0.0) {
        const Eigen::Vector3d axis = random_unit(rng);
        const double angle = uniform(rng, 0.0, s.rotation_deg) * M_PI / 180.0;
        p.mounting = Rotation::axis_angle(axis, angle) * p.mounting;
    }
    p.validate();
    return p;
}

Frame simulate_frame(const PumpConfig& pump, ClassLabel label, std::int64_t timestamp_ms, std::uint64_t seed,
                     const SynthConstants& c) {
    std::mt19937_64 rng(mix({seed, static_cast<std::uint64_t>(timestamp_ms), static_cast<std::uint64_t>(label.id()),
                             hash_string(pump.pump_id)}));
    const std::size_t n = kFrameLength;
    const double dt = 1.0 / kSampleRateHz;

    std::array<double, 5> shaft = pump.shaft_amps;
    std::array<double, 2> blade = pump.blade_amps;
    double impact = pump.impact_amp;
    double noise_scale = 1.0;
    bool modulated = false;
    bool bursts = false;
    switch (label.id()) {
        case 2:
            for (double& b : blade) b *= c.partial_blade_scale;
            modulated = true;
            break;
        case 3:
            for (std::size_t k = 0; k < shaft.size(); k += 2) shaft[k] *= c.dry_odd_scale;
            noise_scale = c.dry_noise_scale;
            break;
        case 4:
            for (double& b : blade) b *= c.blockage_blade_scale;
            shaft[0] *= c.blockage_fundamental_scale;
            noise_scale = c.blockage_noise_scale;
            break;
        case 5: bursts = true; break;
        case 6:
            for (double& a : shaft) a *= c.idle_scale;
            for (double& b : blade) b *= c.idle_scale;
            impact *= c.idle_scale;
            noise_scale = c.idle_noise_scale;
            break;
        default: break;
    }
    for (double& a : shaft) a *= uniform(rng, 1.0 - c.frame_jitter, 1.0 + c.frame_jitter);
    for (double& b : blade) b *= uniform(rng, 1.0 - c.frame_jitter, 1.0 + c.frame_jitter);
    impact *= uniform(rng, 1.0 - c.frame_jitter, 1.0 + c.frame_jitter);

    // Shaft angle at the first sample; every harmonic is locked to it.
    const double theta = uniform(rng, 0.0, kTwoPi);

    std::vector<double> envelope(n, 1.0);
    if (modulated) {
        const double fm = uniform(rng, c.partial_am_min_hz, c.partial_am_max_hz);
        const double phi = uniform(rng, 0.0, kTwoPi);
        for (std::size_t i = 0; i < n; ++i) {
            envelope[i] = 1.0 + c.partial_am_depth * std::sin(kTwoPi * fm * static_cast<double>(i) * dt + phi);
        }
    }

    std::vector<double> noise_sd(n, pump.noise_floor * noise_scale);
    if (bursts) {
        for (int b = 0; b < c.cavitation_bursts; ++b) {
            const double len_s = uniform(rng, c.cavitation_burst_min_ms, c.cavitation_burst_max_ms) / 1000.0;
            const auto len = std::min(n, static_cast<std::size_t>(std::lround(len_s * kSampleRateHz)));
            const auto start = std::uniform_int_distribution<std::size_t>(0, n - len)(rng);
            for (std::size_t i = start; i < start + len; ++i) noise_sd[i] = pump.noise_floor * c.cavitation_noise_scale;
        }
    }

    std::array<std::vector<double>, 3> world;
    for (std::size_t a = 0; a < 3; ++a) {
        world[a].assign(n, 0.0);
        const double axis_gain = std::sqrt(c.axis_energy[a]);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) * dt;
            double v = 0.0;
            for (std::size_t k = 0; k < shaft.size(); ++k) {
                const double h = static_cast<double>(k + 1);
                v += shaft[k] * std::sin(kTwoPi * h * pump.shaft_hz * t + h * theta + phase_offset(k, a));
            }
            for (std::size_t j = 0; j < blade.size(); ++j) {
                const double h = static_cast<double>((j + 1) * static_cast<std::size_t>(pump.blade_count));
                v += blade[j] * std::sin(kTwoPi * h * pump.shaft_hz * t + h * theta + phase_offset(5 + j, a));
            }
            world[a][i] = axis_gain * envelope[i] * v;
        }
    }

    // One-sided impacts on the dominant axis, once per shaft revolution.
    if (impact > 0.0) {
        const double period = 1.0 / pump.shaft_hz;
        const double decay = c.impact_decay_ms / 1000.0;
        double t0 = (kTwoPi - theta) / kTwoPi * period - period;
        for (; t0 < static_cast<double>(n) * dt; t0 += period) {
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) * dt - t0;
                if (t >= 0.0) world[0][i] += envelope[i] * impact * std::exp(-t / decay);
            }
        }
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    Frame frame;
    frame.pump_id = pump.pump_id;
    frame.timestamp_ms = timestamp_ms;
    frame.label = label;
    const Eigen::Matrix3d& m = pump.mounting.matrix();
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector3d w(world[0][i] + noise_sd[i] * gauss(rng), world[1][i] + noise_sd[i] * gauss(rng),
                          world[2][i] + noise_sd[i] * gauss(rng) + c.gravity);
        const Eigen::Vector3d s = pump.gain * (m * w);
        frame.x[i] = s.x();
        frame.y[i] = s.y();
        frame.z[i] = s.z();
    }
    return frame;
}

const Dataset& Series::at(const std::string& name) const {
    for (const auto& [n, d] : datasets)
        if (n == name) return d;
    throw Error("series has no dataset '" + name + "'");
}

Dataset simulate_dataset(const PumpConfig& pump, const std::string& provenance, std::int64_t start_ms,
                         std::uint64_t seed, const SynthConstants& c) {
    Dataset d;
    d.provenance = provenance;
    const auto per_class = static_cast<std::int64_t>(c.frames_per_class);
    const std::int64_t run_ms = per_class * c.frame_spacing_ms + c.class_gap_ms;
    for (int id = 1; id <= static_cast<int>(kNumClasses); ++id) {
        for (std::int64_t f = 0; f < per_class; ++f) {
            const std::int64_t t = start_ms + (id - 1) * run_ms + f * c.frame_spacing_ms;
            d.frames.push_back(simulate_frame(pump, ClassLabel(id), t, seed, c));
        }
    }
    return d;
}

Series generate_series(std::uint64_t base_seed, const SynthConstants& c) {
    c.validate();
    Series s;
    constexpr std::int64_t kSessionSpacingMs = 7LL * 24 * 3'600'000;
    std::int64_t start = c.start_ms;
    std::uint64_t index = 0;
    auto emit = [&](const std::string& name, const PumpConfig& pump) {
        s.datasets.emplace_back(name, simulate_dataset(pump, name, start, mix({base_seed, index, 0xda7aULL}), c));
        s.pumps.emplace(name, pump);
        start += kSessionSpacingMs;
        ++index;
    };

    const PumpConfig x0 = draw_pump("X0", c, mix({base_seed, 1}));
    emit("TrainingSetI", x0);
    const std::array<std::pair<const char*, Scenario>, 4> series_one{{{"T1", Scenario::cooldown},
                                                                      {"T2", Scenario::sensor_reattach},
                                                                      {"T3", Scenario::screws_reattach},
                                                                      {"T4", Scenario::dismantle_rebuild}}};
    for (const auto& [name, kind] : series_one) {
        emit(name, perturb(x0, ScenarioPerturbation::of(kind, c), mix({base_seed, 2, index})));
    }

    emit("TrainingSetII", draw_pump("X", c, mix({base_seed, 3})));
    for (int k = 5; k <= 8; ++k) {
        const PumpConfig pk = draw_pump("P" + std::to_string(k), c, mix({base_seed, 4, static_cast<std::uint64_t>(k)}));
        emit("T" + std::to_string(k),
             perturb(pk, ScenarioPerturbation::of(Scenario::different_pump, c), mix({base_seed, 5, index})));
    }
    return s;
}

}  // namespace sentinel
