#include "sentinel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "sentinel/error.hpp"
#include "sentinel/json_codec.hpp"

namespace sentinel {

ClassLabel::ClassLabel(int id) : id_(id) {
    if (id < 1 || id > static_cast<int>(kNumClasses)) {
        throw Error("class id out of range 1..6: " + std::to_string(id));
    }
}

void validate_frame(const Frame& frame) {
    static constexpr char kNames[] = {'x', 'y', 'z'};
    for (std::size_t a = 0; a < 3; ++a) {
        const Axis& samples = frame.axis(a);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!std::isfinite(samples[i])) {
                throw Error(std::string("axis ") + kNames[a] + ": non-finite sample at index " +
                            std::to_string(i));
            }
        }
    }
}

void validate_dataset(const Dataset& dataset) {
    std::map<std::string, std::int64_t> last_seen;
    for (const Frame& frame : dataset.frames) {
        validate_frame(frame);
        auto [it, inserted] = last_seen.try_emplace(frame.pump_id, frame.timestamp_ms);
        if (!inserted) {
            if (frame.timestamp_ms < it->second) {
                throw Error("timestamps decrease for pump " + frame.pump_id);
            }
            it->second = frame.timestamp_ms;
        }
    }
}

std::array<std::size_t, kNumClasses> class_counts(const Dataset& dataset) {
    std::array<std::size_t, kNumClasses> counts{};
    for (const Frame& frame : dataset.frames) {
        if (!frame.label) throw Error("unlabeled frame in labeled dataset");
        ++counts[frame.label->index()];
    }
    return counts;
}

namespace {

void read_axis(const nlohmann::json& object, const char* key, Axis& out) {
    auto it = object.find(key);
    if (it == object.end()) throw ParseError(std::string("missing axis ") + key);
    if (!it->is_array()) throw ParseError(std::string("axis ") + key + ": not an array");
    if (it->size() != kFrameLength) {
        throw ParseError(std::string("axis ") + key + ": expected 512, got " + std::to_string(it->size()));
    }
    for (std::size_t i = 0; i < kFrameLength; ++i) {
        const auto& v = (*it)[i];
        if (!v.is_number()) {
            throw ParseError(std::string("axis ") + key + ": non-numeric sample at index " + std::to_string(i));
        }
        out[i] = v.get<double>();
        if (!std::isfinite(out[i])) {
            throw ParseError(std::string("axis ") + key + ": non-finite sample at index " + std::to_string(i));
        }
    }
}

}  // namespace

nlohmann::json frame_to_json(const Frame& frame) {
    nlohmann::json object;
    object["pump_id"] = frame.pump_id;
    object["timestamp"] = frame.timestamp_ms;
    object["x"] = frame.x;
    object["y"] = frame.y;
    object["z"] = frame.z;
    if (frame.label) object["label"] = frame.label->id();
    return object;
}

Frame frame_from_json(const nlohmann::json& object) {
    if (!object.is_object()) throw ParseError("frame is not a JSON object");
    Frame frame;
    auto pump = object.find("pump_id");
    if (pump == object.end() || !pump->is_string()) throw ParseError("missing string field pump_id");
    frame.pump_id = pump->get<std::string>();
    auto ts = object.find("timestamp");
    if (ts == object.end() || !ts->is_number_integer()) throw ParseError("missing integer field timestamp");
    frame.timestamp_ms = ts->get<std::int64_t>();
    read_axis(object, "x", frame.x);
    read_axis(object, "y", frame.y);
    read_axis(object, "z", frame.z);
    auto label = object.find("label");
    if (label != object.end() && !label->is_null()) {
        if (!label->is_number_integer()) throw ParseError("label must be an integer");
        try {
            frame.label = ClassLabel(label->get<int>());
        } catch (const Error& e) {
            throw ParseError(e.what());
        }
    }
    return frame;
}

Dataset load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    Dataset dataset;
    dataset.provenance = path.stem().string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json object;
        try {
            object = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        try {
            dataset.frames.push_back(frame_from_json(object));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    try {
        validate_dataset(dataset);
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
    return dataset;
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const Frame& frame : dataset.frames) {
        out << frame_to_json(frame).dump() << '\n';
    }
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error("test_fraction must lie in (0, 1)");
    }
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
        const auto& label = dataset.frames[i].label;
        if (!label) throw Error("stratified_split requires labeled frames");
        by_class[label->index()].push_back(i);
    }

    std::mt19937_64 rng(seed);
    std::vector<bool> in_test(dataset.frames.size(), false);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < 2) {
            throw Error("class " + std::to_string(c + 1) + " has a single frame; cannot split");
        }
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(members.size()) * test_fraction + 1e-9));  // 0.29 * 100 -> 29, not 28
        for (std::size_t k = 0; k < n_test; ++k) in_test[members[k]] = true;
    }

    Dataset train{{}, dataset.provenance + ":train"};
    Dataset test{{}, dataset.provenance + ":test"};
    for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
        (in_test[i] ? test : train).frames.push_back(dataset.frames[i]);
    }
    return {std::move(train), std::move(test)};
}

Dataset concat(const std::vector<Dataset>& parts) {
    Dataset out;
    for (const Dataset& part : parts) {
        if (!out.provenance.empty()) out.provenance += '+';
        out.provenance += part.provenance;
        out.frames.insert(out.frames.end(), part.frames.begin(), part.frames.end());
    }
    return out;
}

}  // namespace sentinel
