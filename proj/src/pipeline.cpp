#include "sentinel/pipeline.hpp"

#include <algorithm>
#include <cctype>

#include "sentinel/error.hpp"
#include "sentinel/parallel.hpp"

namespace sentinel {

const char* to_string(ClassifierKind k) { return k == ClassifierKind::ann ? "ann" : "rocket"; }

ClassifierKind parse_classifier(const std::string& name) {
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    if (n == "ann") return ClassifierKind::ann;
    if (n == "rocket") return ClassifierKind::rocket;
    throw Error("unknown classifier kind '" + name + "' (expected ann or rocket)");
}

VariantFlags VariantFlags::parse(const std::string& name) {
    std::string n;
    for (unsigned char c : name)
        if (c != '+') n.push_back(static_cast<char>(std::tolower(c)));
    if (n == "m") return {false, false, false};
    if (n == "ms") return {false, true, false};
    if (n == "vm") return {true, false, false};
    if (n == "vms") return {true, true, false};
    if (n == "vmsa") return {true, true, true};
    throw Error("unknown variant '" + name + "' (expected m, vm, vms or vmsa)");
}

std::string VariantFlags::name() const {
    std::string s = align ? "V+M" : "M";
    if (smooth) s += "+S";
    if (autoencoder) s += "+A";
    return s;
}

std::string VariantFlags::key() const {
    std::string s = align ? "vm" : "m";
    if (smooth) s += "s";
    if (autoencoder) s += "a";
    return s;
}

PipelineConfig PipelineConfig::make(ClassifierKind kind, VariantFlags variant, std::uint64_t seed,
                                    std::size_t kernels) {
    PipelineConfig c;
    c.classifier = kind;
    c.variant = variant;
    c.seed = seed;
    c.kernels = kernels;
    c.ann.seed = seed * 1000003ULL + 11;
    c.ae = AdamConfig::autoencoder(seed * 1000003ULL + 29);
    return c;
}

std::uint64_t PipelineConfig::kernel_seed() const { return seed * 1000003ULL + 7; }

const Rotation& TrainedPipeline::rotation_for(const std::string& pump_id) const {
    const auto it = rotations.find(pump_id);
    return it == rotations.end() ? default_rotation : it->second;
}

Frame TrainedPipeline::prepare(const Frame& raw) const {
    return config.variant.align ? align_to_world(raw, rotation_for(raw.pump_id)) : raw;
}

ClassProbabilities TrainedPipeline::classify(const Frame& prepared) const {
    if (config.classifier == ClassifierKind::ann) {
        const auto windows = normalizer.apply(frame_features(prepared));
        return frame_proba(mlp, windows);
    }
    return predict_proba_rocket(ridge, prepared, kernels);
}

namespace {

std::vector<Frame> healthy_frames(const Dataset& d) {
    std::vector<Frame> out;
    for (const Frame& f : d.frames) {
        if (!f.label) throw Error("training frames must be labeled");
        if (f.label->healthy()) out.push_back(f);
    }
    return out;
}

}  // namespace

Detector fit_detector(const Dataset& data, const AdamConfig& cfg) {
    Dataset healthy;
    healthy.provenance = data.provenance;
    healthy.frames = healthy_frames(data);
    // Every 5th healthy frame of each class (by position) is kept out of
    // training and only scored for the threshold.
    std::vector<Frame> fit, held;
    std::array<std::size_t, kNumClasses> seen{};
    for (const Frame& f : healthy.frames) {
        (seen[f.label->index()]++ % kThresholdHoldoutStride == kThresholdHoldoutStride - 1 ? held : fit).push_back(f);
    }
    if (fit.size() < 10 || held.size() < 2) {
        throw Error("variant A needs at least 13 healthy training frames, found " + std::to_string(healthy.size()));
    }
    Detector d{train_autoencoder(fit, cfg), {}};
    std::vector<double> errors(held.size());
    parallel_for(held.size(), [&](std::size_t i) { errors[i] = reconstruction_error(d.autoencoder, held[i]); });
    d.threshold = fit_threshold(errors);
    return d;
}

TrainedPipeline train_pipeline(const Dataset& training, const PipelineConfig& config, const Dataset* ae_training) {
    if (training.empty()) throw Error("train_pipeline: empty training set");
    validate_dataset(training);
    const auto counts = class_counts(training);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (counts[c] == 0) throw Error("train_pipeline: class " + std::to_string(c + 1) + " missing from training set");
    }

    TrainedPipeline p;
    p.config = config;

    Dataset prepared = training;
    if (config.variant.align) {
        SessionAlignment s = align_per_session(training);
        prepared = std::move(s.aligned);
        p.rotations = std::move(s.rotations);
        p.default_rotation = p.rotations.at(training.frames.front().pump_id);
    }

    if (config.classifier == ClassifierKind::ann) {
        std::vector<std::vector<FeatureVector>> per_frame(prepared.size());
        parallel_for(prepared.size(), [&](std::size_t i) { per_frame[i] = frame_features(prepared.frames[i]); });
        std::vector<FeatureVector> features;
        features.reserve(prepared.size() * 3 * kWindowsPerFrame);
        for (auto& v : per_frame) features.insert(features.end(), v.begin(), v.end());
        p.normalizer = GaussianNormalizer::fit(features);
        const auto normalized = p.normalizer.apply(features);
        p.mlp = train_ann(normalized, config.ann).first;
    } else {
        p.kernels = generate_kernels(config.kernels, kFrameLength, config.kernel_seed());
        const Eigen::MatrixXd x = transform_frames(prepared.frames, p.kernels);
        std::vector<ClassLabel> labels;
        labels.reserve(prepared.size());
        for (const Frame& f : prepared.frames) labels.push_back(*f.label);
        p.ridge = ridge_cv_fit(x, labels, default_lambda_grid(), config.ridge_folds, config.seed);
    }

    if (config.variant.autoencoder) {
        Detector d = fit_detector(ae_training ? *ae_training : training, config.ae);
        p.autoencoder = std::move(d.autoencoder);
        p.threshold = d.threshold;
    }
    return p;
}

std::vector<ClassProbabilities> classify_dataset(const TrainedPipeline& p, const Dataset& data,
                                                 AlignmentSource source) {
    Dataset prepared;
    if (!p.config.variant.align) {
        prepared = data;
    } else if (source == AlignmentSource::recalibrate) {
        prepared = align_per_session(data).aligned;
    } else {
        prepared.frames.reserve(data.size());
        for (const Frame& f : data.frames) prepared.frames.push_back(p.prepare(f));
    }
    std::vector<ClassProbabilities> out(prepared.size());
    parallel_for(prepared.size(), [&](std::size_t i) { out[i] = p.classify(prepared.frames[i]); });
    return out;
}

std::vector<AeFlag> detect_dataset(const TrainedPipeline& p, const Dataset& data) {
    if (!p.autoencoder) throw Error("pipeline has no autoencoder");
    std::vector<AeFlag> out(data.size());
    parallel_for(data.size(), [&](std::size_t i) { out[i] = detect(*p.autoencoder, p.threshold, data.frames[i]); });
    return out;
}

std::vector<FramePrediction> postprocess_dataset(const Dataset& data, std::span<const ClassProbabilities> raw,
                                                 VariantFlags flags, const std::vector<AeFlag>* ae_flags) {
    if (raw.size() != data.size()) throw Error("postprocess: probability count does not match frames");
    if (flags.autoencoder && (!ae_flags || ae_flags->size() != data.size())) {
        throw Error("postprocess: autoencoder flags required for variant " + flags.name());
    }
    std::map<std::string, SmootherState> states;
    std::vector<FramePrediction> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        FramePrediction fp;
        fp.raw = raw[i];
        fp.classifier_class = raw[i].argmax();
        if (flags.smooth) {
            const Frame& f = data.frames[i];
            auto [next, smoothed] = smooth_step(std::move(states[f.pump_id]), raw[i], f.timestamp_ms);
            states[f.pump_id] = std::move(next);
            fp.smoothed = smoothed;
        } else {
            fp.smoothed = raw[i];
        }
        if (flags.autoencoder) {
            fp.ae_flag = (*ae_flags)[i];
            fp.final_class = vote(fp.smoothed, *fp.ae_flag);
        } else {
            fp.final_class = fp.smoothed.argmax();
        }
        out.push_back(fp);
    }
    return out;
}

std::vector<FramePrediction> predict_dataset(const TrainedPipeline& p, const Dataset& data, AlignmentSource source) {
    const auto raw = classify_dataset(p, data, source);
    std::vector<AeFlag> flags;
    if (p.config.variant.autoencoder) flags = detect_dataset(p, data);
    return postprocess_dataset(data, raw, p.config.variant, p.config.variant.autoencoder ? &flags : nullptr);
}

}  // namespace sentinel
