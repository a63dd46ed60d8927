#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/alignment.hpp"
#include "sentinel/ann.hpp"
#include "sentinel/dataset.hpp"
#include "sentinel/detector.hpp"
#include "sentinel/features.hpp"
#include "sentinel/postprocess.hpp"
#include "sentinel/rocket.hpp"

namespace sentinel {

enum class ClassifierKind { ann, rocket };

const char* to_string(ClassifierKind k);
ClassifierKind parse_classifier(const std::string& name);

struct VariantFlags {
    bool align = true;
    bool smooth = false;
    bool autoencoder = false;

    // Accepts m, ms, vm, vms, vmsa (case-insensitive).
    static VariantFlags parse(const std::string& name);
    // M, M+S, V+M, V+M+S, V+M+S+A.
    std::string name() const;
    // Short form used on the command line.
    std::string key() const;

    bool operator==(const VariantFlags&) const = default;
};

struct PipelineConfig {
    ClassifierKind classifier = ClassifierKind::ann;
    VariantFlags variant;
    std::uint64_t seed = 0;
    std::size_t kernels = kDefaultKernelCount;
    std::size_t ridge_folds = 5;
    AdamConfig ann;
    AdamConfig ae = AdamConfig::autoencoder();

    // Seeds of every stochastic stage derived from `seed`.
    static PipelineConfig make(ClassifierKind kind, VariantFlags variant, std::uint64_t seed,
                               std::size_t kernels = kDefaultKernelCount);
    std::uint64_t kernel_seed() const;
};

struct TrainedPipeline {
    PipelineConfig config;
    std::map<std::string, Rotation> rotations;  // calibration per training pump id
    Rotation default_rotation;                   // for pumps without their own calibration
    GaussianNormalizer normalizer;
    Mlp mlp;
    std::vector<Kernel> kernels;  // regenerated from (kernel_seed, kernels, 512)
    RidgeClassifier ridge;
    std::optional<Autoencoder> autoencoder;
    AnomalyThreshold threshold;

    // Rotation for a pump: its own calibration if trained on, else the default.
    const Rotation& rotation_for(const std::string& pump_id) const;
    // Classifier probabilities for a frame already in the model's coordinates.
    ClassProbabilities classify(const Frame& prepared) const;
    // Frame in the model's coordinates using the stored calibration.
    Frame prepare(const Frame& raw) const;
};

struct Detector {
    Autoencoder autoencoder;
    AnomalyThreshold threshold;
};

inline constexpr std::size_t kThresholdHoldoutStride = 5;

// Autoencoder on the healthy frames of `data`. Every 5th healthy frame per
// class is held out of training; the threshold is fitted on the errors of
// those held-out frames, since errors on frames the network has fitted are
// biased low.
Detector fit_detector(const Dataset& data, const AdamConfig& cfg);

// Fits alignment, the configured classifier and (for variant A) the
// autoencoder. The autoencoder trains on the healthy frames of
// `ae_training` when given, else on those of `training` (see fit_detector).
TrainedPipeline train_pipeline(const Dataset& training, const PipelineConfig& config,
                               const Dataset* ae_training = nullptr);

struct FramePrediction {
    ClassProbabilities raw;
    ClassProbabilities smoothed;
    ClassLabel classifier_class{1};
    std::optional<AeFlag> ae_flag;
    ClassLabel final_class{1};
};

enum class AlignmentSource {
    stored,       // the rotation kept from training
    recalibrate,  // re-estimated per pump id on the evaluated dataset
};

// Classifier probabilities for every frame (no postprocessing).
std::vector<ClassProbabilities> classify_dataset(const TrainedPipeline& p, const Dataset& data,
                                                 AlignmentSource source);

std::vector<AeFlag> detect_dataset(const TrainedPipeline& p, const Dataset& data);

// Applies smoothing (per pump id, in dataset order) and voting according to
// the flags. `ae_flags` is required when flags.autoencoder is set.
std::vector<FramePrediction> postprocess_dataset(const Dataset& data, std::span<const ClassProbabilities> raw,
                                                 VariantFlags flags, const std::vector<AeFlag>* ae_flags);

// classify_dataset + detect_dataset + postprocess_dataset with the
// pipeline's own variant.
std::vector<FramePrediction> predict_dataset(const TrainedPipeline& p, const Dataset& data, AlignmentSource source);

}  // namespace sentinel
