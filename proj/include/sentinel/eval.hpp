#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sentinel/dataset.hpp"
#include "sentinel/pipeline.hpp"

namespace sentinel {

double accuracy(std::span<const ClassLabel> predictions, std::span<const ClassLabel> labels);

// confusion[truth index][predicted index]
using Confusion = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;
Confusion confusion_matrix(std::span<const ClassLabel> predictions, std::span<const ClassLabel> labels);

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;  // two-sided
};

// t = mean(a - b) / (sd(a - b) / sqrt(n)), df = n - 1.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);
// Welch's t with Welch-Satterthwaite degrees of freedom.
TTestResult unpaired_ttest(std::span<const double> a, std::span<const double> b);

struct ExperimentResult {
    std::string model;       // "I" or "II"
    std::string classifier;  // "ANN" or "ROCKET"
    std::string variant;     // M, M+S, V+M, V+M+S, V+M+S+A
    std::string test_set;
    double accuracy = 0.0;
    std::size_t n_frames = 0;
    Confusion confusion{};
};

ExperimentResult evaluate_predictions(const Dataset& data, std::span<const FramePrediction> predictions,
                                      std::string model, std::string classifier, std::string variant);

struct Comparison {
    std::string name;
    std::string description;  // which cells enter each group
    bool paired = true;
    std::string label_a;  // the "after" / treatment group
    std::string label_b;
    std::vector<double> a;
    std::vector<double> b;
    std::optional<TTestResult> test;  // empty when the test is undefined
    std::string note;                 // reason the test is undefined

    double mean_a() const;
    double mean_b() const;
    double sd_a() const;  // sample sd, 0 for n < 2
    double sd_b() const;
};

struct GridConfig {
    std::uint64_t seed = 1;
    std::size_t kernels = kDefaultKernelCount;
    std::vector<std::string> autoencoder_test_sets{"T1"};
    std::function<void(const std::string&)> progress;
};

struct GridReport {
    std::vector<ExperimentResult> cells;      // the main grid, in key order
    std::vector<ExperimentResult> auxiliary;  // M+S cells used by the smoothing comparison
    std::vector<Comparison> comparisons;
    std::vector<std::string> warnings;

    const ExperimentResult& cell(const std::string& model, const std::string& classifier, const std::string& variant,
                                 const std::string& test_set) const;
};

inline const std::array<std::string, 8> kTestSets{"T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8"};

// Needs TrainingSetI, TrainingSetII and T1..T8. Model I trains on
// TrainingSetI, Model II on both training sets. Alignment is recalibrated on
// every test session. The autoencoder is fitted to the healthy frames of
// TrainingSetI, the asset the within-pump sets come from.
GridReport run_grid(const std::map<std::string, Dataset>& datasets, const GridConfig& config);

// model,classifier,variant,test_set,accuracy,n_frames
std::string results_csv(std::span<const ExperimentResult> rows);
void write_results_csv(std::span<const ExperimentResult> rows, const std::filesystem::path& path);
// comparison,test,group_a,n_a,mean_a,sd_a,group_b,n_b,mean_b,sd_b,t,df,p,cells
std::string summary_csv(std::span<const Comparison> comparisons);
// Table laid out like the published one: test sets down, model x
// classifier x variant across. Cells that were not run show '-'.
std::string format_grid_table(const GridReport& report);
std::string format_comparisons(std::span<const Comparison> comparisons);

}  // namespace sentinel
