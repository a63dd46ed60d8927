#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sentinel/dataset.hpp"

namespace sentinel {

inline constexpr std::size_t kWindowLength = 256;
inline constexpr std::size_t kWindowStride = 16;
inline constexpr std::size_t kWindowsPerFrame = 16;
inline constexpr std::size_t kNumFilters = 26;
inline constexpr std::size_t kNumMfcc = 20;
inline constexpr std::size_t kSpectrumBins = kWindowLength / 2 + 1;
inline constexpr double kMelBreakHz = 1000.0;
inline constexpr double kLogEnergyFloor = 1e-10;

struct Window {
    std::array<double, kWindowLength> samples{};
    std::size_t index = 0;  // 0..15, start offset = 16 * index
};

struct FeatureVector {
    std::array<double, kNumMfcc> coeffs{};
    std::optional<ClassLabel> label;

    bool operator==(const FeatureVector&) const = default;
};

// 16 windows of 256 samples at offsets 0, 16, ..., 240. The offset-256
// window that the stride would also admit is not produced.
std::vector<Window> sliding_windows(std::span<const double> axis_samples);

// Triangular filterbank over the 129-bin power spectrum of a 256-point FFT
// at 6644 Hz: 13 centres evenly spaced up to 1 kHz, 13 centres log-spaced
// from 1 kHz up to Nyquist (3322 Hz).
struct MelFilterbank {
    std::array<double, kNumFilters + 2> edges_hz{};  // filter m spans edges[m]..edges[m+2], centre edges[m+1]
    std::array<std::array<double, kSpectrumBins>, kNumFilters> weights{};

    static const MelFilterbank& instance();
};

// |FFT|^2 of a Hann-windowed, mean-removed 256-sample window.
std::array<double, kSpectrumBins> windowed_power_spectrum(std::span<const double> window);

// Filter energies (before the log) of a window.
std::array<double, kNumFilters> filter_energies(std::span<const double> window);

// 20 cepstral coefficients: orthonormal DCT-II of ln(max(energy, 1e-10)).
FeatureVector mfcc(std::span<const double> window);

inline FeatureVector mfcc(const Window& window) { return mfcc(std::span<const double>(window.samples)); }

// 48 vectors per frame, axis-major then window index, each carrying the
// frame's label.
std::vector<FeatureVector> frame_features(const Frame& frame);

// Rank-based Gaussianisation into [-1, 1]: value -> probit(midrank CDF),
// clipped to +-3, divided by 3.
class GaussianNormalizer {
public:
    GaussianNormalizer() = default;

    static GaussianNormalizer fit(std::span<const FeatureVector> train);
    static GaussianNormalizer from_sorted(std::vector<std::vector<double>> sorted_per_coeff);

    double apply(std::size_t coeff, double value) const;
    FeatureVector apply(const FeatureVector& v) const;
    std::vector<FeatureVector> apply(std::span<const FeatureVector> vs) const;

    const std::vector<std::vector<double>>& sorted_reference() const noexcept { return sorted_; }
    bool fitted() const noexcept { return !sorted_.empty(); }

    bool operator==(const GaussianNormalizer&) const = default;

private:
    std::vector<std::vector<double>> sorted_;
};

// Oversamples every class up to the majority count. Output is the input in
// order followed by the synthetic vectors, grouped by class id.
std::vector<FeatureVector> smote(std::span<const FeatureVector> features, std::size_t k, std::uint64_t seed);

}  // namespace sentinel
