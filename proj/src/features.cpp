#include "sentinel/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <random>

#include "sentinel/error.hpp"
#include "sentinel/stats.hpp"

namespace sentinel {

std::vector<Window> sliding_windows(std::span<const double> axis_samples) {
    if (axis_samples.size() != kFrameLength) {
        throw Error("sliding_windows: expected 512 samples, got " + std::to_string(axis_samples.size()));
    }
    std::vector<Window> windows(kWindowsPerFrame);
    for (std::size_t k = 0; k < kWindowsPerFrame; ++k) {
        windows[k].index = k;
        std::copy_n(axis_samples.begin() + static_cast<std::ptrdiff_t>(k * kWindowStride), kWindowLength,
                    windows[k].samples.begin());
    }
    return windows;
}

namespace {

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(k));
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

const std::array<double, kWindowLength>& hann() {
    static const auto table = [] {
        std::array<double, kWindowLength> w{};
        for (std::size_t i = 0; i < kWindowLength; ++i) {
            w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(kWindowLength)));
        }
        return w;
    }();
    return table;
}

void check_window(std::span<const double> window) {
    if (window.size() != kWindowLength) {
        throw Error("window: expected 256 samples, got " + std::to_string(window.size()));
    }
    for (double v : window) {
        if (!std::isfinite(v)) throw Error("window contains non-finite samples");
    }
}

}  // namespace

const MelFilterbank& MelFilterbank::instance() {
    static const MelFilterbank bank = [] {
        MelFilterbank fb;
        constexpr std::size_t kLinearPoints = 13;  // edges[13] == 1 kHz
        const double nyquist = kSampleRateHz / 2.0;
        const std::size_t last = kNumFilters + 1;
        for (std::size_t k = 0; k <= kLinearPoints; ++k) {
            fb.edges_hz[k] = kMelBreakHz * static_cast<double>(k) / static_cast<double>(kLinearPoints);
        }
        const double log_span = std::log(nyquist / kMelBreakHz);
        for (std::size_t k = kLinearPoints + 1; k <= last; ++k) {
            const double t = static_cast<double>(k - kLinearPoints) / static_cast<double>(last - kLinearPoints);
            fb.edges_hz[k] = kMelBreakHz * std::exp(t * log_span);
        }
        fb.edges_hz[last] = nyquist;

        const double bin_hz = kSampleRateHz / static_cast<double>(kWindowLength);
        for (std::size_t m = 0; m < kNumFilters; ++m) {
            const double lo = fb.edges_hz[m];
            const double mid = fb.edges_hz[m + 1];
            const double hi = fb.edges_hz[m + 2];
            for (std::size_t b = 0; b < kSpectrumBins; ++b) {
                const double f = bin_hz * static_cast<double>(b);
                double w = 0.0;
                if (f > lo && f <= mid) {
                    w = (f - lo) / (mid - lo);
                } else if (f > mid && f < hi) {
                    w = (hi - f) / (hi - mid);
                }
                fb.weights[m][b] = w;
            }
        }
        return fb;
    }();
    return bank;
}

std::array<double, kSpectrumBins> windowed_power_spectrum(std::span<const double> window) {
    check_window(window);
    double m = 0.0;
    for (double v : window) m += v;
    m /= static_cast<double>(kWindowLength);

    const auto& w = hann();
    std::vector<std::complex<double>> buf(kWindowLength);
    for (std::size_t i = 0; i < kWindowLength; ++i) buf[i] = (window[i] - m) * w[i];
    fft_inplace(buf);

    std::array<double, kSpectrumBins> power{};
    for (std::size_t b = 0; b < kSpectrumBins; ++b) power[b] = std::norm(buf[b]);
    return power;
}

std::array<double, kNumFilters> filter_energies(std::span<const double> window) {
    const auto power = windowed_power_spectrum(window);
    const auto& fb = MelFilterbank::instance();
    std::array<double, kNumFilters> energies{};
    for (std::size_t m = 0; m < kNumFilters; ++m) {
        double e = 0.0;
        for (std::size_t b = 0; b < kSpectrumBins; ++b) e += fb.weights[m][b] * power[b];
        energies[m] = e;
    }
    return energies;
}

FeatureVector mfcc(std::span<const double> window) {
    const auto energies = filter_energies(window);
    std::array<double, kNumFilters> log_e{};
    for (std::size_t m = 0; m < kNumFilters; ++m) log_e[m] = std::log(std::max(energies[m], kLogEnergyFloor));

    static const auto basis = [] {
        std::array<std::array<double, kNumFilters>, kNumMfcc> t{};
        const double n = static_cast<double>(kNumFilters);
        for (std::size_t k = 0; k < kNumMfcc; ++k) {
            const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (std::size_t i = 0; i < kNumFilters; ++i) {
                t[k][i] = scale * std::cos(M_PI * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n));
            }
        }
        return t;
    }();

    FeatureVector out;
    for (std::size_t k = 0; k < kNumMfcc; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < kNumFilters; ++i) s += basis[k][i] * log_e[i];
        out.coeffs[k] = s;
    }
    return out;
}

std::vector<FeatureVector> frame_features(const Frame& frame) {
    std::vector<FeatureVector> out;
    out.reserve(3 * kWindowsPerFrame);
    for (std::size_t a = 0; a < 3; ++a) {
        for (const Window& w : sliding_windows(frame.axis(a))) {
            FeatureVector v = mfcc(w);
            v.label = frame.label;
            out.push_back(v);
        }
    }
    return out;
}

GaussianNormalizer GaussianNormalizer::fit(std::span<const FeatureVector> train) {
    if (train.size() < 2) throw Error("normalizer needs at least 2 training vectors");
    std::vector<std::vector<double>> sorted(kNumMfcc);
    for (std::size_t j = 0; j < kNumMfcc; ++j) {
        sorted[j].reserve(train.size());
        for (const FeatureVector& v : train) sorted[j].push_back(v.coeffs[j]);
        std::sort(sorted[j].begin(), sorted[j].end());
    }
    return from_sorted(std::move(sorted));
}

GaussianNormalizer GaussianNormalizer::from_sorted(std::vector<std::vector<double>> sorted_per_coeff) {
    if (sorted_per_coeff.size() != kNumMfcc) throw Error("normalizer needs 20 coefficient tables");
    for (const auto& col : sorted_per_coeff) {
        if (col.size() < 2) throw Error("normalizer table has fewer than 2 values");
        if (!std::is_sorted(col.begin(), col.end())) throw Error("normalizer table is not sorted");
    }
    GaussianNormalizer n;
    n.sorted_ = std::move(sorted_per_coeff);
    return n;
}

double GaussianNormalizer::apply(std::size_t coeff, double value) const {
    if (!fitted()) throw Error("normalizer is not fitted");
    const auto& col = sorted_.at(coeff);
    const auto below = std::lower_bound(col.begin(), col.end(), value) - col.begin();
    const auto upto = std::upper_bound(col.begin(), col.end(), value) - col.begin();
    const double cdf = (static_cast<double>(below) + 0.5 * static_cast<double>(upto - below)) /
                       static_cast<double>(col.size());
    const double z = std::clamp(stats::normal_quantile(cdf), -3.0, 3.0);
    return z / 3.0;
}

FeatureVector GaussianNormalizer::apply(const FeatureVector& v) const {
    FeatureVector out;
    out.label = v.label;
    for (std::size_t j = 0; j < kNumMfcc; ++j) out.coeffs[j] = apply(j, v.coeffs[j]);
    return out;
}

std::vector<FeatureVector> GaussianNormalizer::apply(std::span<const FeatureVector> vs) const {
    std::vector<FeatureVector> out;
    out.reserve(vs.size());
    for (const FeatureVector& v : vs) out.push_back(apply(v));
    return out;
}

namespace {

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < kNumMfcc; ++j) s += (a.coeffs[j] - b.coeffs[j]) * (a.coeffs[j] - b.coeffs[j]);
    return s;
}

}  // namespace

std::vector<FeatureVector> smote(std::span<const FeatureVector> features, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw Error("smote: k must be positive");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!features[i].label) throw Error("smote requires labeled feature vectors");
        by_class[features[i].label->id()].push_back(i);
    }

    std::size_t target = 0;
    for (const auto& [id, members] : by_class) {
        if (members.size() < 2) throw Error("smote: class " + std::to_string(id) + " has a single sample");
        target = std::max(target, members.size());
    }

    std::vector<FeatureVector> out(features.begin(), features.end());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (const auto& [id, members] : by_class) {
        if (members.size() == target) continue;
        const std::size_t k_eff = std::min(k, members.size() - 1);
        std::map<std::size_t, std::vector<std::size_t>> neighbours;
        std::uniform_int_distribution<std::size_t> pick_base(0, members.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_nn(0, k_eff - 1);

        for (std::size_t s = members.size(); s < target; ++s) {
            const std::size_t base = members[pick_base(rng)];
            auto it = neighbours.find(base);
            if (it == neighbours.end()) {
                std::vector<std::pair<double, std::size_t>> dist;
                dist.reserve(members.size() - 1);
                for (std::size_t other : members) {
                    if (other != base) dist.emplace_back(squared_distance(features[base], features[other]), other);
                }
                std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_eff), dist.end());
                std::vector<std::size_t> nn(k_eff);
                for (std::size_t q = 0; q < k_eff; ++q) nn[q] = dist[q].second;
                it = neighbours.emplace(base, std::move(nn)).first;
            }
            const FeatureVector& x = features[base];
            const FeatureVector& n = features[it->second[pick_nn(rng)]];
            const double u = unit(rng);
            FeatureVector synth;
            synth.label = x.label;
            for (std::size_t j = 0; j < kNumMfcc; ++j) synth.coeffs[j] = x.coeffs[j] + u * (n.coeffs[j] - x.coeffs[j]);
            out.push_back(synth);
        }
    }
    return out;
}

}  // namespace sentinel
