#include <doctest.h>

#include <complex>

#include <boost/math/distributions/normal.hpp>

#include "sentinel/error.hpp"
#include "sentinel/features.hpp"
#include "support.hpp"

using namespace sentinel;

namespace {

// O(n^2) DFT power of the Hann-windowed, mean-removed window.
std::vector<double> naive_power(const std::vector<double>& w) {
    const std::size_t n = w.size();
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double hann = 0.5 - 0.5 * std::cos(2 * M_PI * static_cast<double>(i) / static_cast<double>(n));
            s += (w[i] - mean) * hann * std::polar(1.0, -2 * M_PI * static_cast<double>(k * i) / static_cast<double>(n));
        }
        out[k] = std::norm(s);
    }
    return out;
}

std::vector<double> sine(double hz, double amp, double phase = 0.0) {
    std::vector<double> w(kWindowLength);
    for (std::size_t i = 0; i < kWindowLength; ++i) w[i] = amp * std::sin(2 * M_PI * hz * static_cast<double>(i) / kSampleRateHz + phase);
    return w;
}

FeatureVector labeled(std::array<double, kNumMfcc> c, int label) {
    FeatureVector v;
    v.coeffs = c;
    v.label = ClassLabel(label);
    return v;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("sliding windows on a ramp") {
    std::vector<double> ramp(kFrameLength);
    for (std::size_t i = 0; i < kFrameLength; ++i) ramp[i] = static_cast<double>(i);
    const auto w = sliding_windows(ramp);
    REQUIRE(w.size() == 16);
    CHECK(w[0].samples.front() == 0.0);
    CHECK(w[0].samples.back() == 255.0);
    CHECK(w[15].samples.front() == 240.0);
    CHECK(w[15].samples.back() == 495.0);
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
        // windows k and k+1 overlap in exactly 240 samples
        std::size_t shared = 0;
        for (double a : w[k].samples)
            for (double b : w[k + 1].samples) shared += a == b;
        CHECK(shared == 240);
        CHECK(w[k].index == k);
    }
    CHECK_THROWS_AS(sliding_windows(std::vector<double>(511)), Error);
}

TEST_CASE("constant input gives identical windows") {
    const auto w = sliding_windows(std::vector<double>(kFrameLength, 3.25));
    for (const auto& win : w) CHECK(win.samples == w[0].samples);
}

TEST_CASE("fft power matches a naive DFT") {
    auto g = testutil::rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> w(kWindowLength);
        for (double& v : w) v = testutil::uniform(g, -2.0, 2.0);
        const auto fast = windowed_power_spectrum(w);
        const auto slow = naive_power(w);
        for (std::size_t k = 0; k < kSpectrumBins; ++k) CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("filterbank layout") {
    const auto& fb = MelFilterbank::instance();
    CHECK(fb.edges_hz[0] == 0.0);
    CHECK(fb.edges_hz[13] == doctest::Approx(1000.0));
    CHECK(fb.edges_hz[27] == doctest::Approx(kSampleRateHz / 2));
    for (std::size_t k = 0; k + 1 < fb.edges_hz.size(); ++k) CHECK(fb.edges_hz[k] < fb.edges_hz[k + 1]);
    // linear centres are evenly spaced, log centres geometrically
    CHECK(fb.edges_hz[2] - fb.edges_hz[1] == doctest::Approx(fb.edges_hz[12] - fb.edges_hz[11]));
    CHECK(fb.edges_hz[15] / fb.edges_hz[14] == doctest::Approx(fb.edges_hz[25] / fb.edges_hz[24]));
    for (const auto& row : fb.weights)
        for (double w : row) CHECK((w >= 0.0 && w <= 1.0));
}

TEST_CASE("zero window: constant log-energy vector through the DCT") {
    const FeatureVector v = mfcc(std::vector<double>(kWindowLength, 0.0));
    CHECK(v.coeffs[0] == doctest::Approx(std::log(1e-10) * std::sqrt(26.0)).epsilon(1e-12));
    CHECK(v.coeffs[0] == doctest::Approx(-117.4093).epsilon(1e-6));
    for (std::size_t k = 1; k < kNumMfcc; ++k) CHECK(std::abs(v.coeffs[k]) < 1e-9);
}

TEST_CASE("500 Hz sine peaks in the linear-region filter that covers 500 Hz") {
    // Oracle: naive DFT power spectrum through independently rebuilt
    // triangular filters.
    const auto w = sine(500.0, 1.0);
    const auto power = naive_power(w);
    const double bin_hz = kSampleRateHz / kWindowLength;
    std::vector<double> centre(28);
    for (std::size_t k = 0; k <= 13; ++k) centre[k] = 1000.0 * static_cast<double>(k) / 13.0;
    for (std::size_t k = 14; k <= 27; ++k)
        centre[k] = 1000.0 * std::pow(kSampleRateHz / 2 / 1000.0, static_cast<double>(k - 13) / 14.0);
    std::size_t best = 0;
    double best_e = -1.0;
    for (std::size_t m = 0; m < kNumFilters; ++m) {
        double e = 0.0;
        for (std::size_t b = 0; b < power.size(); ++b) {
            const double f = bin_hz * static_cast<double>(b);
            if (f > centre[m] && f <= centre[m + 1]) e += power[b] * (f - centre[m]) / (centre[m + 1] - centre[m]);
            if (f > centre[m + 1] && f < centre[m + 2]) e += power[b] * (centre[m + 2] - f) / (centre[m + 2] - centre[m + 1]);
        }
        if (e > best_e) best_e = e, best = m;
    }
    const auto energies = filter_energies(w);
    const auto argmax = static_cast<std::size_t>(std::max_element(energies.begin(), energies.end()) - energies.begin());
    CHECK(argmax == best);
    CHECK(argmax < 13);
    const auto& fb = MelFilterbank::instance();
    CHECK(fb.edges_hz[argmax] < 500.0);
    CHECK(fb.edges_hz[argmax + 2] > 500.0);
}

TEST_CASE("property: mfcc ignores a DC offset") {
    auto g = testutil::rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> w(kWindowLength);
        for (double& v : w) v = testutil::uniform(g, -1.0, 1.0);
        std::vector<double> shifted = w;
        const double dc = testutil::uniform(g, -50.0, 50.0);
        for (double& v : shifted) v += dc;
        const auto a = mfcc(w), b = mfcc(shifted);
        for (std::size_t k = 0; k < kNumMfcc; ++k) CHECK(a.coeffs[k] == doctest::Approx(b.coeffs[k]).epsilon(1e-7).scale(1.0));
    }
}

TEST_CASE("non-finite windows are rejected") {
    auto w = sine(100.0, 1.0);
    w[7] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(mfcc(w), Error);
}

TEST_CASE("frame features: 48 vectors carrying the label") {
    auto g = testutil::rng(3);
    const Frame f = testutil::random_frame(g, 4);
    const auto v = frame_features(f);
    REQUIRE(v.size() == 48);
    for (const auto& x : v) CHECK(x.label == ClassLabel(4));
    // axis-major: vector 16 is the first window of y
    CHECK(v[16] == [&] {
        FeatureVector e = mfcc(sliding_windows(f.y)[0]);
        e.label = ClassLabel(4);
        return e;
    }());
}

TEST_CASE("normalizer: median maps to 0, below the minimum to -1") {
    std::vector<FeatureVector> train;
    for (double v : {1.0, 2.0, 3.0}) {
        FeatureVector f;
        f.coeffs.fill(v);
        train.push_back(f);
    }
    const auto n = GaussianNormalizer::fit(train);
    CHECK(n.apply(0, 2.0) == doctest::Approx(0.0));
    CHECK(n.apply(5, -10.0) == -1.0);
    CHECK(n.apply(5, 10.0) == 1.0);
    CHECK_THROWS_AS(GaussianNormalizer::fit(std::vector<FeatureVector>(1)), Error);
    CHECK_THROWS_AS(GaussianNormalizer().apply(0, 1.0), Error);
}

TEST_CASE("normalizer matches a midrank + probit oracle") {
    auto g = testutil::rng(4);
    std::vector<FeatureVector> train(57);
    for (auto& f : train)
        for (double& c : f.coeffs) c = std::round(testutil::uniform(g, -5.0, 5.0) * 4) / 4;  // ties on purpose
    const auto n = GaussianNormalizer::fit(train);
    const boost::math::normal_distribution<double> unit;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t j = static_cast<std::size_t>(trial) % kNumMfcc;
        const double v = std::round(testutil::uniform(g, -6.0, 6.0) * 8) / 8;
        double below = 0, equal = 0;
        for (const auto& f : train) below += f.coeffs[j] < v, equal += f.coeffs[j] == v;
        const double cdf = (below + 0.5 * equal) / static_cast<double>(train.size());
        double z = cdf <= 0.0 ? -3.0 : cdf >= 1.0 ? 3.0 : boost::math::quantile(unit, cdf);
        z = std::clamp(z, -3.0, 3.0) / 3.0;
        CHECK(n.apply(j, v) == doctest::Approx(z).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("property: normalizer is monotone") {
    auto g = testutil::rng(5);
    std::vector<FeatureVector> train(40);
    for (auto& f : train)
        for (double& c : f.coeffs) c = testutil::uniform(g, -3.0, 3.0);
    const auto n = GaussianNormalizer::fit(train);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t j = static_cast<std::size_t>(trial) % kNumMfcc;
        double a = testutil::uniform(g, -4.0, 4.0), b = testutil::uniform(g, -4.0, 4.0);
        if (a > b) std::swap(a, b);
        const double za = n.apply(j, a), zb = n.apply(j, b);
        CHECK(za <= zb);
        CHECK((za >= -1.0 && zb <= 1.0));
    }
}

TEST_CASE("normalizer rebuilt from its sorted tables is identical") {
    auto g = testutil::rng(6);
    std::vector<FeatureVector> train(10);
    for (auto& f : train)
        for (double& c : f.coeffs) c = testutil::uniform(g, 0.0, 1.0);
    const auto n = GaussianNormalizer::fit(train);
    CHECK(GaussianNormalizer::from_sorted(n.sorted_reference()) == n);
    auto bad = n.sorted_reference();
    std::swap(bad[0][0], bad[0][1]);
    CHECK_THROWS_AS(GaussianNormalizer::from_sorted(bad), Error);
}

TEST_CASE("smote: two points and one synthetic lie on their segment") {
    std::array<double, kNumMfcc> a{}, b{};
    a.fill(0.0);
    b.fill(1.0);
    b[3] = 5.0;
    std::vector<FeatureVector> data{labeled(a, 1), labeled(b, 1)};
    std::array<double, kNumMfcc> c{};
    for (int i = 0; i < 3; ++i) data.push_back(labeled(c, 2));
    const auto out = smote(data, 5, 9);
    REQUIRE(out.size() == 6);
    const auto& s = out.back();
    CHECK(s.label == ClassLabel(1));
    const double u = s.coeffs[0];
    CHECK((u >= 0.0 && u <= 1.0));
    for (std::size_t j = 0; j < kNumMfcc; ++j) CHECK(s.coeffs[j] == doctest::Approx(a[j] + u * (b[j] - a[j])));
}

TEST_CASE("smote: balanced input is returned unchanged") {
    auto g = testutil::rng(7);
    std::vector<FeatureVector> data;
    for (int c = 1; c <= 3; ++c)
        for (int i = 0; i < 4; ++i) {
            std::array<double, kNumMfcc> v{};
            for (double& x : v) x = testutil::uniform(g, -1, 1);
            data.push_back(labeled(v, c));
        }
    CHECK(smote(data, 5, 1) == data);
    CHECK_THROWS_AS(smote(data, 0, 1), Error);
}

TEST_CASE("property: smote balances classes and stays inside each class hull") {
    for (std::uint64_t trial = 0; trial < 15; ++trial) {
        auto g = testutil::rng(100 + trial);
        std::vector<FeatureVector> data;
        std::map<int, std::size_t> counts;
        for (int c = 1; c <= 6; ++c) {
            const auto n = std::uniform_int_distribution<std::size_t>(2, 25)(g);
            counts[c] = n;
            for (std::size_t i = 0; i < n; ++i) {
                std::array<double, kNumMfcc> v{};
                for (double& x : v) x = testutil::uniform(g, -1, 1) + c;
                data.push_back(labeled(v, c));
            }
        }
        const auto out = smote(data, 5, trial);
        std::size_t target = 0;
        for (auto& [c, n] : counts) target = std::max(target, n);
        std::map<int, std::size_t> after;
        for (const auto& f : out) ++after[f.label->id()];
        for (auto& [c, n] : after) CHECK(n == target);
        CHECK(std::equal(data.begin(), data.end(), out.begin()));
        // every synthetic vector lies on a segment between two same-class originals
        for (std::size_t s = data.size(); s < out.size(); ++s) {
            const auto& v = out[s];
            bool found = false;
            for (std::size_t i = 0; i < data.size() && !found; ++i) {
                if (data[i].label != v.label) continue;
                for (std::size_t k = 0; k < data.size() && !found; ++k) {
                    if (k == i || data[k].label != v.label) continue;
                    const double d0 = data[k].coeffs[0] - data[i].coeffs[0];
                    const double u = (v.coeffs[0] - data[i].coeffs[0]) / d0;
                    if (!(u >= -1e-12 && u <= 1 + 1e-12)) continue;
                    bool on = true;
                    for (std::size_t j = 0; j < kNumMfcc && on; ++j)
                        on = std::abs(data[i].coeffs[j] + u * (data[k].coeffs[j] - data[i].coeffs[j]) - v.coeffs[j]) < 1e-9;
                    found = on;
                }
            }
            CHECK(found);
        }
    }
}

TEST_CASE("smote rejects singleton classes and unlabeled vectors") {
    std::vector<FeatureVector> data{labeled({}, 1), labeled({}, 1), labeled({}, 2)};
    CHECK_THROWS_AS(smote(data, 5, 1), Error);
    data.back().label.reset();
    CHECK_THROWS_AS(smote(data, 5, 1), Error);
}

}  // TEST_SUITE
