#include "sentinel/postprocess.hpp"

#include <cmath>
#include <string>

#include "sentinel/error.hpp"

namespace sentinel {

ClassProbabilities::ClassProbabilities() { p_.fill(1.0 / static_cast<double>(kNumClasses)); }

ClassProbabilities ClassProbabilities::from_values(const std::array<double, kNumClasses>& values) {
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) throw Error("probabilities must be finite and non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("probabilities sum to " + std::to_string(sum) + ", expected 1");
    ClassProbabilities out;
    out.p_ = values;
    return out;
}

ClassProbabilities ClassProbabilities::normalized(const std::array<double, kNumClasses>& values) {
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) throw Error("probabilities must be finite and non-negative");
        sum += v;
    }
    if (!(sum > 0.0)) throw Error("cannot normalise a zero vector");
    ClassProbabilities out;
    for (std::size_t i = 0; i < kNumClasses; ++i) out.p_[i] = values[i] / sum;
    return out;
}

ClassProbabilities ClassProbabilities::softmax(std::span<const double> logits) {
    if (logits.size() != kNumClasses) {
        throw Error("softmax: expected 6 values, got " + std::to_string(logits.size()));
    }
    double hi = logits[0];
    for (double v : logits) {
        if (!std::isfinite(v)) throw Error("softmax: non-finite input");
        hi = std::max(hi, v);
    }
    std::array<double, kNumClasses> e{};
    for (std::size_t i = 0; i < kNumClasses; ++i) e[i] = std::exp(logits[i] - hi);
    return normalized(e);
}

ClassProbabilities ClassProbabilities::one_hot(ClassLabel label) {
    ClassProbabilities out;
    out.p_.fill(0.0);
    out.p_[label.index()] = 1.0;
    return out;
}

ClassLabel ClassProbabilities::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < kNumClasses; ++i)
        if (p_[i] > p_[best]) best = i;
    return ClassLabel::from_index(best);
}

std::pair<SmootherState, ClassProbabilities> smooth_step(SmootherState state, const ClassProbabilities& p) {
    state.buffer.push_back(p);
    while (state.buffer.size() > kSmoothingWindow) state.buffer.pop_front();
    std::array<double, kNumClasses> sum{};
    for (const auto& q : state.buffer)
        for (std::size_t i = 0; i < kNumClasses; ++i) sum[i] += q[i];
    for (double& s : sum) s /= static_cast<double>(state.buffer.size());
    return {std::move(state), ClassProbabilities::normalized(sum)};
}

std::pair<SmootherState, ClassProbabilities> smooth_step(SmootherState state, const ClassProbabilities& p,
                                                         std::int64_t timestamp_ms) {
    if (state.last_timestamp_ms) {
        const std::int64_t gap = timestamp_ms - *state.last_timestamp_ms;
        if (gap > kSmoothingResetGapMs || gap < 0) state.buffer.clear();
    }
    state.last_timestamp_ms = timestamp_ms;
    return smooth_step(std::move(state), p);
}

std::vector<ClassProbabilities> smooth_series(std::span<const ClassProbabilities> probs,
                                              std::span<const std::int64_t> timestamps_ms) {
    if (probs.size() != timestamps_ms.size()) throw Error("smooth_series: length mismatch");
    std::vector<ClassProbabilities> out;
    out.reserve(probs.size());
    SmootherState state;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        auto [next, smoothed] = smooth_step(std::move(state), probs[i], timestamps_ms[i]);
        state = std::move(next);
        out.push_back(smoothed);
    }
    return out;
}

ClassLabel argmax_within(const ClassProbabilities& p, std::span<const int> ids) {
    if (ids.empty()) throw Error("argmax over an empty class set");
    int best = ids[0];
    for (int id : ids) {
        const ClassLabel c(id);
        const ClassLabel b(best);
        if (p.of(c) > p.of(b) || (p.of(c) == p.of(b) && id < best)) best = id;
    }
    return ClassLabel(best);
}

ClassLabel vote(const ClassProbabilities& p_smoothed, AeFlag ae_flag) {
    const ClassLabel c = p_smoothed.argmax();
    if (ae_flag == AeFlag::anomaly && c.healthy()) return argmax_within(p_smoothed, kAnomalyIds);
    if (ae_flag == AeFlag::healthy && c.anomaly()) return argmax_within(p_smoothed, kHealthyIds);
    return c;
}

}  // namespace sentinel
