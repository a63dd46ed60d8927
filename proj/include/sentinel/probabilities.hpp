#pragma once

#include <array>
#include <span>

#include "sentinel/dataset.hpp"

namespace sentinel {

// Non-negative 6-vector summing to 1 (within 1e-9), indexed by class id - 1.
class ClassProbabilities {
public:
    ClassProbabilities();  // uniform

    // Validates non-negativity and unit sum.
    static ClassProbabilities from_values(const std::array<double, kNumClasses>& values);
    // Rescales a non-negative vector with positive sum to unit sum.
    static ClassProbabilities normalized(const std::array<double, kNumClasses>& values);
    static ClassProbabilities softmax(std::span<const double> logits);
    static ClassProbabilities one_hot(ClassLabel label);

    double operator[](std::size_t index) const { return p_[index]; }
    double of(ClassLabel label) const { return p_[label.index()]; }
    const std::array<double, kNumClasses>& values() const noexcept { return p_; }

    // Highest probability; ties resolve to the smallest class id.
    ClassLabel argmax() const;

    bool operator==(const ClassProbabilities&) const = default;

private:
    std::array<double, kNumClasses> p_;
};

}  // namespace sentinel
