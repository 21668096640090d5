#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace medoe {

// Sentinel label excluded from all losses and metrics.
constexpr std::uint8_t kIgnore = 255;

// One synthetic scene: per-pixel feature vectors plus a ground-truth label
// grid. Features are stored as f32 to match the on-disk format; all model
// arithmetic promotes to double.
struct SceneSample {
    int H = 0;
    int W = 0;
    int D = 0;
    std::vector<float> features;      // H*W*D, row-major, pixel-major
    std::vector<std::uint8_t> labels; // H*W, row-major

    int pixels() const { return H * W; }

    const float* feature_at(int p) const { return features.data() + static_cast<std::size_t>(p) * D; }
    float* feature_at(int p) { return features.data() + static_cast<std::size_t>(p) * D; }

    void validate(int num_categories) const {
        if (static_cast<std::size_t>(H) * W * D != features.size())
            throw std::invalid_argument("SceneSample: feature size mismatch");
        if (static_cast<std::size_t>(H) * W != labels.size())
            throw std::invalid_argument("SceneSample: label size mismatch");
        for (std::uint8_t l : labels)
            if (l != kIgnore && l >= num_categories)
                throw std::invalid_argument("SceneSample: label " + std::to_string(l) +
                                            " out of range");
    }
};

// Dense N x C matrix of doubles, one row per pixel. Used for logits,
// probabilities and gradients alike.
struct PixelMatrix {
    int n = 0; // pixels
    int c = 0; // channels
    std::vector<double> data; // n*c row-major

    PixelMatrix() = default;
    PixelMatrix(int n_, int c_) : n(n_), c(c_), data(static_cast<std::size_t>(n_) * c_, 0.0) {}

    double* row(int p) { return data.data() + static_cast<std::size_t>(p) * c; }
    const double* row(int p) const { return data.data() + static_cast<std::size_t>(p) * c; }

    double& at(int p, int j) { return data[static_cast<std::size_t>(p) * c + j]; }
    double at(int p, int j) const { return data[static_cast<std::size_t>(p) * c + j]; }
};

using LogitGrid = PixelMatrix;
using ProbabilityGrid = PixelMatrix;

} // namespace medoe
