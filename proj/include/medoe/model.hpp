#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "medoe/grid.hpp"

namespace medoe {

struct ModelDims {
    int D = 8;   // input feature dimension
    int F1 = 16; // backbone width
    int F2 = 16; // context width
    int c = 12;  // categories
    int r = 2;   // context window radius
    int K = 3;   // experts
};

// Shared per-pixel backbone: one linear+ReLU layer.
struct BackboneParams {
    int D = 0, F1 = 0;
    std::vector<double> W1; // F1 x D
    std::vector<double> b1; // F1
};

// One expert: window-mean context module (linear+ReLU on [feat; window mean])
// followed by a linear head over all c categories.
struct ExpertParams {
    int F1 = 0, F2 = 0, c = 0, r = 1;
    std::vector<double> Wc; // F2 x 2*F1
    std::vector<double> bc; // F2
    std::vector<double> Wh; // c x F2
    std::vector<double> bh; // c
};

struct BackboneActivations {
    std::vector<double> pre;  // H*W*F1, pre-ReLU
    std::vector<double> post; // H*W*F1
};

struct ExpertActivations {
    std::vector<double> window;   // H*W*F1
    std::vector<double> concat;   // H*W*2F1, [post; window]
    std::vector<double> pre_ctx;  // H*W*F2, pre-ReLU
    std::vector<double> ctx;      // H*W*F2
    LogitGrid logits;             // H*W x c
};

struct BackboneGrads {
    std::vector<double> W1, b1;
};

struct ExpertGrads {
    std::vector<double> Wc, bc, Wh, bh;
};

// Xavier-uniform weights, zero biases; expert i draws from its own substream
// of `seed`.
std::pair<BackboneParams, std::vector<ExpertParams>> init_params(std::uint64_t seed,
                                                                 const ModelDims& dims);

BackboneGrads zero_grads(const BackboneParams& p);
ExpertGrads zero_grads(const ExpertParams& p);

BackboneActivations backbone_forward(const BackboneParams& params, const SceneSample& sample);
ExpertActivations context_head_forward(const ExpertParams& params,
                                       const BackboneActivations& backbone, int H, int W);

// Full Eq.-style composition: backbone -> context module -> head.
LogitGrid expert_forward(const BackboneParams& backbone, const ExpertParams& expert,
                         const SceneSample& sample);

// Backprop from d(total loss)/d(logits). Expert grads always accumulate;
// backbone grads only when `bgrads` is non-null (the head-expert update rule).
void expert_backward(const BackboneParams& bp, const ExpertParams& ep, const SceneSample& sample,
                     const BackboneActivations& bact, const ExpertActivations& eact,
                     const PixelMatrix& dlogits, ExpertGrads& egrads, BackboneGrads* bgrads);

} // namespace medoe
