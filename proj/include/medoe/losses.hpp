#pragma once

#include <cstdint>
#include <vector>

#include "medoe/grid.hpp"

namespace medoe {

struct LossBreakdown {
    double l_ce = 0.0;
    double l_aux_l2 = 0.0;
    double l_aux_kl = 0.0;
    double total = 0.0;
    PixelMatrix grad; // d(total)/d(logits)
};

// Dataset-level label marginal restricted to `allowed`, epsilon-floored at
// 1e-8 and renormalized. This is the q the KL term pulls predictions toward.
std::vector<double> marginal_targets(const std::vector<SceneSample>& dataset,
                                     const std::vector<std::uint8_t>& allowed, int num_categories);

// Mean -log softmax(z)[label] over pixels whose label is in `allowed`;
// softmax runs over all c channels. IGNORE and out-of-set pixels contribute
// nothing, in value or gradient.
LossBreakdown ce_loss(const LogitGrid& logits, const std::vector<std::uint8_t>& labels,
                      const std::vector<std::uint8_t>& allowed);

// L2 suppression of interfering-category logits (mean of squares over all
// pixels) plus KL(batch-mean predicted marginal within allowed || q).
LossBreakdown aux_loss(const LogitGrid& logits, const std::vector<std::uint8_t>& labels,
                       const std::vector<std::uint8_t>& allowed, const std::vector<double>& q);

// total = L_ce + alpha * (L2 + KL).
LossBreakdown combined_loss(const LogitGrid& logits, const std::vector<std::uint8_t>& labels,
                            const std::vector<std::uint8_t>& allowed, const std::vector<double>& q,
                            double alpha);

// Mean -(1-p_t)^gamma log p_t over labeled pixels; gamma = 0 reduces to
// plain cross-entropy.
LossBreakdown focal_loss(const LogitGrid& logits, const std::vector<std::uint8_t>& labels,
                         double gamma);

// softmax per pixel row.
ProbabilityGrid softmax_grid(const LogitGrid& logits);
void softmax_row(const double* z, int c, double* p);

} // namespace medoe
