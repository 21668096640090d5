#pragma once

#include <cstdint>
#include <vector>

#include "medoe/grid.hpp"
#include "medoe/synthgen.hpp"

namespace medoe {

// Per-expert, per-category calibration of the MOE decision-maker:
// p_hat_i = softmax(w_i * p_i + beta_i).
struct CalibrationParams {
    int K = 0, c = 0;
    std::vector<double> w;    // K x c
    std::vector<double> beta; // K x c

    static CalibrationParams identity(int K, int c);

    double* w_row(int i) { return w.data() + static_cast<std::size_t>(i) * c; }
    const double* w_row(int i) const { return w.data() + static_cast<std::size_t>(i) * c; }
    double* beta_row(int i) { return beta.data() + static_cast<std::size_t>(i) * c; }
    const double* beta_row(int i) const { return beta.data() + static_cast<std::size_t>(i) * c; }
};

ProbabilityGrid calibrate(const ProbabilityGrid& probs, const CalibrationParams& calib,
                          int expert);

// p_final = (1/K) * sum_i calibrate(p_i).
ProbabilityGrid moe_combine(const std::vector<ProbabilityGrid>& expert_probs,
                            const CalibrationParams& calib);

// Evaluation-only upper bound: each pixel scored by the expert dominating
// its ground-truth category. IGNORE pixels fall back to expert 0.
ProbabilityGrid oracle_combine(const std::vector<ProbabilityGrid>& expert_probs,
                               const std::vector<std::uint8_t>& labels,
                               const CategoryGrouping& grouping);

enum class AggregateMethod { SoftmaxThreshold, Argmax, GroupAverage };

// Table-style user-specified combiners. SoftmaxThreshold scans experts most
// specialized first and emits the first category above 0.3, falling back to
// expert 1's argmax; Argmax takes the best max-confidence expert;
// GroupAverage averages each category over the experts whose set contains it.
std::vector<std::uint8_t> aggregate_baseline(const std::vector<ProbabilityGrid>& expert_probs,
                                             const CategoryGrouping& grouping,
                                             AggregateMethod method,
                                             double threshold = 0.3);

std::vector<std::uint8_t> argmax_labels(const ProbabilityGrid& probs);

// GroupAverage as a full distribution (category-restricted mean over the
// experts exposing each category, renormalized).
ProbabilityGrid group_average_probs(const std::vector<ProbabilityGrid>& expert_probs,
                                    const CategoryGrouping& grouping);

} // namespace medoe
