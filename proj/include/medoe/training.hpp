#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "medoe/ensemble.hpp"
#include "medoe/grid.hpp"
#include "medoe/model.hpp"
#include "medoe/synthgen.hpp"

namespace medoe {

enum class TrainMode { Medoe, Baseline, Mcn, Focal, UnderSample };

struct TrainConfig {
    int iters = 300;
    double lr = 0.1;
    int batch = 4;
    double alpha = 0.2; // aux loss weight
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::Medoe;
    double focal_gamma = 2.0;
    // Fraction of head-category pixels that survive each epoch in
    // UnderSample mode; sampled-away pixels lose both label and features.
    // 1 keeps everything (identical to Baseline).
    double undersample_ratio = 1.0;
    bool poly_schedule = false;
    double poly_power = 0.9;
    // Multiplier on the head expert's loss; zeroing it freezes the backbone.
    double head_loss_weight = 1.0;
    int stage2_iters = 1000;
    double stage2_lr = 0.05;
    // Train the decision-maker on a uniform-resampled view of the dataset.
    // Under the natural pixel distribution the ensemble CE optimum is the
    // head-only collapse, so the calibration is learned in the uniform
    // setting by default.
    bool stage2_balanced = true;
    ModelDims dims;

    void validate() const {
        if (iters <= 0 || lr <= 0 || batch <= 0) throw std::invalid_argument("TrainConfig: iters, lr, batch must be positive");
        if (alpha < 0) throw std::invalid_argument("TrainConfig: alpha must be >= 0");
        if (undersample_ratio <= 0 || undersample_ratio > 1)
            throw std::invalid_argument("TrainConfig: undersample_ratio must be in (0,1]");
    }
};

struct TraceRow {
    int step = 0;
    int expert = 0; // -1 for stage-2 rows
    double l_ce = 0, l_aux = 0, total = 0;
};

struct DivergenceError : std::runtime_error {
    int step;
    explicit DivergenceError(int s)
        : std::runtime_error("training diverged at step " + std::to_string(s)), step(s) {}
};

struct TrainedModel {
    BackboneParams backbone;
    std::vector<ExpertParams> experts;
    CategoryGrouping grouping;
    std::optional<CalibrationParams> calibration;
    TrainConfig config;
    std::vector<TraceRow> trace;        // stage 1
    std::vector<TraceRow> stage2_trace; // stage 2

    int num_experts() const { return static_cast<int>(experts.size()); }
};

// Stage 1: joint per-batch SGD over all experts on their masked views. Only
// the head expert's gradients touch the backbone.
TrainedModel train_stage1(const std::vector<SceneSample>& dataset,
                          const CategoryGrouping& grouping, const TrainConfig& cfg);

// Stage 2: learns the MOE calibration by SGD on the ensemble CE; stage-1
// parameters are frozen. With stage2_balanced the dataset labels are first
// uniform-resampled so every category contributes equally. Stores the result
// on the model and returns it.
CalibrationParams train_stage2_moe(TrainedModel& model, const std::vector<SceneSample>& dataset,
                                   const TrainConfig& cfg);

TrainedModel train_undersample_baseline(const std::vector<SceneSample>& dataset,
                                        const CategoryGrouping& grouping, const TrainConfig& cfg);

// R runs differing only by seed (seed, seed+1, ...).
std::vector<TrainedModel> train_replicas(const std::vector<SceneSample>& dataset,
                                         const CategoryGrouping& grouping, const TrainConfig& cfg,
                                         int R);

// Expert label sets actually trained in a mode: the grouping's nested sets
// for Medoe/Mcn, the full set for the single-expert modes.
std::vector<std::vector<std::uint8_t>> expert_label_sets(const CategoryGrouping& grouping,
                                                         TrainMode mode);

} // namespace medoe
