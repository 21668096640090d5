#pragma once

#include <string>
#include <vector>

#include "medoe/ensemble.hpp"
#include "medoe/metrics.hpp"
#include "medoe/training.hpp"

namespace medoe {

enum class Combiner { Moe, Oracle, SoftmaxThreshold, Argmax, GroupAverage, Single };

struct CombinerChoice {
    Combiner kind = Combiner::Moe;
    int single_expert = 0; // for Combiner::Single, 0-based

    static CombinerChoice parse(const std::string& text); // "moe", "oracle", ..., "single:1"
    std::string name() const;
};

// All experts' per-pixel probability grids for one scene.
std::vector<ProbabilityGrid> expert_probabilities(const TrainedModel& model,
                                                  const SceneSample& scene);

// Predicted labels for one scene under a combiner. Oracle needs ground
// truth; Moe needs trained calibration (throws otherwise).
std::vector<std::uint8_t> predict(const TrainedModel& model, const SceneSample& scene,
                                  const CombinerChoice& combiner);

struct EvalResult {
    ConfusionMatrix cm;
    MetricsReport metrics;
    FrequencyProfile eval_profile; // frequency over the evaluated scenes
};

// Scores a model over a test set. Scenes evaluate independently and merge in
// index order, so results are deterministic under parallel evaluation.
EvalResult evaluate(const TrainedModel& model, const std::vector<SceneSample>& test,
                    const CombinerChoice& combiner);

// Replica-mean prediction bias against the one-hot labels (squared distance),
// per category and group.
BiasEstimate bias_estimate(const std::vector<TrainedModel>& replicas,
                           const std::vector<SceneSample>& test, const CombinerChoice& combiner);

} // namespace medoe
