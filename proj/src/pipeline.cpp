#include "medoe/pipeline.hpp"

#include <stdexcept>

#include "medoe/losses.hpp"

namespace medoe {

CombinerChoice CombinerChoice::parse(const std::string& text) {
    CombinerChoice c;
    if (text == "moe")
        c.kind = Combiner::Moe;
    else if (text == "oracle")
        c.kind = Combiner::Oracle;
    else if (text == "softmax")
        c.kind = Combiner::SoftmaxThreshold;
    else if (text == "argmax")
        c.kind = Combiner::Argmax;
    else if (text == "group-avg")
        c.kind = Combiner::GroupAverage;
    else if (text.rfind("single:", 0) == 0) {
        c.kind = Combiner::Single;
        c.single_expert = std::stoi(text.substr(7)) - 1; // user-facing experts are 1-based
        if (c.single_expert < 0) throw std::invalid_argument("combiner: expert index must be >= 1");
    } else
        throw std::invalid_argument("unknown combiner '" + text + "'");
    return c;
}

std::string CombinerChoice::name() const {
    switch (kind) {
    case Combiner::Moe: return "moe";
    case Combiner::Oracle: return "oracle";
    case Combiner::SoftmaxThreshold: return "softmax";
    case Combiner::Argmax: return "argmax";
    case Combiner::GroupAverage: return "group-avg";
    case Combiner::Single: return "single:" + std::to_string(single_expert + 1);
    }
    return "?";
}

std::vector<ProbabilityGrid> expert_probabilities(const TrainedModel& model,
                                                  const SceneSample& scene) {
    const auto bact = backbone_forward(model.backbone, scene);
    std::vector<ProbabilityGrid> probs;
    probs.reserve(model.num_experts());
    for (const auto& expert : model.experts) {
        auto eact = context_head_forward(expert, bact, scene.H, scene.W);
        probs.push_back(softmax_grid(eact.logits));
    }
    return probs;
}

std::vector<std::uint8_t> predict(const TrainedModel& model, const SceneSample& scene,
                                  const CombinerChoice& combiner) {
    const auto probs = expert_probabilities(model, scene);
    switch (combiner.kind) {
    case Combiner::Moe: {
        if (!model.calibration)
            throw std::runtime_error("combiner=moe requires a trained calibration; run train-moe");
        return argmax_labels(moe_combine(probs, *model.calibration));
    }
    case Combiner::Oracle:
        return argmax_labels(oracle_combine(probs, scene.labels, model.grouping));
    case Combiner::SoftmaxThreshold:
        return aggregate_baseline(probs, model.grouping, AggregateMethod::SoftmaxThreshold);
    case Combiner::Argmax:
        return aggregate_baseline(probs, model.grouping, AggregateMethod::Argmax);
    case Combiner::GroupAverage:
        return aggregate_baseline(probs, model.grouping, AggregateMethod::GroupAverage);
    case Combiner::Single: {
        if (combiner.single_expert >= model.num_experts())
            throw std::invalid_argument("combiner single: expert index out of range");
        return argmax_labels(probs[combiner.single_expert]);
    }
    }
    throw std::logic_error("predict: unreachable");
}

EvalResult evaluate(const TrainedModel& model, const std::vector<SceneSample>& test,
                    const CombinerChoice& combiner) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    const int c = model.experts[0].c;
    const int n = static_cast<int>(test.size());
    std::vector<ConfusionMatrix> partial(n);
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < n; ++s) {
        try {
            const auto pred = predict(model, test[s], combiner);
            partial[s] = confusion(pred, test[s].labels, c);
        } catch (...) {
            // exceptions must not escape the parallel region
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    EvalResult res;
    res.cm = ConfusionMatrix(c);
    for (const auto& pm : partial) res.cm.add(pm);
    res.eval_profile = compute_frequency(test, c);
    res.metrics = report(res.cm, model.grouping, res.eval_profile);
    return res;
}

BiasEstimate bias_estimate(const std::vector<TrainedModel>& replicas,
                           const std::vector<SceneSample>& test,
                           const CombinerChoice& combiner) {
    if (replicas.size() < 2) throw std::invalid_argument("bias_estimate: need >= 2 replicas");
    const int c = replicas[0].experts[0].c;
    BiasAccumulator acc(c);
    const double inv_r = 1.0 / static_cast<double>(replicas.size());
    for (const auto& scene : test) {
        ProbabilityGrid mean(scene.pixels(), c);
        for (const auto& model : replicas) {
            const auto probs = expert_probabilities(model, scene);
            ProbabilityGrid combined;
            switch (combiner.kind) {
            case Combiner::Moe:
                if (!model.calibration)
                    throw std::runtime_error("bias_estimate: moe combiner requires calibration");
                combined = moe_combine(probs, *model.calibration);
                break;
            case Combiner::Oracle:
                combined = oracle_combine(probs, scene.labels, model.grouping);
                break;
            case Combiner::GroupAverage:
                combined = group_average_probs(probs, model.grouping);
                break;
            case Combiner::Single:
                combined = probs.at(combiner.single_expert);
                break;
            default:
                throw std::invalid_argument(
                    "bias_estimate: combiner must produce probabilities (moe, oracle, "
                    "group-avg, single:<k>)");
            }
            for (std::size_t j = 0; j < mean.data.size(); ++j)
                mean.data[j] += inv_r * combined.data[j];
        }
        acc.add(mean, scene.labels);
    }
    return acc.finalize(replicas[0].grouping);
}

} // namespace medoe
