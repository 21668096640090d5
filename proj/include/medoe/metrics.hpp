#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "medoe/grid.hpp"
#include "medoe/synthgen.hpp"

namespace medoe {

// c x c integer counts, m[gt][pred]. IGNORE ground truth excluded.
struct ConfusionMatrix {
    int c = 0;
    std::vector<std::uint64_t> m;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int c_) : c(c_), m(static_cast<std::size_t>(c_) * c_, 0) {}

    std::uint64_t& at(int gt, int pred) { return m[static_cast<std::size_t>(gt) * c + pred]; }
    std::uint64_t at(int gt, int pred) const { return m[static_cast<std::size_t>(gt) * c + pred]; }

    std::uint64_t tp(int i) const { return at(i, i); }
    std::uint64_t gt_count(int i) const;   // row sum = TP + FN
    std::uint64_t pred_count(int i) const; // column sum = TP + FP
    std::uint64_t fn(int i) const { return gt_count(i) - tp(i); }
    std::uint64_t fp(int i) const { return pred_count(i) - tp(i); }
    std::uint64_t total() const;

    void add(const ConfusionMatrix& other);
};

ConfusionMatrix confusion(const std::vector<std::uint8_t>& pred,
                          const std::vector<std::uint8_t>& gt, int num_categories);

struct GroupMetrics {
    double macc = 0.0;
    double miou = 0.0;
    int included = 0;
};

struct MetricsReport {
    std::vector<double> acc, iou;
    std::vector<std::uint64_t> gt_count, pred_count;
    std::vector<bool> included; // gt_count > 0
    GroupMetrics overall, head, body, tail;
    std::optional<double> pearson_freq_acc; // nullopt when undefined (constant input)
};

MetricsReport report(const ConfusionMatrix& cm, const CategoryGrouping& grouping,
                     const FrequencyProfile& profile);

struct IdentityCheckResult {
    bool ok = true;
    int violating_category = -1;
    std::string detail;
};

// Sum FP == sum FN (exact) and FP_i == (Acc_i/IoU_i - 1) * gt_i to 1e-9 for
// every category with TP > 0.
IdentityCheckResult identity_checks(const ConfusionMatrix& cm);

struct DeltaFpCategory {
    bool computable = false;
    double p = 0.0; // relative accuracy gain
    double predicted_delta_fp = 0.0;
    double actual_delta_fp = 0.0;
    double effectiveness_ratio = 0.0; // actual delta FP / gt count
    bool effective = false;           // ratio < 0.1
};

struct DeltaFpDiagnostic {
    std::vector<DeltaFpCategory> categories;
};

DeltaFpDiagnostic delta_fp_diagnostic(const ConfusionMatrix& baseline,
                                      const ConfusionMatrix& improved);

struct BiasEstimate {
    std::vector<double> per_category; // mean squared distance to one-hot, by gt category
    std::vector<std::uint64_t> pixel_count;
    double head = 0.0, body = 0.0, tail = 0.0;
};

// Accumulates the replica-mean probability vectors' squared distance to the
// one-hot labels, then reduces per category and per group.
class BiasAccumulator {
public:
    explicit BiasAccumulator(int num_categories);
    // mean_probs must already be averaged over replicas.
    void add(const ProbabilityGrid& mean_probs, const std::vector<std::uint8_t>& labels);
    BiasEstimate finalize(const CategoryGrouping& grouping) const;

private:
    std::vector<double> sum_;
    std::vector<std::uint64_t> count_;
};

} // namespace medoe
