#include "medoe/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace medoe {

std::uint64_t ConfusionMatrix::gt_count(int i) const {
    std::uint64_t s = 0;
    for (int j = 0; j < c; ++j) s += at(i, j);
    return s;
}

std::uint64_t ConfusionMatrix::pred_count(int i) const {
    std::uint64_t s = 0;
    for (int j = 0; j < c; ++j) s += at(j, i);
    return s;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t s = 0;
    for (auto v : m) s += v;
    return s;
}

void ConfusionMatrix::add(const ConfusionMatrix& other) {
    if (other.c != c) throw std::invalid_argument("ConfusionMatrix::add: size mismatch");
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += other.m[i];
}

ConfusionMatrix confusion(const std::vector<std::uint8_t>& pred,
                          const std::vector<std::uint8_t>& gt, int num_categories) {
    if (pred.size() != gt.size()) throw std::invalid_argument("confusion: shape mismatch");
    ConfusionMatrix cm(num_categories);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] == kIgnore) continue;
        if (gt[i] >= num_categories || pred[i] >= num_categories)
            throw std::invalid_argument("confusion: label out of range");
        ++cm.at(gt[i], pred[i]);
    }
    return cm;
}

MetricsReport report(const ConfusionMatrix& cm, const CategoryGrouping& grouping,
                     const FrequencyProfile& profile) {
    const int c = cm.c;
    if (grouping.num_categories() != c)
        throw std::invalid_argument("report: grouping size mismatch");
    MetricsReport r;
    r.acc.assign(c, 0.0);
    r.iou.assign(c, 0.0);
    r.gt_count.resize(c);
    r.pred_count.resize(c);
    r.included.assign(c, false);

    GroupMetrics* groups[3] = {&r.head, &r.body, &r.tail};
    for (int i = 0; i < c; ++i) {
        r.gt_count[i] = cm.gt_count(i);
        r.pred_count[i] = cm.pred_count(i);
        if (r.gt_count[i] == 0) continue; // absent category, excluded from means
        r.included[i] = true;
        const double tp = static_cast<double>(cm.tp(i));
        r.acc[i] = tp / static_cast<double>(r.gt_count[i]);
        r.iou[i] = tp / static_cast<double>(r.gt_count[i] + cm.fp(i));
        r.overall.macc += r.acc[i];
        r.overall.miou += r.iou[i];
        ++r.overall.included;
        GroupMetrics* g = groups[static_cast<int>(grouping.group_of[i])];
        g->macc += r.acc[i];
        g->miou += r.iou[i];
        ++g->included;
    }
    for (GroupMetrics* g : {&r.overall, &r.head, &r.body, &r.tail})
        if (g->included > 0) {
            g->macc /= g->included;
            g->miou /= g->included;
        }

    // Pearson between dataset frequency and per-category accuracy over the
    // included categories.
    double mf = 0, ma = 0;
    int n = 0;
    for (int i = 0; i < c; ++i)
        if (r.included[i]) {
            mf += profile.freqs[i];
            ma += r.acc[i];
            ++n;
        }
    if (n >= 2) {
        mf /= n;
        ma /= n;
        double sff = 0, saa = 0, sfa = 0;
        for (int i = 0; i < c; ++i)
            if (r.included[i]) {
                const double df = profile.freqs[i] - mf;
                const double da = r.acc[i] - ma;
                sff += df * df;
                saa += da * da;
                sfa += df * da;
            }
        if (sff > 0 && saa > 0) r.pearson_freq_acc = sfa / std::sqrt(sff * saa);
    }
    return r;
}

IdentityCheckResult identity_checks(const ConfusionMatrix& cm) {
    IdentityCheckResult res;
    std::uint64_t sum_fp = 0, sum_fn = 0;
    for (int i = 0; i < cm.c; ++i) {
        sum_fp += cm.fp(i);
        sum_fn += cm.fn(i);
    }
    if (sum_fp != sum_fn) {
        res.ok = false;
        res.detail = "sum FP != sum FN";
        return res;
    }
    for (int i = 0; i < cm.c; ++i) {
        if (cm.tp(i) == 0) continue;
        const double gt = static_cast<double>(cm.gt_count(i));
        const double acc = static_cast<double>(cm.tp(i)) / gt;
        const double iou = static_cast<double>(cm.tp(i)) / static_cast<double>(cm.gt_count(i) + cm.fp(i));
        const double derived_fp = (acc / iou - 1.0) * gt;
        if (std::abs(derived_fp - static_cast<double>(cm.fp(i))) > 1e-9 * std::max(1.0, gt)) {
            res.ok = false;
            res.violating_category = i;
            res.detail = "FP identity violated";
            return res;
        }
    }
    return res;
}

DeltaFpDiagnostic delta_fp_diagnostic(const ConfusionMatrix& baseline,
                                      const ConfusionMatrix& improved) {
    if (baseline.c != improved.c)
        throw std::invalid_argument("delta_fp_diagnostic: category set mismatch");
    DeltaFpDiagnostic diag;
    diag.categories.resize(baseline.c);
    for (int i = 0; i < baseline.c; ++i) {
        DeltaFpCategory& d = diag.categories[i];
        const std::uint64_t gt_b = baseline.gt_count(i);
        const std::uint64_t gt_i = improved.gt_count(i);
        if (gt_b == 0 || gt_i == 0 || baseline.tp(i) == 0) continue;
        const double acc_b = static_cast<double>(baseline.tp(i)) / static_cast<double>(gt_b);
        const double acc_i = static_cast<double>(improved.tp(i)) / static_cast<double>(gt_i);
        d.computable = true;
        d.p = acc_i / acc_b - 1.0;
        d.predicted_delta_fp =
            d.p * (static_cast<double>(gt_b) + static_cast<double>(baseline.fp(i)));
        d.actual_delta_fp =
            static_cast<double>(improved.fp(i)) - static_cast<double>(baseline.fp(i));
        d.effectiveness_ratio = d.actual_delta_fp / static_cast<double>(gt_b);
        d.effective = d.effectiveness_ratio < 0.1;
    }
    return diag;
}

BiasAccumulator::BiasAccumulator(int num_categories)
    : sum_(num_categories, 0.0), count_(num_categories, 0) {}

void BiasAccumulator::add(const ProbabilityGrid& mean_probs,
                          const std::vector<std::uint8_t>& labels) {
    for (int p = 0; p < mean_probs.n; ++p) {
        const std::uint8_t y = labels[p];
        if (y == kIgnore) continue;
        const double* h = mean_probs.row(p);
        double d2 = 0.0;
        for (int j = 0; j < mean_probs.c; ++j) {
            const double diff = h[j] - (j == y ? 1.0 : 0.0);
            d2 += diff * diff;
        }
        sum_[y] += d2;
        ++count_[y];
    }
}

BiasEstimate BiasAccumulator::finalize(const CategoryGrouping& grouping) const {
    const int c = static_cast<int>(sum_.size());
    BiasEstimate est;
    est.per_category.assign(c, 0.0);
    est.pixel_count = count_;
    double gsum[3] = {0, 0, 0};
    int gcnt[3] = {0, 0, 0};
    for (int i = 0; i < c; ++i) {
        if (count_[i] == 0) continue;
        est.per_category[i] = sum_[i] / static_cast<double>(count_[i]);
        const int g = static_cast<int>(grouping.group_of[i]);
        gsum[g] += est.per_category[i];
        ++gcnt[g];
    }
    est.head = gcnt[0] ? gsum[0] / gcnt[0] : 0.0;
    est.body = gcnt[1] ? gsum[1] / gcnt[1] : 0.0;
    est.tail = gcnt[2] ? gsum[2] / gcnt[2] : 0.0;
    return est;
}

} // namespace medoe
