#include "medoe/ensemble.hpp"

#include <algorithm>
#include <stdexcept>

#include "medoe/losses.hpp"

namespace medoe {

CalibrationParams CalibrationParams::identity(int K, int c) {
    CalibrationParams p;
    p.K = K;
    p.c = c;
    p.w.assign(static_cast<std::size_t>(K) * c, 1.0);
    p.beta.assign(static_cast<std::size_t>(K) * c, 0.0);
    return p;
}

ProbabilityGrid calibrate(const ProbabilityGrid& probs, const CalibrationParams& calib,
                          int expert) {
    if (probs.c != calib.c || expert < 0 || expert >= calib.K)
        throw std::invalid_argument("calibrate: shape mismatch");
    const double* w = calib.w_row(expert);
    const double* beta = calib.beta_row(expert);
    ProbabilityGrid out(probs.n, probs.c);
#pragma omp parallel for schedule(static)
    for (int p = 0; p < probs.n; ++p) {
        const double* in = probs.row(p);
        double* o = out.row(p);
        for (int j = 0; j < probs.c; ++j) o[j] = w[j] * in[j] + beta[j];
        softmax_row(o, probs.c, o);
    }
    return out;
}

ProbabilityGrid moe_combine(const std::vector<ProbabilityGrid>& expert_probs,
                            const CalibrationParams& calib) {
    if (expert_probs.empty()) throw std::invalid_argument("moe_combine: no experts");
    const int K = static_cast<int>(expert_probs.size());
    ProbabilityGrid out(expert_probs[0].n, expert_probs[0].c);
    for (int i = 0; i < K; ++i) {
        ProbabilityGrid cal = calibrate(expert_probs[i], calib, i);
        for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += cal.data[j];
    }
    const double inv = 1.0 / K;
    for (auto& v : out.data) v *= inv;
    return out;
}

ProbabilityGrid oracle_combine(const std::vector<ProbabilityGrid>& expert_probs,
                               const std::vector<std::uint8_t>& labels,
                               const CategoryGrouping& grouping) {
    if (expert_probs.empty()) throw std::invalid_argument("oracle_combine: no experts");
    const int n = expert_probs[0].n, c = expert_probs[0].c;
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("oracle_combine: label count mismatch");
    const int K = static_cast<int>(expert_probs.size());
    ProbabilityGrid out(n, c);
    for (int p = 0; p < n; ++p) {
        int expert = 0;
        if (labels[p] != kIgnore)
            expert = std::min(grouping.dominating_expert(labels[p]), K - 1);
        const double* src = expert_probs[expert].row(p);
        std::copy(src, src + c, out.row(p));
    }
    return out;
}

std::vector<std::uint8_t> argmax_labels(const ProbabilityGrid& probs) {
    std::vector<std::uint8_t> out(probs.n);
    for (int p = 0; p < probs.n; ++p) {
        const double* row = probs.row(p);
        out[p] = static_cast<std::uint8_t>(
            std::max_element(row, row + probs.c) - row);
    }
    return out;
}

std::vector<std::uint8_t> aggregate_baseline(const std::vector<ProbabilityGrid>& expert_probs,
                                             const CategoryGrouping& grouping,
                                             AggregateMethod method, double threshold) {
    if (expert_probs.empty()) throw std::invalid_argument("aggregate_baseline: no experts");
    const int K = static_cast<int>(expert_probs.size());
    const int n = expert_probs[0].n, c = expert_probs[0].c;
    std::vector<std::uint8_t> out(n);

    switch (method) {
    case AggregateMethod::SoftmaxThreshold:
        for (int p = 0; p < n; ++p) {
            int chosen = -1;
            for (int i = K - 1; i >= 0 && chosen < 0; --i) {
                const double* row = expert_probs[i].row(p);
                for (int j = 0; j < c; ++j)
                    if (row[j] > threshold) {
                        chosen = j;
                        break;
                    }
            }
            if (chosen < 0) {
                const double* row = expert_probs[0].row(p);
                chosen = static_cast<int>(std::max_element(row, row + c) - row);
            }
            out[p] = static_cast<std::uint8_t>(chosen);
        }
        break;
    case AggregateMethod::Argmax:
        for (int p = 0; p < n; ++p) {
            double best = -1.0;
            int best_cat = 0;
            for (int i = 0; i < K; ++i) {
                const double* row = expert_probs[i].row(p);
                for (int j = 0; j < c; ++j)
                    if (row[j] > best) {
                        best = row[j];
                        best_cat = j;
                    }
            }
            out[p] = static_cast<std::uint8_t>(best_cat);
        }
        break;
    case AggregateMethod::GroupAverage: {
        for (int p = 0; p < n; ++p) {
            double acc[256];
            double sum = 0.0;
            for (int j = 0; j < c; ++j) {
                double v = 0.0;
                int cnt = 0;
                for (int i = 0; i < K; ++i)
                    if (grouping.in_set(i, j)) {
                        v += expert_probs[i].at(p, j);
                        ++cnt;
                    }
                acc[j] = cnt > 0 ? v / cnt : 0.0;
                sum += acc[j];
            }
            double best = -1.0;
            int best_cat = 0;
            for (int j = 0; j < c; ++j)
                if (acc[j] / sum > best) {
                    best = acc[j] / sum;
                    best_cat = j;
                }
            out[p] = static_cast<std::uint8_t>(best_cat);
        }
        break;
    }
    default:
        throw std::invalid_argument("aggregate_baseline: unknown method");
    }
    return out;
}

ProbabilityGrid group_average_probs(const std::vector<ProbabilityGrid>& expert_probs,
                                    const CategoryGrouping& grouping) {
    const int K = static_cast<int>(expert_probs.size());
    const int n = expert_probs[0].n, c = expert_probs[0].c;
    ProbabilityGrid out(n, c);
    for (int p = 0; p < n; ++p) {
        double* o = out.row(p);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            double v = 0.0;
            int cnt = 0;
            for (int i = 0; i < K; ++i)
                if (grouping.in_set(i, j)) {
                    v += expert_probs[i].at(p, j);
                    ++cnt;
                }
            o[j] = cnt > 0 ? v / cnt : 0.0;
            sum += o[j];
        }
        for (int j = 0; j < c; ++j) o[j] /= sum;
    }
    return out;
}

} // namespace medoe
