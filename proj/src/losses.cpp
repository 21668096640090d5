#include "medoe/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace medoe {

namespace {

constexpr double kEps = 1e-8;

void check_labels(const std::vector<std::uint8_t>& labels, int c) {
    for (std::uint8_t l : labels)
        if (l != kIgnore && l >= c)
            throw std::invalid_argument("loss: label " + std::to_string(l) + " >= c");
}

// log softmax denominator with max-shift; returns (max, log sum exp).
std::pair<double, double> log_norm(const double* z, int c) {
    double m = z[0];
    for (int j = 1; j < c; ++j) m = std::max(m, z[j]);
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += std::exp(z[j] - m);
    return {m, std::log(s)};
}

} // namespace

void softmax_row(const double* z, int c, double* p) {
    auto [m, ls] = log_norm(z, c);
    double inv = std::exp(-ls);
    for (int j = 0; j < c; ++j) p[j] = std::exp(z[j] - m) * inv;
}

ProbabilityGrid softmax_grid(const LogitGrid& logits) {
    ProbabilityGrid out(logits.n, logits.c);
#pragma omp parallel for schedule(static)
    for (int p = 0; p < logits.n; ++p) softmax_row(logits.row(p), logits.c, out.row(p));
    return out;
}

std::vector<double> marginal_targets(const std::vector<SceneSample>& dataset,
                                     const std::vector<std::uint8_t>& allowed,
                                     int num_categories) {
    std::vector<double> q(num_categories, 0.0);
    double total = 0.0;
    for (const auto& s : dataset)
        for (std::uint8_t l : s.labels)
            if (l != kIgnore && allowed[l]) {
                q[l] += 1.0;
                total += 1.0;
            }
    if (total == 0.0) throw std::invalid_argument("marginal_targets: no pixels in allowed set");
    double sum = 0.0;
    for (int j = 0; j < num_categories; ++j) {
        if (!allowed[j]) continue;
        q[j] = std::max(q[j] / total, kEps);
        sum += q[j];
    }
    for (int j = 0; j < num_categories; ++j)
        if (allowed[j]) q[j] /= sum;
    return q;
}

LossBreakdown ce_loss(const LogitGrid& logits, const std::vector<std::uint8_t>& labels,
                      const std::vector<std::uint8_t>& allowed) {
    const int n = logits.n, c = logits.c;
    check_labels(labels, c);
    LossBreakdown out;
    out.grad = PixelMatrix(n, c);

    int n_valid = 0;
    for (int p = 0; p < n; ++p)
        if (labels[p] != kIgnore && allowed[labels[p]]) ++n_valid;
    if (n_valid == 0) return out;

    double loss = 0.0;
    const double inv_n = 1.0 / n_valid;
    for (int p = 0; p < n; ++p) {
        const std::uint8_t y = labels[p];
        if (y == kIgnore || !allowed[y]) continue;
        const double* z = logits.row(p);
        auto [m, ls] = log_norm(z, c);
        loss += -(z[y] - m - ls);
        double* g = out.grad.row(p);
        const double inv = std::exp(-ls);
        for (int j = 0; j < c; ++j) g[j] = std::exp(z[j] - m) * inv * inv_n;
        g[y] -= inv_n;
    }
    out.l_ce = loss * inv_n;
    out.total = out.l_ce;
    return out;
}

LossBreakdown aux_loss(const LogitGrid& logits, const std::vector<std::uint8_t>& labels,
                       const std::vector<std::uint8_t>& allowed, const std::vector<double>& q) {
    const int n = logits.n, c = logits.c;
    check_labels(labels, c);
    LossBreakdown out;
    out.grad = PixelMatrix(n, c);

    // Interfering-channel suppression: mean of squared logits over all pixels.
    bool full_set = std::all_of(allowed.begin(), allowed.end(), [](std::uint8_t v) { return v != 0; });
    if (!full_set) {
        const double inv_n = 1.0 / n;
        double l2 = 0.0;
        for (int p = 0; p < n; ++p) {
            const double* z = logits.row(p);
            double* g = out.grad.row(p);
            for (int j = 0; j < c; ++j) {
                if (allowed[j]) continue;
                l2 += z[j] * z[j];
                g[j] += 2.0 * z[j] * inv_n;
            }
        }
        out.l_aux_l2 = l2 * inv_n;
    }

    // KL between the batch-mean predicted marginal (restricted to the
    // allowed set, renormalized) and the dataset marginal q.
    std::vector<int> contributing;
    for (int p = 0; p < n; ++p)
        if (labels[p] != kIgnore && allowed[labels[p]]) contributing.push_back(p);
    if (!contributing.empty()) {
        const int nc = static_cast<int>(contributing.size());
        ProbabilityGrid probs(nc, c);
        std::vector<double> mean(c, 0.0);
        for (int i = 0; i < nc; ++i) {
            softmax_row(logits.row(contributing[i]), c, probs.row(i));
            const double* pr = probs.row(i);
            for (int j = 0; j < c; ++j) mean[j] += pr[j];
        }
        const double inv_nc = 1.0 / nc;
        for (int j = 0; j < c; ++j) mean[j] *= inv_nc;

        double t = 0.0;
        for (int j = 0; j < c; ++j)
            if (allowed[j]) t += mean[j];
        double kl = 0.0;
        std::vector<double> restricted(c, 0.0);
        for (int j = 0; j < c; ++j) {
            if (!allowed[j]) continue;
            restricted[j] = std::max(mean[j] / t, kEps);
            kl += restricted[j] * std::log(restricted[j] / q[j]);
        }
        out.l_aux_kl = kl;

        // d KL / d mean_j = (log(r_j/q_j) - KL) / t on the allowed set.
        std::vector<double> dmean(c, 0.0);
        for (int j = 0; j < c; ++j)
            if (allowed[j]) dmean[j] = (std::log(restricted[j] / q[j]) - kl) / t;
        for (int i = 0; i < nc; ++i) {
            const double* pr = probs.row(i);
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += dmean[j] * pr[j];
            double* g = out.grad.row(contributing[i]);
            for (int j = 0; j < c; ++j) g[j] += inv_nc * pr[j] * (dmean[j] - dot);
        }
    }

    out.total = out.l_aux_l2 + out.l_aux_kl;
    return out;
}

LossBreakdown combined_loss(const LogitGrid& logits, const std::vector<std::uint8_t>& labels,
                            const std::vector<std::uint8_t>& allowed, const std::vector<double>& q,
                            double alpha) {
    if (alpha < 0) throw std::invalid_argument("combined_loss: alpha must be >= 0");
    LossBreakdown ce = ce_loss(logits, labels, allowed);
    LossBreakdown aux = aux_loss(logits, labels, allowed, q);
    LossBreakdown out;
    out.l_ce = ce.l_ce;
    out.l_aux_l2 = aux.l_aux_l2;
    out.l_aux_kl = aux.l_aux_kl;
    out.total = ce.l_ce + alpha * (aux.l_aux_l2 + aux.l_aux_kl);
    out.grad = std::move(ce.grad);
    for (std::size_t i = 0; i < out.grad.data.size(); ++i)
        out.grad.data[i] += alpha * aux.grad.data[i];
    return out;
}

LossBreakdown focal_loss(const LogitGrid& logits, const std::vector<std::uint8_t>& labels,
                         double gamma) {
    if (gamma < 0) throw std::invalid_argument("focal_loss: gamma must be >= 0");
    const int n = logits.n, c = logits.c;
    check_labels(labels, c);
    LossBreakdown out;
    out.grad = PixelMatrix(n, c);

    int n_valid = 0;
    for (int p = 0; p < n; ++p)
        if (labels[p] != kIgnore) ++n_valid;
    if (n_valid == 0) return out;
    const double inv_n = 1.0 / n_valid;

    double loss = 0.0;
    std::vector<double> pr(c);
    for (int p = 0; p < n; ++p) {
        const std::uint8_t y = labels[p];
        if (y == kIgnore) continue;
        const double* z = logits.row(p);
        auto [m, ls] = log_norm(z, c);
        const double log_pt = z[y] - m - ls;
        softmax_row(z, c, pr.data());
        const double pt = pr[y];
        const double one_m = 1.0 - pt;
        const double w = std::pow(one_m, gamma);
        loss += -w * log_pt;

        // dL/dp_t, with the gamma = 0 and p_t -> 1 limits handled explicitly.
        double dl_dpt = -w / pt;
        if (gamma > 0 && one_m > 0)
            dl_dpt += gamma * std::pow(one_m, gamma - 1.0) * log_pt;
        double* g = out.grad.row(p);
        for (int j = 0; j < c; ++j) {
            const double dpt_dzj = pt * ((j == y ? 1.0 : 0.0) - pr[j]);
            g[j] = dl_dpt * dpt_dzj * inv_n;
        }
    }
    out.l_ce = loss * inv_n;
    out.total = out.l_ce;
    return out;
}

} // namespace medoe
