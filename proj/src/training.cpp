#include "medoe/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medoe/losses.hpp"
#include "medoe/rng.hpp"

namespace medoe {
namespace {

constexpr std::uint64_t kBatchStream = 0x000BA7C4ULL;
constexpr std::uint64_t kUnderStreamBase = 0x5A3B1E00ULL;
constexpr std::uint64_t kStage2Stream = 0x57A6E200ULL;

void axpy(std::vector<double>& x, const std::vector<double>& g, double scale) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= scale * g[i];
}

bool all_finite(double v) { return std::isfinite(v); }

// Keeps round(ratio * head pixel count) head labels, pooled over all head
// categories. Sampled-away pixels are removed from the training image, not
// just the loss: their labels become IGNORE and their features are zeroed,
// so the context windows seen during training no longer match the intact
// scenes seen at evaluation.
std::vector<SceneSample> undersample_epoch(const std::vector<SceneSample>& dataset,
                                           const CategoryGrouping& grouping, double ratio,
                                           std::mt19937_64& rng) {
    std::vector<std::pair<int, int>> head_pixels;
    for (int s = 0; s < static_cast<int>(dataset.size()); ++s)
        for (int p = 0; p < dataset[s].pixels(); ++p) {
            const std::uint8_t l = dataset[s].labels[p];
            if (l != kIgnore && grouping.group_of[l] == Group::Head)
                head_pixels.emplace_back(s, p);
        }
    const std::size_t keep =
        static_cast<std::size_t>(std::llround(ratio * static_cast<double>(head_pixels.size())));
    std::shuffle(head_pixels.begin(), head_pixels.end(), rng);
    std::vector<SceneSample> out = dataset;
    for (std::size_t i = keep; i < head_pixels.size(); ++i) {
        auto& scene = out[head_pixels[i].first];
        const int p = head_pixels[i].second;
        scene.labels[p] = kIgnore;
        std::fill_n(scene.features.begin() + static_cast<std::size_t>(p) * scene.D, scene.D, 0.0f);
    }
    return out;
}

} // namespace

std::vector<std::vector<std::uint8_t>> expert_label_sets(const CategoryGrouping& grouping,
                                                         TrainMode mode) {
    if (mode == TrainMode::Medoe || mode == TrainMode::Mcn) return grouping.sets;
    return {std::vector<std::uint8_t>(grouping.num_categories(), 1)};
}

TrainedModel train_stage1(const std::vector<SceneSample>& dataset,
                          const CategoryGrouping& grouping, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train_stage1: empty dataset");
    const int c = grouping.num_categories();
    const auto sets = expert_label_sets(grouping, cfg.mode);
    const int K = static_cast<int>(sets.size());

    ModelDims dims = cfg.dims;
    dims.c = c;
    dims.K = K;
    dims.D = dataset[0].D;

    TrainedModel model;
    model.grouping = grouping;
    model.config = cfg;
    std::tie(model.backbone, model.experts) = init_params(cfg.seed, dims);
    if (cfg.mode == TrainMode::Mcn)
        for (int i = 1; i < K; ++i) {
            model.experts[i].Wc = model.experts[0].Wc;
            model.experts[i].bc = model.experts[0].bc;
        }

    const bool use_combined = cfg.mode == TrainMode::Medoe || cfg.mode == TrainMode::Mcn;
    std::vector<std::vector<double>> q(K);
    if (use_combined)
        for (int i = 0; i < K; ++i) q[i] = marginal_targets(dataset, sets[i], c);

    const bool undersampling = cfg.mode == TrainMode::UnderSample && cfg.undersample_ratio < 1.0;
    const int steps_per_epoch =
        std::max<int>(1, (static_cast<int>(dataset.size()) + cfg.batch - 1) / cfg.batch);
    std::vector<SceneSample> epoch_data;
    const std::vector<SceneSample>* data = &dataset;

    auto batch_rng = make_stream(cfg.seed, kBatchStream);
    model.trace.reserve(static_cast<std::size_t>(cfg.iters) * K);

    for (int step = 0; step < cfg.iters; ++step) {
        if (undersampling && step % steps_per_epoch == 0) {
            const int epoch = step / steps_per_epoch;
            auto rng = make_stream(cfg.seed, kUnderStreamBase + static_cast<std::uint64_t>(epoch));
            epoch_data = undersample_epoch(dataset, grouping, cfg.undersample_ratio, rng);
            data = &epoch_data;
        }

        std::vector<int> batch(cfg.batch);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(data->size()) - 1);
        for (auto& b : batch) b = pick(batch_rng);
        std::sort(batch.begin(), batch.end()); // fixed accumulation order

        BackboneGrads bgrads = zero_grads(model.backbone);
        std::vector<ExpertGrads> egrads;
        egrads.reserve(K);
        for (const auto& e : model.experts) egrads.push_back(zero_grads(e));
        std::vector<double> loss_ce(K, 0.0), loss_aux(K, 0.0), loss_total(K, 0.0);

        for (int s : batch) {
            const SceneSample& scene = (*data)[s];
            const auto bact = backbone_forward(model.backbone, scene);
            for (int i = 0; i < K; ++i) {
                auto eact = context_head_forward(model.experts[i], bact, scene.H, scene.W);
                LossBreakdown lb;
                if (use_combined)
                    lb = combined_loss(eact.logits, scene.labels, sets[i], q[i], cfg.alpha);
                else if (cfg.mode == TrainMode::Focal)
                    lb = focal_loss(eact.logits, scene.labels, cfg.focal_gamma);
                else
                    lb = ce_loss(eact.logits, scene.labels, sets[i]);
                if (!all_finite(lb.total)) throw DivergenceError(step);
                loss_ce[i] += lb.l_ce;
                loss_aux[i] += lb.l_aux_l2 + lb.l_aux_kl;
                loss_total[i] += lb.total;
                if (i == 0 && cfg.head_loss_weight != 1.0)
                    for (auto& g : lb.grad.data) g *= cfg.head_loss_weight;
                expert_backward(model.backbone, model.experts[i], scene, bact, eact, lb.grad,
                                egrads[i], i == 0 ? &bgrads : nullptr);
            }
        }

        if (cfg.mode == TrainMode::Mcn) {
            // Shared context module: every expert applies the summed gradient.
            for (int i = 1; i < K; ++i) {
                for (std::size_t j = 0; j < egrads[0].Wc.size(); ++j)
                    egrads[0].Wc[j] += egrads[i].Wc[j];
                for (std::size_t j = 0; j < egrads[0].bc.size(); ++j)
                    egrads[0].bc[j] += egrads[i].bc[j];
            }
            for (int i = 1; i < K; ++i) {
                egrads[i].Wc = egrads[0].Wc;
                egrads[i].bc = egrads[0].bc;
            }
        }

        double lr = cfg.lr;
        if (cfg.poly_schedule)
            lr *= std::pow(1.0 - static_cast<double>(step) / cfg.iters, cfg.poly_power);
        const double scale = lr / cfg.batch;

        axpy(model.backbone.W1, bgrads.W1, scale);
        axpy(model.backbone.b1, bgrads.b1, scale);
        for (int i = 0; i < K; ++i) {
            axpy(model.experts[i].Wc, egrads[i].Wc, scale);
            axpy(model.experts[i].bc, egrads[i].bc, scale);
            axpy(model.experts[i].Wh, egrads[i].Wh, scale);
            axpy(model.experts[i].bh, egrads[i].bh, scale);
        }

        for (int i = 0; i < K; ++i)
            model.trace.push_back({step, i, loss_ce[i] / cfg.batch, loss_aux[i] / cfg.batch,
                                   loss_total[i] / cfg.batch});
    }
    return model;
}

CalibrationParams train_stage2_moe(TrainedModel& model, const std::vector<SceneSample>& dataset,
                                   const TrainConfig& cfg) {
    cfg.validate();
    const int K = model.num_experts();
    const int c = model.experts[0].c;
    const int n_scenes = static_cast<int>(dataset.size());
    if (n_scenes == 0) throw std::invalid_argument("train_stage2_moe: empty dataset");
    const int n_pix = dataset[0].pixels();

    // Equalize per-category label counts so the decision-maker is not pulled
    // toward the head categories by sheer pixel volume.
    const std::vector<SceneSample>* data = &dataset;
    std::vector<SceneSample> balanced;
    if (cfg.stage2_balanced) {
        balanced = uniform_resample(dataset, c, std::nullopt, cfg.seed);
        data = &balanced;
    }

    // Experts are frozen; cache their probabilities once (f32 is plenty for
    // the decision-maker).
    std::vector<std::vector<float>> cache(n_scenes);
    for (int s = 0; s < n_scenes; ++s) {
        cache[s].resize(static_cast<std::size_t>(K) * n_pix * c);
        const auto bact = backbone_forward(model.backbone, dataset[s]);
        for (int i = 0; i < K; ++i) {
            auto eact = context_head_forward(model.experts[i], bact, dataset[s].H, dataset[s].W);
            const auto probs = softmax_grid(eact.logits);
            float* dst = cache[s].data() + static_cast<std::size_t>(i) * n_pix * c;
            for (std::size_t j = 0; j < probs.data.size(); ++j)
                dst[j] = static_cast<float>(probs.data[j]);
        }
    }

    CalibrationParams calib = CalibrationParams::identity(K, c);
    auto rng = make_stream(cfg.seed, kStage2Stream);
    const double inv_k = 1.0 / K;

    std::vector<double> a(c), sm(c);
    std::vector<double> p_final(c);
    std::vector<std::vector<double>> expert_sm(K, std::vector<double>(c));

    for (int step = 0; step < cfg.stage2_iters; ++step) {
        std::vector<int> batch(cfg.batch);
        std::uniform_int_distribution<int> pick(0, n_scenes - 1);
        for (auto& b : batch) b = pick(rng);
        std::sort(batch.begin(), batch.end());

        std::vector<double> dw(calib.w.size(), 0.0), dbeta(calib.beta.size(), 0.0);
        double loss = 0.0;
        std::int64_t n_valid = 0;

        for (int s : batch) {
            const auto& labels = (*data)[s].labels; // features match dataset[s]
            const float* probs = cache[s].data();
            for (int p = 0; p < n_pix; ++p) {
                const std::uint8_t y = labels[p];
                if (y == kIgnore) continue;
                std::fill(p_final.begin(), p_final.end(), 0.0);
                for (int i = 0; i < K; ++i) {
                    const float* pi = probs + (static_cast<std::size_t>(i) * n_pix + p) * c;
                    const double* w = calib.w_row(i);
                    const double* beta = calib.beta_row(i);
                    for (int j = 0; j < c; ++j) a[j] = w[j] * pi[j] + beta[j];
                    softmax_row(a.data(), c, expert_sm[i].data());
                    for (int j = 0; j < c; ++j) p_final[j] += inv_k * expert_sm[i][j];
                }
                loss += -std::log(std::max(p_final[y], 1e-300));
                ++n_valid;

                // d loss / d p_final is -1/p_final[y] on channel y only.
                const double gy = -inv_k / p_final[y];
                for (int i = 0; i < K; ++i) {
                    const float* pi = probs + (static_cast<std::size_t>(i) * n_pix + p) * c;
                    const double* smi = expert_sm[i].data();
                    const double dot = gy * smi[y];
                    double* dwr = dw.data() + static_cast<std::size_t>(i) * c;
                    double* dbr = dbeta.data() + static_cast<std::size_t>(i) * c;
                    for (int j = 0; j < c; ++j) {
                        const double da = smi[j] * ((j == y ? gy : 0.0) - dot);
                        dwr[j] += da * pi[j];
                        dbr[j] += da;
                    }
                }
            }
        }
        if (n_valid == 0) continue;
        if (!all_finite(loss)) throw DivergenceError(step);
        const double scale = cfg.stage2_lr / static_cast<double>(n_valid);
        axpy(calib.w, dw, scale);
        axpy(calib.beta, dbeta, scale);
        const double mean_loss = loss / static_cast<double>(n_valid);
        model.stage2_trace.push_back({step, -1, mean_loss, 0.0, mean_loss});
    }
    model.calibration = calib;
    return calib;
}

TrainedModel train_undersample_baseline(const std::vector<SceneSample>& dataset,
                                        const CategoryGrouping& grouping,
                                        const TrainConfig& cfg) {
    TrainConfig c = cfg;
    c.mode = TrainMode::UnderSample;
    return train_stage1(dataset, grouping, c);
}

std::vector<TrainedModel> train_replicas(const std::vector<SceneSample>& dataset,
                                         const CategoryGrouping& grouping, const TrainConfig& cfg,
                                         int R) {
    if (R < 2) throw std::invalid_argument("train_replicas: R must be >= 2");
    std::vector<TrainedModel> out;
    out.reserve(R);
    for (int i = 0; i < R; ++i) {
        TrainConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(i);
        out.push_back(train_stage1(dataset, grouping, c));
    }
    return out;
}

} // namespace medoe
