#include "medoe/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "medoe/rng.hpp"

namespace medoe {
namespace {

constexpr std::uint64_t kEmbeddingStream = 0x00E0BEDDULL;
constexpr std::uint64_t kResampleStreamBase = 0x0BE5A17EULL;

struct Rect {
    int y0, x0, y1, x1; // half-open
    int height() const { return y1 - y0; }
    int width() const { return x1 - x0; }
};

void paint(std::vector<std::uint8_t>& labels, int W, const Rect& r, std::uint8_t cat) {
    for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x)
            labels[static_cast<std::size_t>(y) * W + x] = cat;
}

Rect clip(const Rect& r, int H, int W) {
    return {std::clamp(r.y0, 0, H), std::clamp(r.x0, 0, W),
            std::clamp(r.y1, 0, H), std::clamp(r.x1, 0, W)};
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

SceneSample generate_scene(const GeneratorConfig& cfg, const std::vector<double>& emb,
                           int scene_idx) {
    auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(scene_idx));
    const int H = cfg.H, W = cfg.W;

    SceneSample s;
    s.H = H;
    s.W = W;
    s.D = cfg.D;
    s.labels.assign(static_cast<std::size_t>(H) * W, 0);
    s.features.resize(static_cast<std::size_t>(H) * W * cfg.D);

    // Background: one head category per scene, geometrically weighted so the
    // head group itself is long-tailed.
    {
        std::vector<double> w(cfg.n_head);
        for (int k = 0; k < cfg.n_head; ++k) w[k] = std::pow(2.0, -k);
        std::discrete_distribution<int> pick(w.begin(), w.end());
        std::fill(s.labels.begin(), s.labels.end(), static_cast<std::uint8_t>(pick(rng)));
    }

    // Body rectangles, one per body category. Sides 8-16 px.
    std::vector<Rect> body_rects(cfg.n_body);
    for (int b = 0; b < cfg.n_body; ++b) {
        int h = uniform_int(rng, 8, 16);
        int w = uniform_int(rng, 8, 16);
        int y0 = uniform_int(rng, 0, std::max(0, H - h));
        int x0 = uniform_int(rng, 0, std::max(0, W - w));
        body_rects[b] = clip({y0, x0, y0 + h, x0 + w}, H, W);
        paint(s.labels, W, body_rects[b], static_cast<std::uint8_t>(cfg.n_head + b));
    }

    // Tail bars: thin strips (width 1-2) inside their fixed host body
    // rectangle with probability 0.7, else flush against one of its edges.
    // Context is the only reliable cue for the confusable tail pair.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < cfg.n_tail; ++t) {
        const int cat = cfg.n_head + cfg.n_body + t;
        const int host = t % cfg.n_body;
        const Rect& hr = body_rects[host];
        const int nbars = uniform_int(rng, 1, 2);
        for (int bar = 0; bar < nbars; ++bar) {
            const bool inside = unit(rng) < 0.7;
            const bool horizontal = unit(rng) < 0.5;
            const int width = uniform_int(rng, 1, 2);
            const int length = uniform_int(rng, 8, 16);
            Rect r;
            if (inside) {
                if (horizontal) {
                    int y0 = uniform_int(rng, hr.y0, std::max(hr.y0, hr.y1 - width));
                    int x0 = uniform_int(rng, hr.x0, std::max(hr.x0, hr.x1 - length));
                    r = {y0, x0, y0 + width, x0 + length};
                    r = clip(r, hr.y1, hr.x1);
                    r.y0 = std::max(r.y0, hr.y0);
                    r.x0 = std::max(r.x0, hr.x0);
                } else {
                    int y0 = uniform_int(rng, hr.y0, std::max(hr.y0, hr.y1 - length));
                    int x0 = uniform_int(rng, hr.x0, std::max(hr.x0, hr.x1 - width));
                    r = {y0, x0, y0 + length, x0 + width};
                    r = clip(r, hr.y1, hr.x1);
                    r.y0 = std::max(r.y0, hr.y0);
                    r.x0 = std::max(r.x0, hr.x0);
                }
            } else {
                // Run along the outside of one host edge.
                int side = uniform_int(rng, 0, 3); // 0 top, 1 bottom, 2 left, 3 right
                if (side <= 1) {
                    int x0 = uniform_int(rng, hr.x0, std::max(hr.x0, hr.x1 - length));
                    int y0 = (side == 0) ? hr.y0 - width : hr.y1;
                    r = clip({y0, x0, y0 + width, std::min(x0 + length, hr.x1)}, H, W);
                } else {
                    int y0 = uniform_int(rng, hr.y0, std::max(hr.y0, hr.y1 - length));
                    int x0 = (side == 2) ? hr.x0 - width : hr.x1;
                    r = clip({y0, x0, std::min(y0 + length, hr.y1), x0 + width}, H, W);
                }
            }
            paint(s.labels, W, r, static_cast<std::uint8_t>(cat));
        }
    }

    // Features: category embedding + gamma * mean embedding of in-bounds
    // 4-neighbors + gaussian noise.
    std::normal_distribution<double> noise(0.0, 1.0);
    constexpr int dy[4] = {-1, 1, 0, 0};
    constexpr int dx[4] = {0, 0, -1, 1};
    std::vector<double> acc(cfg.D);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const int p = y * W + x;
            const double* e = emb.data() + static_cast<std::size_t>(s.labels[p]) * cfg.D;
            std::fill(acc.begin(), acc.end(), 0.0);
            int nn = 0;
            for (int k = 0; k < 4; ++k) {
                int ny = y + dy[k], nx = x + dx[k];
                if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
                const double* en =
                    emb.data() + static_cast<std::size_t>(s.labels[ny * W + nx]) * cfg.D;
                for (int d = 0; d < cfg.D; ++d) acc[d] += en[d];
                ++nn;
            }
            float* f = s.feature_at(p);
            for (int d = 0; d < cfg.D; ++d) {
                double v = e[d] + cfg.gamma * (acc[d] / nn);
                if (cfg.sigma > 0) v += cfg.sigma * noise(rng);
                f[d] = static_cast<float>(v);
            }
        }
    }
    return s;
}

} // namespace

void GeneratorConfig::validate() const {
    if (c < 3) throw std::invalid_argument("GeneratorConfig: need at least 3 categories");
    if (n_head <= 0 || n_body <= 0 || n_tail <= 0)
        throw std::invalid_argument("GeneratorConfig: every group must be nonempty");
    if (n_head + n_body + n_tail != c)
        throw std::invalid_argument("GeneratorConfig: group sizes must sum to c");
    if (gamma < 0 || sigma < 0)
        throw std::invalid_argument("GeneratorConfig: gamma and sigma must be >= 0");
    if (H <= 0 || W <= 0 || D <= 0 || n_scenes <= 0)
        throw std::invalid_argument("GeneratorConfig: dimensions must be positive");
    double sum = target_shares[0] + target_shares[1] + target_shares[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("GeneratorConfig: target_shares must sum to 1");
}

std::vector<double> category_embeddings(const GeneratorConfig& cfg) {
    // Embeddings define what a category looks like; they are fixed for a given
    // (c, D) so datasets drawn with different scene seeds stay compatible.
    auto rng = make_stream(0x5EEDC0DEULL, kEmbeddingStream);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> emb(static_cast<std::size_t>(cfg.c) * cfg.D);

    auto normalize = [&](double* v) {
        double n2 = 0;
        for (int d = 0; d < cfg.D; ++d) n2 += v[d] * v[d];
        double inv = 1.0 / std::sqrt(n2);
        for (int d = 0; d < cfg.D; ++d) v[d] *= inv;
    };
    for (int k = 0; k < cfg.c; ++k) {
        double* v = emb.data() + static_cast<std::size_t>(k) * cfg.D;
        for (int d = 0; d < cfg.D; ++d) v[d] = gauss(rng);
        normalize(v);
    }

    // Confusable pair: rebuild the last embedding at a fixed angle to the
    // second-to-last (both tail categories), cos = 0.97.
    if (cfg.n_tail >= 2 && cfg.D >= 2) {
        const double* a = emb.data() + static_cast<std::size_t>(cfg.c - 2) * cfg.D;
        double* b = emb.data() + static_cast<std::size_t>(cfg.c - 1) * cfg.D;
        double dot = 0;
        for (int d = 0; d < cfg.D; ++d) dot += a[d] * b[d];
        // Orthogonal component of b relative to a.
        std::vector<double> u(cfg.D);
        for (int d = 0; d < cfg.D; ++d) u[d] = b[d] - dot * a[d];
        normalize(u.data());
        const double cos_t = 0.97;
        const double sin_t = std::sqrt(1.0 - cos_t * cos_t);
        for (int d = 0; d < cfg.D; ++d) b[d] = cos_t * a[d] + sin_t * u[d];
    }
    return emb;
}

std::vector<SceneSample> generate_dataset(const GeneratorConfig& cfg) {
    cfg.validate();
    const auto emb = category_embeddings(cfg);
    std::vector<SceneSample> out(cfg.n_scenes);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < cfg.n_scenes; ++i) out[i] = generate_scene(cfg, emb, i);
    return out;
}

FrequencyProfile compute_frequency(const std::vector<SceneSample>& dataset, int num_categories) {
    if (dataset.empty()) throw std::invalid_argument("compute_frequency: empty dataset");
    FrequencyProfile fp;
    fp.counts.assign(num_categories, 0);
    for (const auto& s : dataset)
        for (std::uint8_t l : s.labels) {
            if (l == kIgnore) continue;
            if (l >= num_categories)
                throw std::invalid_argument("compute_frequency: label out of range");
            ++fp.counts[l];
        }
    fp.total = std::accumulate(fp.counts.begin(), fp.counts.end(), std::uint64_t{0});
    if (fp.total == 0) throw std::invalid_argument("compute_frequency: no labeled pixels");
    fp.freqs.resize(num_categories);
    for (int i = 0; i < num_categories; ++i)
        fp.freqs[i] = static_cast<double>(fp.counts[i]) / static_cast<double>(fp.total);
    return fp;
}

GroupingMode GroupingMode::explicit_counts(int h, int b, int t) {
    GroupingMode m;
    m.kind = Kind::ExplicitCounts;
    m.n_head = h;
    m.n_body = b;
    m.n_tail = t;
    return m;
}

GroupingMode GroupingMode::thresholds(double t_head, double t_body) {
    GroupingMode m;
    m.kind = Kind::Thresholds;
    m.t_head = t_head;
    m.t_body = t_body;
    return m;
}

int CategoryGrouping::dominating_expert(int category) const {
    int chosen = 0;
    for (int i = 0; i < num_experts(); ++i)
        if (sets[i][category]) chosen = i;
    return chosen;
}

CategoryGrouping make_grouping(const FrequencyProfile& profile, const GroupingMode& mode) {
    const int c = static_cast<int>(profile.freqs.size());
    CategoryGrouping g;
    g.order.resize(c);
    std::iota(g.order.begin(), g.order.end(), 0);
    std::stable_sort(g.order.begin(), g.order.end(), [&](int a, int b) {
        if (profile.freqs[a] != profile.freqs[b]) return profile.freqs[a] > profile.freqs[b];
        return a < b;
    });

    int n_head, n_body, n_tail;
    if (mode.kind == GroupingMode::Kind::ExplicitCounts) {
        n_head = mode.n_head;
        n_body = mode.n_body;
        n_tail = mode.n_tail;
        if (n_head + n_body + n_tail != c)
            throw std::invalid_argument("make_grouping: group counts must sum to c");
    } else {
        n_head = n_body = n_tail = 0;
        for (int rank = 0; rank < c; ++rank) {
            double f = profile.freqs[g.order[rank]];
            if (f >= mode.t_head)
                ++n_head;
            else if (f >= mode.t_body)
                ++n_body;
            else
                ++n_tail;
        }
    }
    if (n_head <= 0 || n_body <= 0 || n_tail <= 0)
        throw std::invalid_argument("make_grouping: every group must be nonempty");

    g.c_b = n_head;
    g.c_t = n_head + n_body;
    g.group_of.assign(c, Group::Head);
    for (int rank = 0; rank < c; ++rank)
        g.group_of[g.order[rank]] =
            rank < g.c_b ? Group::Head : (rank < g.c_t ? Group::Body : Group::Tail);

    g.sets.assign(3, std::vector<std::uint8_t>(c, 0));
    for (int cat = 0; cat < c; ++cat) {
        g.sets[0][cat] = 1;
        if (g.group_of[cat] != Group::Head) g.sets[1][cat] = 1;
        if (g.group_of[cat] == Group::Tail) g.sets[2][cat] = 1;
    }
    return g;
}

SceneSample mask_labels(const SceneSample& sample, const std::vector<std::uint8_t>& allowed) {
    SceneSample out = sample;
    for (auto& l : out.labels)
        if (l != kIgnore && !allowed[l]) l = kIgnore;
    return out;
}

std::vector<SceneSample> uniform_resample(const std::vector<SceneSample>& dataset,
                                          int num_categories,
                                          std::optional<std::uint64_t> quota,
                                          std::uint64_t seed) {
    const auto profile = compute_frequency(dataset, num_categories);
    for (int cat = 0; cat < num_categories; ++cat)
        if (profile.counts[cat] == 0)
            throw std::invalid_argument("uniform_resample: category " + std::to_string(cat) +
                                        " absent from dataset");
    const std::uint64_t q =
        quota.value_or(*std::min_element(profile.counts.begin(), profile.counts.end()));

    std::vector<SceneSample> out = dataset;
    for (int cat = 0; cat < num_categories; ++cat) {
        if (profile.counts[cat] <= q) continue;
        std::vector<std::pair<int, int>> positions; // (scene, pixel)
        positions.reserve(profile.counts[cat]);
        for (int s = 0; s < static_cast<int>(dataset.size()); ++s)
            for (int p = 0; p < dataset[s].pixels(); ++p)
                if (dataset[s].labels[p] == cat) positions.emplace_back(s, p);
        auto rng = make_stream(seed, kResampleStreamBase + static_cast<std::uint64_t>(cat));
        std::shuffle(positions.begin(), positions.end(), rng);
        for (std::size_t i = q; i < positions.size(); ++i)
            out[positions[i].first].labels[positions[i].second] = kIgnore;
    }
    return out;
}

} // namespace medoe
