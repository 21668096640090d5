#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "medoe/grid.hpp"

namespace medoe {

struct GeneratorConfig {
    int H = 64;
    int W = 64;
    int c = 12;
    int n_head = 2;
    int n_body = 4;
    int n_tail = 6;
    int D = 8;
    double gamma = 0.5; // neighbor-mixing coefficient
    double sigma = 0.3; // feature noise std
    int n_scenes = 200;
    std::uint64_t seed = 0;
    std::array<double, 3> target_shares{0.8, 0.15, 0.05};

    // Throws std::invalid_argument on bad group sizes / negative knobs.
    void validate() const;
};

struct FrequencyProfile {
    std::vector<std::uint64_t> counts; // per category, IGNORE excluded
    std::vector<double> freqs;         // counts / total
    std::uint64_t total = 0;
};

enum class Group : std::uint8_t { Head = 0, Body = 1, Tail = 2 };

struct GroupingMode {
    enum class Kind { ExplicitCounts, Thresholds } kind = Kind::ExplicitCounts;
    int n_head = 0, n_body = 0, n_tail = 0; // ExplicitCounts
    double t_head = 0.01, t_body = 0.001;   // Thresholds: head >= t_head, body in [t_body, t_head)

    static GroupingMode explicit_counts(int h, int b, int t);
    static GroupingMode thresholds(double t_head, double t_body);
};

// Frequency-ranked categories with the head/body/tail split and the nested
// expert label sets S_1 (all) > S_2 (body+tail) > S_3 (tail).
struct CategoryGrouping {
    std::vector<int> order;   // category ids, descending frequency, ties by ascending id
    int c_b = 0;              // rank of first body category
    int c_t = 0;              // rank of first tail category
    std::vector<Group> group_of;                 // indexed by category id
    std::vector<std::vector<std::uint8_t>> sets; // K membership masks over category ids

    int num_experts() const { return static_cast<int>(sets.size()); }
    int num_categories() const { return static_cast<int>(group_of.size()); }
    bool in_set(int expert, int category) const { return sets[expert][category] != 0; }

    // Smallest set still containing the category: head -> 0, body -> 1, tail -> 2.
    int dominating_expert(int category) const;
};

// Fixed unit embeddings, c*D row-major, independent of the scene seed so
// differently seeded datasets stay mutually compatible. The last two tail
// categories form the confusable pair (cosine similarity >= 0.95).
std::vector<double> category_embeddings(const GeneratorConfig& cfg);

std::vector<SceneSample> generate_dataset(const GeneratorConfig& cfg);

FrequencyProfile compute_frequency(const std::vector<SceneSample>& dataset, int num_categories);

CategoryGrouping make_grouping(const FrequencyProfile& profile, const GroupingMode& mode);

// Relabels everything outside `allowed` (a mask over category ids) to
// IGNORE; features pass through untouched.
SceneSample mask_labels(const SceneSample& sample, const std::vector<std::uint8_t>& allowed);

// Per category, keeps min(quota, available) labeled pixels chosen uniformly
// with the given seed; the rest become IGNORE. nullopt quota = Auto = the
// minimum per-category count.
std::vector<SceneSample> uniform_resample(const std::vector<SceneSample>& dataset,
                                          int num_categories,
                                          std::optional<std::uint64_t> quota,
                                          std::uint64_t seed);

} // namespace medoe
