#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medoe/grid.hpp"
#include "medoe/training.hpp"

namespace medoe {

// "MEDS" dataset container.
struct DatasetFile {
    int H = 0, W = 0, c = 0, D = 0;
    std::uint64_t seed = 0;
    std::vector<SceneSample> scenes;
};

void write_dataset(const std::string& path, const DatasetFile& ds);
DatasetFile read_dataset(const std::string& path);

// "MEDC" checkpoint: text header with dims/provenance, then f64 arrays.
void write_checkpoint(const std::string& path, const TrainedModel& model);
TrainedModel read_checkpoint(const std::string& path);

// "MEDP" per-scene expert probability dump (f32), for offline re-ensembling.
void write_probability_dump(const std::string& path, int H, int W, int c,
                            const std::vector<std::vector<ProbabilityGrid>>& per_scene);
std::vector<std::vector<ProbabilityGrid>> read_probability_dump(const std::string& path, int& H,
                                                                int& W, int& c);

void write_trace_csv(const std::string& path, const TrainedModel& model);

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace medoe
