#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "framebench/trainer.hpp"

namespace framebench {

// Hyperparameter grid. Every model sweeps default_lrs x batch_sizes unless
// model_lrs lists an override; with_defaults() gives deberta the extra low
// learning rate.
struct GridSpec {
    std::vector<std::string> models;
    std::vector<double> default_lrs{2e-5, 3e-5, 4e-5, 5e-5};
    std::map<std::string, std::vector<double>> model_lrs;
    std::vector<int> batch_sizes{8, 16, 32};
    TrainConfig base;

    static GridSpec with_defaults(std::vector<std::string> models);
    const std::vector<double>& lrs_for(const std::string& model) const;
};

struct GridCell {
    std::string model;
    double lr = 0.0;
    int batch = 0;

    bool operator==(const GridCell&) const = default;
};

std::vector<GridCell> enumerate_cells(const GridSpec& grid);

// Stable per-cell seed: a hash of (base seed, model, lr, batch), used in
// both sequential and parallel modes so they agree.
uint64_t cell_seed(uint64_t base_seed, const GridCell& cell);

// Hash of the cell plus every base hyperparameter that affects its result;
// resumption skips a completed cell only when the hash still matches.
std::string config_hash(const GridSpec& grid, const GridCell& cell);

std::string hardware_descriptor();

// One ledger row.
struct GridRecord {
    GridCell cell;
    std::string status;  // "done" | "failed"
    int best_epoch = 0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    EvalMetrics best_metrics;
    double wall_minutes = 0.0;
    uint64_t seed = 0;
    std::string config_hash;
    std::string hardware;
    std::string error;

    nlohmann::json to_json() const;
    static GridRecord from_json(const nlohmann::json& j);
};

std::vector<GridRecord> read_ledger(const std::string& path);
void append_ledger(const std::string& path, const GridRecord& record);

using CellRunner = std::function<TrainOutcome(const GridCell& cell, const TrainConfig& config)>;

struct GridOptions {
    int workers = 1;  // > 1 runs cells in separate worker processes
};

// Executes every not-yet-completed cell, appending one record per cell to
// the ledger as it finishes. A failing cell is recorded as failed and does
// not stop the sweep. Returns the full ledger state (existing + new).
std::vector<GridRecord> run_grid(const GridSpec& grid, const CellRunner& runner,
                                 const std::string& ledger_path, const GridOptions& options = {});

// Highest macro F1 among this model's done cells; ties break to the lower
// learning rate, then the smaller batch.
GridRecord best_config(const std::vector<GridRecord>& records, const std::string& model);

struct BoxStats {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    size_t n = 0;
};
// Tukey hinges; whiskers are min/max.
BoxStats box_stats(std::vector<double> values);

struct ModelSummary {
    std::string model;
    std::vector<double> lrs;      // ascending
    std::vector<int> batches;     // ascending
    std::vector<double> matrix;   // lrs.size() x batches.size(); NaN = missing
    std::vector<double> scores;   // macro F1 of every done cell
    BoxStats box;
    GridRecord best;

    double& cell_value(size_t lr_idx, size_t batch_idx) {
        return matrix[lr_idx * batches.size() + batch_idx];
    }
    double cell_value(size_t lr_idx, size_t batch_idx) const {
        return matrix[lr_idx * batches.size() + batch_idx];
    }
};

struct SummaryBundle {
    std::vector<ModelSummary> models;  // order of first appearance in the ledger
    double spread = 0.0;               // best minus worst macro F1 over all done cells
};

SummaryBundle summarize(const std::vector<GridRecord>& records);

}  // namespace framebench
