#include "framebench/gridsearch.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "framebench/errors.hpp"
#include "framebench/rng.hpp"

namespace framebench {
namespace {

std::string format_lr(double lr) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", lr);
    return buf;
}

std::string cell_tag(const GridCell& cell) {
    return cell.model + "|" + format_lr(cell.lr) + "|" + std::to_string(cell.batch);
}

GridRecord make_failed(const GridSpec& grid, const GridCell& cell, const std::string& error) {
    GridRecord rec;
    rec.cell = cell;
    rec.status = "failed";
    rec.seed = cell_seed(grid.base.seed, cell);
    rec.config_hash = config_hash(grid, cell);
    rec.hardware = hardware_descriptor();
    rec.error = error;
    return rec;
}

GridRecord run_cell(const GridSpec& grid, const GridCell& cell, const CellRunner& runner) {
    TrainConfig config = grid.base;
    config.learning_rate = cell.lr;
    config.batch_size = cell.batch;
    config.seed = cell_seed(grid.base.seed, cell);

    GridRecord rec;
    rec.cell = cell;
    rec.seed = config.seed;
    rec.config_hash = config_hash(grid, cell);
    rec.hardware = hardware_descriptor();

    const auto start = std::chrono::steady_clock::now();
    try {
        const TrainOutcome outcome = runner(cell, config);
        rec.status = "done";
        rec.best_epoch = outcome.best_epoch;
        rec.macro_f1 = outcome.best_metrics.macro_f1;
        rec.accuracy = outcome.best_metrics.accuracy;
        rec.best_metrics = outcome.best_metrics;
    } catch (const std::exception& e) {
        rec.status = "failed";
        rec.error = e.what();
    }
    rec.wall_minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
    return rec;
}

}  // namespace

GridSpec GridSpec::with_defaults(std::vector<std::string> models) {
    GridSpec grid;
    grid.models = std::move(models);
    for (const auto& model : grid.models) {
        if (model == "deberta") {
            std::vector<double> lrs{1e-5};
            lrs.insert(lrs.end(), grid.default_lrs.begin(), grid.default_lrs.end());
            grid.model_lrs[model] = std::move(lrs);
        }
    }
    return grid;
}

const std::vector<double>& GridSpec::lrs_for(const std::string& model) const {
    const auto it = model_lrs.find(model);
    return it != model_lrs.end() ? it->second : default_lrs;
}

std::vector<GridCell> enumerate_cells(const GridSpec& grid) {
    std::vector<GridCell> cells;
    for (const auto& model : grid.models) {
        for (const double lr : grid.lrs_for(model)) {
            for (const int batch : grid.batch_sizes) {
                cells.push_back({model, lr, batch});
            }
        }
    }
    return cells;
}

uint64_t cell_seed(uint64_t base_seed, const GridCell& cell) {
    return derive_seed(base_seed, cell_tag(cell));
}

std::string config_hash(const GridSpec& grid, const GridCell& cell) {
    std::ostringstream canon;
    canon << cell_tag(cell) << ";epochs=" << grid.base.max_epochs
          << ";wd=" << format_lr(grid.base.weight_decay)
          << ";eps=" << format_lr(grid.base.adam_epsilon)
          << ";warmup=" << format_lr(grid.base.warmup_fraction)
          << ";clip=" << format_lr(grid.base.clip_norm) << ";seed=" << grid.base.seed
          << ";amp=" << (grid.base.mixed_precision ? 1 : 0)
          << ";accum=" << grid.base.grad_accum_steps;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon.str())));
    return buf;
}

std::string hardware_descriptor() {
    static const std::string descriptor = [] {
        std::string name = "unknown-cpu";
        std::ifstream cpuinfo("/proc/cpuinfo");
        std::string line;
        while (std::getline(cpuinfo, line)) {
            if (line.rfind("model name", 0) == 0) {
                const auto colon = line.find(':');
                if (colon != std::string::npos) {
                    name = line.substr(colon + 1);
                    const auto first = name.find_first_not_of(' ');
                    if (first != std::string::npos) name = name.substr(first);
                }
                break;
            }
        }
        return name + " x" + std::to_string(std::thread::hardware_concurrency());
    }();
    return descriptor;
}

nlohmann::json GridRecord::to_json() const {
    nlohmann::json j{
        {"model", cell.model},       {"lr", cell.lr},
        {"batch", cell.batch},       {"status", status},
        {"seed", seed},              {"config_hash", config_hash},
        {"hardware", hardware},      {"wall_minutes", wall_minutes},
    };
    if (status == "done") {
        j["best_epoch"] = best_epoch;
        j["macro_f1"] = macro_f1;
        j["accuracy"] = accuracy;
        j["metrics"] = best_metrics.to_json();
    } else {
        j["error"] = error;
    }
    return j;
}

GridRecord GridRecord::from_json(const nlohmann::json& j) {
    GridRecord rec;
    rec.cell = {j.at("model").get<std::string>(), j.at("lr").get<double>(),
                j.at("batch").get<int>()};
    rec.status = j.at("status").get<std::string>();
    rec.seed = j.value("seed", uint64_t{0});
    rec.config_hash = j.value("config_hash", "");
    rec.hardware = j.value("hardware", "");
    rec.wall_minutes = j.value("wall_minutes", 0.0);
    if (rec.status == "done") {
        rec.best_epoch = j.at("best_epoch").get<int>();
        rec.macro_f1 = j.at("macro_f1").get<double>();
        rec.accuracy = j.at("accuracy").get<double>();
        rec.best_metrics = EvalMetrics::from_json(j.at("metrics"));
    } else {
        rec.error = j.value("error", "");
    }
    return rec;
}

std::vector<GridRecord> read_ledger(const std::string& path) {
    std::vector<GridRecord> records;
    std::ifstream in(path, std::ios::binary);
    if (!in) return records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(GridRecord::from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path + " line " + std::to_string(line_no) +
                                  ": bad ledger record: " + e.what());
        }
    }
    return records;
}

void append_ledger(const std::string& path, const GridRecord& record) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to ledger '" + path + "'");
    out << record.to_json().dump() << "\n";
}

std::vector<GridRecord> run_grid(const GridSpec& grid, const CellRunner& runner,
                                 const std::string& ledger_path, const GridOptions& options) {
    std::vector<GridRecord> records = read_ledger(ledger_path);

    const auto is_completed = [&](const GridCell& cell) {
        const std::string hash = config_hash(grid, cell);
        return std::any_of(records.begin(), records.end(), [&](const GridRecord& r) {
            return r.cell == cell && r.status == "done" && r.config_hash == hash;
        });
    };

    std::vector<GridCell> pending;
    for (const auto& cell : enumerate_cells(grid)) {
        if (!is_completed(cell)) pending.push_back(cell);
    }

    if (options.workers <= 1) {
        for (const auto& cell : pending) {
            GridRecord rec = run_cell(grid, cell, runner);
            append_ledger(ledger_path, rec);
            records.push_back(std::move(rec));
        }
        return records;
    }

    // Worker processes: each child runs one cell and writes its record to a
    // scratch file; the parent stays the single ledger writer.
    const std::filesystem::path scratch =
        std::filesystem::path(ledger_path).concat(".cells");
    std::filesystem::create_directories(scratch);

    struct Child {
        pid_t pid;
        size_t cell_index;
        std::filesystem::path file;
    };
    std::deque<size_t> queue;
    for (size_t i = 0; i < pending.size(); ++i) queue.push_back(i);
    std::vector<Child> running;

    const auto reap_one = [&] {
        int status = 0;
        const pid_t pid = ::waitpid(-1, &status, 0);
        const auto it = std::find_if(running.begin(), running.end(),
                                     [&](const Child& c) { return c.pid == pid; });
        if (it == running.end()) return;
        GridRecord rec;
        std::ifstream in(it->file, std::ios::binary);
        bool parsed = false;
        if (in && WIFEXITED(status) && WEXITSTATUS(status) == 0) {
            try {
                nlohmann::json j;
                in >> j;
                rec = GridRecord::from_json(j);
                parsed = true;
            } catch (const nlohmann::json::exception&) {
            }
        }
        if (!parsed) {
            rec = make_failed(grid, pending[it->cell_index],
                              "worker process exited without a result");
        }
        std::filesystem::remove(it->file);
        append_ledger(ledger_path, rec);
        records.push_back(std::move(rec));
        running.erase(it);
    };

    while (!queue.empty() || !running.empty()) {
        while (!queue.empty() && running.size() < static_cast<size_t>(options.workers)) {
            const size_t index = queue.front();
            queue.pop_front();
            const auto file = scratch / ("cell_" + std::to_string(index) + ".json");
            const pid_t pid = ::fork();
            if (pid < 0) throw IoError("fork failed for grid worker");
            if (pid == 0) {
                // Child: run the cell, write the record, exit without
                // touching the parent's ledger or stdio buffers.
                int code = 0;
                try {
                    const GridRecord rec = run_cell(grid, pending[index], runner);
                    std::ofstream out(file, std::ios::binary);
                    out << rec.to_json().dump() << "\n";
                    code = out ? 0 : 1;
                } catch (...) {
                    code = 1;
                }
                ::_exit(code);
            }
            running.push_back({pid, index, file});
        }
        if (!running.empty()) reap_one();
    }
    std::error_code ec;
    std::filesystem::remove_all(scratch, ec);
    return records;
}

GridRecord best_config(const std::vector<GridRecord>& records, const std::string& model) {
    const GridRecord* best = nullptr;
    for (const auto& rec : records) {
        if (rec.cell.model != model || rec.status != "done") continue;
        if (!best) {
            best = &rec;
            continue;
        }
        if (rec.macro_f1 > best->macro_f1 ||
            (rec.macro_f1 == best->macro_f1 &&
             (rec.cell.lr < best->cell.lr ||
              (rec.cell.lr == best->cell.lr && rec.cell.batch < best->cell.batch)))) {
            best = &rec;
        }
    }
    if (!best) throw ValidationError("no successful grid cells for model '" + model + "'");
    return *best;
}

BoxStats box_stats(std::vector<double> values) {
    if (values.empty()) throw ValidationError("box_stats: no values");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    const auto median_of = [&](size_t lo, size_t hi) {  // [lo, hi)
        const size_t len = hi - lo;
        const size_t mid = lo + len / 2;
        return len % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    };
    BoxStats stats;
    stats.n = n;
    stats.min = values.front();
    stats.max = values.back();
    stats.median = median_of(0, n);
    // Tukey hinges: halves include the middle element when n is odd.
    const size_t half = n / 2 + (n % 2);
    stats.q1 = median_of(0, half);
    stats.q3 = median_of(n - half, n);
    return stats;
}

SummaryBundle summarize(const std::vector<GridRecord>& records) {
    if (records.empty()) throw ValidationError("summarize: empty ledger");

    SummaryBundle bundle;
    std::vector<std::string> model_order;
    for (const auto& rec : records) {
        if (std::find(model_order.begin(), model_order.end(), rec.cell.model) ==
            model_order.end()) {
            model_order.push_back(rec.cell.model);
        }
    }

    double best_score = -1.0;
    double worst_score = 2.0;
    for (const auto& model : model_order) {
        ModelSummary summary;
        summary.model = model;
        for (const auto& rec : records) {
            if (rec.cell.model != model) continue;
            if (std::find(summary.lrs.begin(), summary.lrs.end(), rec.cell.lr) ==
                summary.lrs.end()) {
                summary.lrs.push_back(rec.cell.lr);
            }
            if (std::find(summary.batches.begin(), summary.batches.end(), rec.cell.batch) ==
                summary.batches.end()) {
                summary.batches.push_back(rec.cell.batch);
            }
        }
        std::sort(summary.lrs.begin(), summary.lrs.end());
        std::sort(summary.batches.begin(), summary.batches.end());
        summary.matrix.assign(summary.lrs.size() * summary.batches.size(),
                              std::numeric_limits<double>::quiet_NaN());
        for (const auto& rec : records) {
            if (rec.cell.model != model || rec.status != "done") continue;
            const size_t li = static_cast<size_t>(
                std::find(summary.lrs.begin(), summary.lrs.end(), rec.cell.lr) -
                summary.lrs.begin());
            const size_t bi = static_cast<size_t>(
                std::find(summary.batches.begin(), summary.batches.end(), rec.cell.batch) -
                summary.batches.begin());
            summary.cell_value(li, bi) = rec.macro_f1;
            summary.scores.push_back(rec.macro_f1);
            best_score = std::max(best_score, rec.macro_f1);
            worst_score = std::min(worst_score, rec.macro_f1);
        }
        if (!summary.scores.empty()) {
            summary.box = box_stats(summary.scores);
            summary.best = best_config(records, model);
        }
        bundle.models.push_back(std::move(summary));
    }
    bundle.spread = best_score >= worst_score ? best_score - worst_score : 0.0;
    return bundle;
}

}  // namespace framebench
