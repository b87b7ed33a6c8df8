#pragma once

#include <cstdint>
#include <string>

#include "fairdisc/config.hpp"
#include "fairdisc/eval.hpp"

// One function per command. Each writes its artifacts plus a manifest into an
// output directory; reruns with identical inputs produce identical bytes.
namespace fairdisc::runner {

struct PreprocessRequest {
    std::string schema_path;
    std::string train_csv;
    std::string test_csv;       // empty: stratified split of train_csv instead
    double test_fraction = 0.2; // used only when test_csv is empty
    std::uint64_t split_seed = 13;
    std::string out_dir;
};

struct PreprocessReport {
    std::string train_cache;
    std::string test_cache;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::size_t dropped_missing = 0;
    std::size_t unknown_categories = 0;
};

PreprocessReport preprocess(const PreprocessRequest& req);

struct TrainReport {
    std::string checkpoint;
    std::string history;
    std::size_t epochs = 0;
    double final_objective = 0.0;
    double final_train_acc = 0.0;
    double final_val_acc = 0.0; // NaN without a validation split
};

TrainReport train_run(const config::RunConfig& rc, const std::string& out_dir);

struct EvaluateReport {
    std::string results;
    eval::RunResult result;
};

// Probes a checkpoint if one is given, otherwise trains per the config first.
EvaluateReport evaluate_run(const config::RunConfig& rc, const std::string& out_dir,
                            const std::string& checkpoint_path = "");

struct GridReport {
    std::string results;
    std::string summary; // ablation only
    std::size_t cells = 0;
    std::size_t failed = 0;
};

GridReport ablate_run(const config::RunConfig& rc, const std::string& out_dir,
                      std::size_t parallel = 1);
GridReport sweep_run(const config::RunConfig& rc, const std::string& out_dir,
                     std::size_t parallel = 1);

struct ExportReport {
    std::string embeddings;
    std::size_t rows = 0;
};

// Embeddings for one split ("train" or "test") with labels appended.
ExportReport export_embeddings_run(const config::RunConfig& rc, const std::string& out_dir,
                                   eval::Embedding which, const std::string& split = "test",
                                   const std::string& checkpoint_path = "");

} // namespace fairdisc::runner
