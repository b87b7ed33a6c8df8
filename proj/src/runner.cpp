#include "fairdisc/runner.hpp"

#include <filesystem>
#include <fstream>

#include "fairdisc/errors.hpp"
#include "fairdisc/hash.hpp"
#include "fairdisc/json_io.hpp"

namespace fairdisc::runner {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_file(const std::string& path, const std::string& contents) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(contents.data(), std::streamsize(contents.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

// The manifest pins everything a rerun needs: the resolved inputs, the seeds,
// and content hashes of the data. Deliberately no timestamps or host info —
// rerunning a command must reproduce the output directory byte for byte.
nlohmann::json manifest_base(const std::string& command) {
    nlohmann::json m;
    m["artifact_version"] = 1;
    m["command"] = command;
    return m;
}

nlohmann::json dataset_entry(const data::Dataset& d) {
    return {{"split", d.split},
            {"rows", d.rows()},
            {"dim", d.dim()},
            {"target_classes", d.n_classes},
            {"sensitive_classes", d.m_classes},
            {"provenance", d.provenance}};
}

void write_manifest(const std::string& out_dir, nlohmann::json m) {
    write_file(join(out_dir, "manifest.json"), m.dump(2) + "\n");
}

nlohmann::json config_echo(const config::RunConfig& rc) {
    return nlohmann::json::parse(config::dump_run_config(rc));
}

} // namespace

PreprocessReport preprocess(const PreprocessRequest& req) {
    if (req.out_dir.empty()) throw InvalidArgument("preprocess: output directory is empty");
    const data::DatasetSchema schema = data::load_schema(req.schema_path);
    const data::Frame train_frame = data::load_frame(req.train_csv, schema);

    data::Splits splits;
    std::size_t dropped = train_frame.dropped_missing;
    if (req.test_csv.empty()) {
        const data::SplitIndices idx = data::split_stratified(
            train_frame.y, train_frame.s, req.test_fraction, req.split_seed,
            data::StratifyOn::Both);
        splits = data::encode_splits(train_frame, idx);
    } else {
        const data::Frame test_frame = data::load_frame(req.test_csv, schema);
        dropped += test_frame.dropped_missing;
        splits = data::encode_pair(train_frame, test_frame);
    }

    PreprocessReport rep;
    rep.train_cache = join(req.out_dir, schema.name + ".train.cache");
    rep.test_cache = join(req.out_dir, schema.name + ".test.cache");
    fs::create_directories(req.out_dir);
    data::save_cache(rep.train_cache, splits.train);
    data::save_cache(rep.test_cache, splits.test);
    rep.train_rows = splits.train.rows();
    rep.test_rows = splits.test.rows();
    rep.dropped_missing = dropped;
    rep.unknown_categories = splits.unknown_categories;

    nlohmann::json m = manifest_base("preprocess");
    m["schema"] = {{"name", schema.name},
                   {"path", req.schema_path},
                   {"sha256", sha256_file(req.schema_path)}};
    m["inputs"] = nlohmann::json::array();
    m["inputs"].push_back({{"path", req.train_csv}, {"sha256", train_frame.provenance}});
    if (!req.test_csv.empty())
        m["inputs"].push_back({{"path", req.test_csv}, {"sha256", sha256_file(req.test_csv)}});
    else
        m["split"] = {{"test_fraction", req.test_fraction}, {"seed", req.split_seed}};
    m["dropped_missing_rows"] = dropped;
    m["unknown_test_categories"] = splits.unknown_categories;
    m["datasets"] = {dataset_entry(splits.train), dataset_entry(splits.test)};
    m["outputs"] = {{"train_cache", fs::path(rep.train_cache).filename().string()},
                    {"test_cache", fs::path(rep.test_cache).filename().string()}};
    write_manifest(req.out_dir, std::move(m));
    return rep;
}

TrainReport train_run(const config::RunConfig& rc, const std::string& out_dir) {
    rc.validate();
    const data::Splits splits = config::resolve_dataset(rc.dataset);
    train::TrainResult tr = train::train(splits.train, &splits.test, rc.model, rc.train);

    TrainReport rep;
    rep.checkpoint = join(out_dir, "checkpoint.bin");
    rep.history = join(out_dir, "history.csv");
    fs::create_directories(out_dir);
    model::save_checkpoint(rep.checkpoint, tr.model);
    train::write_history_csv(rep.history, tr.history);
    rep.epochs = tr.history.epochs.size();
    if (!tr.history.epochs.empty()) {
        const train::EpochStats& last = tr.history.epochs.back();
        rep.final_objective = last.loss.j;
        rep.final_train_acc = last.train_acc;
        rep.final_val_acc = last.val_acc;
    }

    nlohmann::json m = manifest_base("train");
    m["config"] = config_echo(rc);
    m["seed"] = rc.train.seed;
    m["datasets"] = {dataset_entry(splits.train), dataset_entry(splits.test)};
    m["epochs"] = rep.epochs;
    m["outputs"] = {{"checkpoint", "checkpoint.bin"}, {"history", "history.csv"}};
    write_manifest(out_dir, std::move(m));
    return rep;
}

namespace {

model::FairModel model_for(const config::RunConfig& rc, const data::Splits& splits,
                           const std::string& checkpoint_path) {
    if (!checkpoint_path.empty()) {
        model::FairModel m = model::load_checkpoint(checkpoint_path);
        if (m.config().input_dim != splits.train.dim())
            throw DataError("checkpoint expects input dim " +
                            std::to_string(m.config().input_dim) + ", dataset has " +
                            std::to_string(splits.train.dim()));
        return m;
    }
    return train::train(splits.train, &splits.test, rc.model, rc.train).model;
}

} // namespace

EvaluateReport evaluate_run(const config::RunConfig& rc, const std::string& out_dir,
                            const std::string& checkpoint_path) {
    rc.validate();
    const data::Splits splits = config::resolve_dataset(rc.dataset);
    const model::FairModel m = model_for(rc, splits, checkpoint_path);

    EvaluateReport rep;
    rep.result = eval::evaluate(m, splits.train, splits.test, rc.probe);
    rep.result.seed = rc.train.seed;

    nlohmann::json r = {{"variant", rep.result.variant},
                        {"seed", rep.result.seed},
                        {"target_acc", rep.result.target_acc},
                        {"sensitive_acc", rep.result.sensitive_acc},
                        {"target_majority", rep.result.target_majority},
                        {"sensitive_majority", rep.result.sensitive_majority}};
    rep.results = join(out_dir, "evaluate.json");
    write_file(rep.results, r.dump(2) + "\n");

    nlohmann::json man = manifest_base("evaluate");
    man["config"] = config_echo(rc);
    man["seed"] = rc.train.seed;
    if (!checkpoint_path.empty()) man["checkpoint"] = checkpoint_path;
    man["datasets"] = {dataset_entry(splits.train), dataset_entry(splits.test)};
    man["outputs"] = {{"results", "evaluate.json"}};
    write_manifest(out_dir, std::move(man));
    return rep;
}

GridReport ablate_run(const config::RunConfig& rc, const std::string& out_dir,
                      std::size_t parallel) {
    rc.validate();
    const data::Splits splits = config::resolve_dataset(rc.dataset);
    const std::vector<eval::AblationCell> cells = eval::run_ablation(
        splits.train, splits.test, rc.model, rc.train, rc.probe, rc.ablation_seeds, parallel);

    GridReport rep;
    rep.cells = cells.size();
    for (const eval::AblationCell& c : cells)
        if (!c.ok) ++rep.failed;
    rep.results = join(out_dir, "ablation.csv");
    rep.summary = join(out_dir, "ablation_summary.csv");
    write_file(rep.results, eval::ablation_csv(cells));
    write_file(rep.summary, eval::ablation_summary_csv(cells));

    nlohmann::json m = manifest_base("ablate");
    m["config"] = config_echo(rc);
    m["seeds"] = rc.ablation_seeds;
    m["datasets"] = {dataset_entry(splits.train), dataset_entry(splits.test)};
    m["cells"] = rep.cells;
    m["failed_cells"] = rep.failed;
    m["outputs"] = {{"results", "ablation.csv"}, {"summary", "ablation_summary.csv"}};
    write_manifest(out_dir, std::move(m));
    return rep;
}

GridReport sweep_run(const config::RunConfig& rc, const std::string& out_dir,
                     std::size_t parallel) {
    rc.validate();
    const data::Splits splits = config::resolve_dataset(rc.dataset);
    const std::vector<eval::SweepCell> cells =
        eval::run_sweep(splits.train, splits.test, rc.model, rc.train, rc.probe, rc.sweep,
                        rc.sweep_seeds, parallel);

    GridReport rep;
    rep.cells = cells.size();
    for (const eval::SweepCell& c : cells)
        if (!c.ok) ++rep.failed;
    rep.results = join(out_dir, "sweep.csv");
    write_file(rep.results, eval::sweep_csv(cells));

    nlohmann::json m = manifest_base("sweep");
    m["config"] = config_echo(rc);
    m["seeds"] = rc.sweep_seeds;
    m["datasets"] = {dataset_entry(splits.train), dataset_entry(splits.test)};
    m["cells"] = rep.cells;
    m["failed_cells"] = rep.failed;
    m["outputs"] = {{"results", "sweep.csv"}};
    write_manifest(out_dir, std::move(m));
    return rep;
}

ExportReport export_embeddings_run(const config::RunConfig& rc, const std::string& out_dir,
                                   eval::Embedding which, const std::string& split,
                                   const std::string& checkpoint_path) {
    rc.validate();
    if (split != "train" && split != "test")
        throw InvalidArgument("export-embeddings: split must be 'train' or 'test', got '" +
                              split + "'");
    const data::Splits splits = config::resolve_dataset(rc.dataset);
    const model::FairModel m = model_for(rc, splits, checkpoint_path);
    const data::Dataset& ds = split == "train" ? splits.train : splits.test;

    const ad::Tensor emb = eval::extract_embeddings(m, ds.x, which, rc.probe.seed);

    ExportReport rep;
    rep.rows = emb.rows();
    rep.embeddings = join(out_dir, "embeddings.csv");
    write_file(rep.embeddings, eval::embeddings_csv(emb, ds.y, ds.s));

    nlohmann::json man = manifest_base("export-embeddings");
    man["config"] = config_echo(rc);
    man["embedding"] = eval::embedding_name(which);
    man["split"] = split;
    if (!checkpoint_path.empty()) man["checkpoint"] = checkpoint_path;
    man["datasets"] = {dataset_entry(ds)};
    man["outputs"] = {{"embeddings", "embeddings.csv"}};
    write_manifest(out_dir, std::move(man));
    return rep;
}

} // namespace fairdisc::runner
