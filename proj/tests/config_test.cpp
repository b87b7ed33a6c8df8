#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fairdisc/config.hpp"
#include "fairdisc/errors.hpp"
#include "fairdisc/json_io.hpp"
#include "fairdisc/runner.hpp"

using namespace fairdisc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& sub) {
    const fs::path dir = fs::temp_directory_path() / "fd_config_test" / sub;
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    return p.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// A fast synthetic run for the artifact tests.
config::RunConfig quick_run() {
    config::RunConfig rc = config::parse_run_config("{}");
    rc.dataset.synthetic.rows = 240;
    rc.dataset.synthetic.obs_dim = 5;
    rc.dataset.synthetic.mix_hidden = 8;
    rc.dataset.synthetic.rho = 0.5;
    rc.model.trunk_hidden = {8};
    rc.model.sensitive_disc_hidden = {8};
    rc.train.max_epochs = 3;
    rc.train.batch_size = 64;
    rc.probe.hidden = {8};
    rc.probe.epochs = 10;
    return rc;
}

} // namespace

TEST_CASE("defaults: the empty config is a complete synthetic run") {
    const config::RunConfig rc = config::parse_run_config("{}");
    CHECK_NOTHROW(rc.validate());
    CHECK(rc.dataset.kind == config::DatasetSource::Kind::Synthetic);
    CHECK(rc.dataset.test_fraction == 0.2);
    CHECK(rc.model.variant == model::Variant::Full);
    CHECK(rc.model.input_dim == 0); // inferred later from the data
    CHECK(rc.model.code_dim == 2);
    CHECK(rc.train.max_epochs == 200);
    CHECK(rc.train.schedule_mode == train::ScheduleMode::FixedExponent);
    CHECK(rc.probe.embedding == eval::Embedding::TargetMean);
    CHECK(rc.ablation_seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(rc.sweep_seeds == std::vector<std::uint64_t>{1});
    CHECK(rc.sweep.cells() == 1);
}

TEST_CASE("round trip: dump and parse are inverses, dump is a fixpoint") {
    config::RunConfig rc = config::parse_run_config("{}");
    rc.dataset.kind = config::DatasetSource::Kind::Cache;
    rc.dataset.train_cache = "a.train.cache";
    rc.dataset.test_cache = "a.test.cache";
    rc.model.input_dim = 9;
    rc.model.code_dim = 4;
    rc.model.trunk_hidden = {32, 16};
    rc.model.activation = ad::Activation::Tanh;
    rc.model.variant = model::Variant::EntropyKLShared;
    rc.model.prior_mean_target = {0.0, 0.0, 1.0, 0.0};
    rc.train.schedule_mode = train::ScheduleMode::Compounding;
    rc.train.lambda_e0 = 0.25;
    rc.train.decoupled_decay = true;
    rc.train.seed = 42;
    rc.probe.embedding = eval::Embedding::TargetSample;
    rc.probe.hidden = {};
    rc.ablation_seeds = {9, 8};
    rc.sweep.lambda_od = {0.5, 2.0};
    rc.sweep_seeds = {4};

    const std::string text = config::dump_run_config(rc);
    const config::RunConfig back = config::parse_run_config(text);
    CHECK(back.dataset.kind == config::DatasetSource::Kind::Cache);
    CHECK(back.dataset.train_cache == "a.train.cache");
    CHECK(back.model.input_dim == 9);
    CHECK(back.model.trunk_hidden == std::vector<std::size_t>{32, 16});
    CHECK(back.model.activation == ad::Activation::Tanh);
    CHECK(back.model.variant == model::Variant::EntropyKLShared);
    CHECK(back.model.prior_mean_target == std::vector<double>{0.0, 0.0, 1.0, 0.0});
    CHECK(back.train.schedule_mode == train::ScheduleMode::Compounding);
    CHECK(back.train.lambda_e0 == 0.25);
    CHECK(back.train.decoupled_decay);
    CHECK(back.train.seed == 42);
    CHECK(back.probe.embedding == eval::Embedding::TargetSample);
    CHECK(back.probe.hidden.empty());
    CHECK(back.ablation_seeds == std::vector<std::uint64_t>{9, 8});
    CHECK(back.sweep.lambda_od == std::vector<double>{0.5, 2.0});
    CHECK(back.sweep_seeds == std::vector<std::uint64_t>{4});

    CHECK(config::dump_run_config(back) == text);
}

TEST_CASE("unknown keys are rejected with their section") {
    CHECK_THROWS_WITH_AS(config::parse_run_config(R"({"model": {"code_dims": 2}})"),
                         doctest::Contains("code_dims"), ConfigError);
    CHECK_THROWS_WITH_AS(config::parse_run_config(R"({"trian": {}})"),
                         doctest::Contains("run section"), ConfigError);
    CHECK_THROWS_WITH_AS(config::parse_run_config(R"({"train": {"epochs": 5}})"),
                         doctest::Contains("train section"), ConfigError);
    CHECK_THROWS_WITH_AS(config::parse_run_config(R"({"dataset": {"path": "x"}})"),
                         doctest::Contains("dataset section"), ConfigError);
    CHECK_THROWS_WITH_AS(
        config::parse_run_config(R"({"dataset": {"synthetic": {"rows": 10, "corr": 1}}})"),
        doctest::Contains("synthetic section"), ConfigError);
    CHECK_THROWS_WITH_AS(config::parse_run_config(R"({"probe": {"width": 4}})"),
                         doctest::Contains("probe section"), ConfigError);
    CHECK_THROWS_WITH_AS(config::parse_run_config(R"({"sweep": {"lambda": [1]}})"),
                         doctest::Contains("sweep section"), ConfigError);
}

TEST_CASE("bad values are rejected with context") {
    CHECK_THROWS_WITH_AS(config::parse_run_config("{"), doctest::Contains("not valid JSON"),
                         ConfigError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"model": {"activation": "gelu"}})"), ConfigError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"model": {"variant": "plain"}})"), ConfigError);
    CHECK_THROWS_WITH_AS(config::parse_run_config(R"({"dataset": {"kind": "download"}})"),
                         doctest::Contains("download"), ConfigError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"train": {"schedule_mode": "warp"}})"),
                    ConfigError);
    CHECK_THROWS_AS(config::parse_run_config(R"({"probe": {"embedding": "latent"}})"),
                    ConfigError);
    CHECK_THROWS_WITH_AS(config::parse_run_config(R"({"model": {"input_dim": "wide"}})"),
                         doctest::Contains("malformed"), ConfigError);

    CHECK_THROWS_AS(config::load_run_config((scratch("io") / "absent.json").string()), IoError);
    const std::string bad = write_file(scratch("io") / "bad.json", "{ nope");
    CHECK_THROWS_WITH_AS(config::load_run_config(bad), doctest::Contains("bad.json"), ConfigError);
}

TEST_CASE("validate: cross-field constraints surface early") {
    config::RunConfig rc = config::parse_run_config(R"({"dataset": {"kind": "cache"}})");
    CHECK_THROWS_WITH_AS(rc.validate(), doctest::Contains("cache"), ConfigError);

    rc = config::parse_run_config(R"({"dataset": {"test_fraction": 1.5}})");
    CHECK_THROWS_WITH_AS(rc.validate(), doctest::Contains("test_fraction"), ConfigError);

    rc = config::parse_run_config(R"({"model": {"code_dim": 0}})");
    CHECK_THROWS_AS(rc.validate(), ConfigError); // even with input_dim deferred

    rc = config::parse_run_config(R"({"ablation_seeds": []})");
    CHECK_THROWS_WITH_AS(rc.validate(), doctest::Contains("ablation_seeds"), ConfigError);

    rc = config::parse_run_config(R"({"sweep_seeds": []})");
    CHECK_THROWS_WITH_AS(rc.validate(), doctest::Contains("sweep_seeds"), ConfigError);

    // input_dim 0 is the infer-from-data marker, not an error.
    rc = config::parse_run_config(R"({"model": {"input_dim": 0}})");
    CHECK_NOTHROW(rc.validate());
}

TEST_CASE("resolve_dataset: synthetic route is seeded and standardized") {
    config::RunConfig rc = quick_run();
    const data::Splits a = config::resolve_dataset(rc.dataset);
    CHECK(a.train.rows() + a.test.rows() == 240);
    CHECK(a.train.split == "train");
    CHECK(a.test.split == "test");
    CHECK(a.train.dim() == 5);

    double mean = 0.0;
    for (std::size_t r = 0; r < a.train.rows(); ++r) mean += a.train.x.at(r, 0);
    CHECK(std::abs(mean / double(a.train.rows())) < 1e-10);

    const data::Splits b = config::resolve_dataset(rc.dataset);
    CHECK(std::equal(a.train.x.data().begin(), a.train.x.data().end(), b.train.x.data().begin()));
    CHECK(a.train.y == b.train.y);
}

TEST_CASE("resolve_dataset: cache route loads pairs and rejects mismatches") {
    const fs::path dir = scratch("caches");
    const data::Splits made = config::resolve_dataset(quick_run().dataset);
    data::save_cache((dir / "t.train.cache").string(), made.train);
    data::save_cache((dir / "t.test.cache").string(), made.test);

    config::DatasetSource src;
    src.kind = config::DatasetSource::Kind::Cache;
    src.train_cache = (dir / "t.train.cache").string();
    src.test_cache = (dir / "t.test.cache").string();
    const data::Splits loaded = config::resolve_dataset(src);
    CHECK(loaded.train.rows() == made.train.rows());
    CHECK(loaded.test.rows() == made.test.rows());
    CHECK(std::equal(loaded.train.x.data().begin(), loaded.train.x.data().end(),
                     made.train.x.data().begin()));

    // Width disagreement between the two caches is a data error.
    data::Dataset narrow = made.test;
    narrow.x = ad::Tensor::zeros({narrow.rows(), 3});
    data::save_cache((dir / "narrow.cache").string(), narrow);
    src.test_cache = (dir / "narrow.cache").string();
    CHECK_THROWS_WITH_AS(config::resolve_dataset(src), doctest::Contains("feature width"),
                         DataError);

    src.test_cache = (dir / "absent.cache").string();
    CHECK_THROWS_AS(config::resolve_dataset(src), IoError);
}

TEST_CASE("train_run: artifacts, manifest echo, byte-identical reruns") {
    const config::RunConfig rc = quick_run();
    const std::string out1 = scratch("train1").string();
    const std::string out2 = scratch("train2").string();

    const runner::TrainReport rep = runner::train_run(rc, out1);
    CHECK(rep.epochs == 3);
    CHECK(fs::exists(rep.checkpoint));
    CHECK(fs::exists(rep.history));
    CHECK(fs::exists(fs::path(out1) / "manifest.json"));
    CHECK(rep.final_val_acc >= 0.0);
    CHECK(rep.final_val_acc <= 1.0);

    // The manifest's config echo is itself a loadable config.
    const nlohmann::json man = nlohmann::json::parse(read_file((fs::path(out1) / "manifest.json").string()));
    CHECK(man.at("artifact_version") == 1);
    CHECK(man.at("command") == "train");
    CHECK(man.at("seed") == rc.train.seed);
    const config::RunConfig echoed = config::parse_run_config(man.at("config").dump());
    CHECK(echoed.train.max_epochs == 3);
    CHECK(man.at("datasets").size() == 2);
    CHECK(man.at("outputs").at("checkpoint") == "checkpoint.bin");

    // Same config, fresh directory: identical bytes in every artifact.
    runner::train_run(rc, out2);
    for (const char* name : {"checkpoint.bin", "history.csv", "manifest.json"}) {
        CAPTURE(name);
        CHECK(read_file((fs::path(out1) / name).string()) ==
              read_file((fs::path(out2) / name).string()));
    }

    // The history on disk matches what a direct training run produces.
    const data::Splits sp = config::resolve_dataset(rc.dataset);
    const train::TrainResult direct = train::train(sp.train, &sp.test, rc.model, rc.train);
    CHECK(read_file(rep.history) == train::history_csv(direct.history));
}

TEST_CASE("evaluate_run: fresh training or a checkpoint, same report shape") {
    const config::RunConfig rc = quick_run();
    const std::string tdir = scratch("eval_train").string();
    const std::string edir = scratch("eval_fresh").string();
    const std::string cdir = scratch("eval_ckpt").string();

    const runner::TrainReport trained = runner::train_run(rc, tdir);
    const runner::EvaluateReport fresh = runner::evaluate_run(rc, edir);
    const runner::EvaluateReport from_ckpt = runner::evaluate_run(rc, cdir, trained.checkpoint);

    // Same seed and data: the checkpoint route reproduces the fresh route.
    CHECK(fresh.result.target_acc == from_ckpt.result.target_acc);
    CHECK(fresh.result.sensitive_acc == from_ckpt.result.sensitive_acc);

    const nlohmann::json rj = nlohmann::json::parse(read_file(fresh.results));
    CHECK(rj.at("variant") == "full");
    CHECK(rj.at("seed") == rc.train.seed);
    CHECK(rj.at("target_acc") == fresh.result.target_acc);
    CHECK(rj.at("sensitive_majority") == fresh.result.sensitive_majority);

    // A checkpoint trained on different width data is refused.
    config::RunConfig wide = rc;
    wide.dataset.synthetic.obs_dim = 7;
    CHECK_THROWS_WITH_AS(runner::evaluate_run(wide, scratch("eval_bad").string(), trained.checkpoint),
                         doctest::Contains("input dim"), DataError);
}

TEST_CASE("ablate_run and sweep_run: grid csvs land with manifests") {
    config::RunConfig rc = quick_run();
    rc.train.max_epochs = 2;
    rc.probe.epochs = 5;
    rc.ablation_seeds = {1};
    rc.sweep_seeds = {1};
    rc.sweep.lambda_od = {0.5, 1.5};

    const std::string adir = scratch("ablate").string();
    const runner::GridReport ar = runner::ablate_run(rc, adir);
    CHECK(ar.cells == 6);
    CHECK(ar.failed == 0);
    const std::string acsv = read_file(ar.results);
    CHECK(std::count(acsv.begin(), acsv.end(), '\n') == 7);
    CHECK(fs::exists(ar.summary));
    const nlohmann::json aman =
        nlohmann::json::parse(read_file((fs::path(adir) / "manifest.json").string()));
    CHECK(aman.at("command") == "ablate");
    CHECK(aman.at("cells") == 6);

    const std::string sdir = scratch("sweep").string();
    const runner::GridReport sr = runner::sweep_run(rc, sdir);
    CHECK(sr.cells == 2);
    CHECK(sr.failed == 0);
    const std::string scsv = read_file(sr.results);
    CHECK(std::count(scsv.begin(), scsv.end(), '\n') == 3);
}

TEST_CASE("export_embeddings_run: split choice, refusals, label columns") {
    const config::RunConfig rc = quick_run();
    const std::string dir = scratch("export").string();

    const runner::ExportReport rep =
        runner::export_embeddings_run(rc, dir, eval::Embedding::TargetMean, "test");
    const data::Splits sp = config::resolve_dataset(rc.dataset);
    CHECK(rep.rows == sp.test.rows());
    const std::string csv = read_file(rep.embeddings);
    CHECK(csv.rfind("e0,e1,y,s\n", 0) == 0);
    CHECK(std::size_t(std::count(csv.begin(), csv.end(), '\n')) == rep.rows + 1);

    CHECK_THROWS_WITH_AS(
        runner::export_embeddings_run(rc, dir, eval::Embedding::TargetMean, "validation"),
        doctest::Contains("split"), InvalidArgument);

    config::RunConfig base = rc;
    base.model.variant = model::Variant::Baseline;
    CHECK_THROWS_AS(
        runner::export_embeddings_run(base, dir, eval::Embedding::SensitiveMean, "test"),
        InvalidArgument);
}

TEST_CASE("every shipped preset loads and validates") {
    std::size_t count = 0;
    for (const fs::directory_entry& entry :
         fs::directory_iterator(fs::path(FD_REPO_DIR) / "configs")) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().filename().string());
        const config::RunConfig rc = config::load_run_config(entry.path().string());
        CHECK_NOTHROW(rc.validate());
        // The echo must parse back to the same document.
        const std::string echo = config::dump_run_config(rc);
        CHECK(config::dump_run_config(config::parse_run_config(echo)) == echo);
        ++count;
    }
    CHECK(count == 9); // full presets for both real datasets, the synthetic
                       // oracle, and one per ablation variant
}

TEST_CASE("preprocess: csv to caches to training, end to end") {
    const fs::path dir = scratch("prep");
    const std::string schema_path = write_file(dir / "toy.json", R"({
      "name": "toy",
      "delimiter": ",",
      "has_header": true,
      "missing_token": "?",
      "columns": [
        {"name": "a", "kind": "numeric"},
        {"name": "b", "kind": "categorical"},
        {"name": "label", "kind": "categorical"},
        {"name": "group", "kind": "categorical"}
      ],
      "target": {"column": "label", "classes": {"yes": 1, "no": 0}},
      "sensitive": {"column": "group", "classes": {"l": 0, "r": 1}}
    })");

    // 40 rows over every (label, group) combination plus one dropped row.
    std::string csv = "a,b,label,group\n";
    Rng rng(31);
    for (int i = 0; i < 40; ++i) {
        const int y = i % 2, s = (i / 2) % 2;
        csv += std::to_string(rng.uniform()) + "," + (i % 3 == 0 ? "p" : "q") + "," +
               (y ? "yes" : "no") + "," + (s ? "r" : "l") + "\n";
    }
    csv += "?,p,yes,l\n";
    const std::string csv_path = write_file(dir / "toy.csv", csv);

    runner::PreprocessRequest req;
    req.schema_path = schema_path;
    req.train_csv = csv_path;
    req.test_fraction = 0.25;
    req.split_seed = 7;
    req.out_dir = (dir / "out").string();
    const runner::PreprocessReport rep = runner::preprocess(req);

    CHECK(rep.train_rows == 28); // lround(0.25 * 10) = 3 per (y, s) stratum
    CHECK(rep.test_rows == 12);
    CHECK(rep.dropped_missing == 1);
    CHECK(fs::exists(rep.train_cache));
    CHECK(fs::path(rep.train_cache).filename() == "toy.train.cache");

    const nlohmann::json man =
        nlohmann::json::parse(read_file((dir / "out" / "manifest.json").string()));
    CHECK(man.at("command") == "preprocess");
    CHECK(man.at("dropped_missing_rows") == 1);
    CHECK(man.at("schema").at("sha256").get<std::string>().size() == 64);

    // The caches feed straight into training.
    config::RunConfig rc = quick_run();
    rc.dataset.kind = config::DatasetSource::Kind::Cache;
    rc.dataset.train_cache = rep.train_cache;
    rc.dataset.test_cache = rep.test_cache;
    rc.train.max_epochs = 2;
    const runner::TrainReport tr = runner::train_run(rc, (dir / "trained").string());
    CHECK(tr.epochs == 2);
    CHECK(fs::exists(tr.checkpoint));
}
