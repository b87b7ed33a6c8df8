// Exercises the shared library strictly through its C surface.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fairdisc/fairdisc.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Frees fd-owned strings on scope exit.
struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { fd_string_free(p); }
    json parse() const {
        REQUIRE(p != nullptr);
        return json::parse(p);
    }
};

std::string scratch(const std::string& sub) {
    const fs::path dir = fs::temp_directory_path() / "fd_capi_test" / sub;
    fs::create_directories(dir);
    return dir.string();
}

std::string write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    return p.string();
}

const char* kQuickConfig = R"({
  "dataset": {"synthetic": {"rows": 240, "obs_dim": 5, "mix_hidden": 8, "rho": 0.5}},
  "model": {"trunk_hidden": [8], "sensitive_disc_hidden": [8]},
  "train": {"max_epochs": 3, "batch_size": 64},
  "probe": {"hidden": [8], "epochs": 10}
})";

// Trains once per binary run and hands out the checkpoint path.
const std::string& trained_checkpoint() {
    static const std::string path = [] {
        OwnedString rep;
        REQUIRE(fd_train_run(kQuickConfig, scratch("train").c_str(), &rep.p) == FD_OK);
        return rep.parse().at("checkpoint").get<std::string>();
    }();
    return path;
}

} // namespace

TEST_CASE("version and error state") {
    REQUIRE(fd_version() != nullptr);
    CHECK(std::strlen(fd_version()) > 0);

    // A failure sets the message; the next success clears it.
    CHECK(fd_dataset_load_cache(nullptr, nullptr) == FD_ERR_INVALID);
    CHECK(std::string(fd_last_error()).find("non-null") != std::string::npos);
    OwnedString echo;
    CHECK(fd_config_override("{}", nullptr, 0, 0, &echo.p) == FD_OK);
    CHECK(std::string(fd_last_error()).empty());
}

TEST_CASE("null arguments are refused, not crashed on") {
    CHECK(fd_model_load(nullptr, nullptr) == FD_ERR_INVALID);
    CHECK(fd_config_load(nullptr, nullptr) == FD_ERR_INVALID);
    CHECK(fd_train_run(kQuickConfig, nullptr, nullptr) == FD_ERR_INVALID);
    CHECK(fd_evaluate_run(nullptr, scratch("null").c_str(), nullptr, nullptr) == FD_ERR_INVALID);
    CHECK(fd_export_embeddings(kQuickConfig, scratch("null").c_str(), nullptr, "test", nullptr,
                               nullptr) == FD_ERR_INVALID);
    CHECK(fd_dataset_rows(nullptr, nullptr) == FD_ERR_INVALID);
    CHECK(fd_model_encode(nullptr, nullptr, 0, 0, nullptr, nullptr) == FD_ERR_INVALID);
}

TEST_CASE("config load and override") {
    const std::string path = write_file(fs::path(scratch("config")) / "run.json", kQuickConfig);

    OwnedString loaded;
    REQUIRE(fd_config_load(path.c_str(), &loaded.p) == FD_OK);
    const json doc = loaded.parse();
    CHECK(doc.at("model").at("variant") == "full");
    CHECK(doc.at("train").at("max_epochs") == 3);

    OwnedString overridden;
    REQUIRE(fd_config_override(loaded.p, "baseline", 1, 99, &overridden.p) == FD_OK);
    const json doc2 = overridden.parse();
    CHECK(doc2.at("model").at("variant") == "baseline");
    CHECK(doc2.at("train").at("seed") == 99);

    OwnedString bad;
    CHECK(fd_config_override(loaded.p, "superduper", 0, 0, &bad.p) == FD_ERR_CONFIG);
    CHECK(fd_config_override(R"({"model": {"code_dim": 0}})", nullptr, 0, 0, &bad.p) ==
          FD_ERR_CONFIG);
    CHECK(std::string(fd_last_error()).find("code_dim") != std::string::npos);
    CHECK(fd_config_override("{ nope", nullptr, 0, 0, &bad.p) == FD_ERR_CONFIG);

    CHECK(fd_config_load((scratch("config") + "/absent.json").c_str(), &bad.p) == FD_ERR_IO);
}

TEST_CASE("preprocess feeds the dataset handle") {
    const fs::path dir = scratch("prep");
    const std::string schema = write_file(dir / "toy.json", R"({
      "name": "toy",
      "columns": [
        {"name": "a", "kind": "numeric"},
        {"name": "label", "kind": "categorical"},
        {"name": "group", "kind": "categorical"}
      ],
      "target": {"column": "label", "classes": {"yes": 1, "no": 0}},
      "sensitive": {"column": "group", "classes": {"l": 0, "r": 1}}
    })");
    std::string csv = "a,label,group\n";
    for (int i = 0; i < 40; ++i)
        csv += std::to_string(0.1 * i) + "," + (i % 2 ? "yes" : "no") + "," +
               ((i / 2) % 2 ? "r" : "l") + "\n";
    const std::string csv_path = write_file(dir / "toy.csv", csv);

    OwnedString rep;
    REQUIRE(fd_preprocess(schema.c_str(), csv_path.c_str(), nullptr, 0.2, 7,
                          (dir / "out").string().c_str(), &rep.p) == FD_OK);
    const json doc = rep.parse();
    CHECK(doc.at("train_rows") == 32);
    CHECK(doc.at("test_rows") == 8);

    fd_dataset* d = nullptr;
    REQUIRE(fd_dataset_load_cache(doc.at("train_cache").get<std::string>().c_str(), &d) == FD_OK);
    size_t rows = 0, dim = 0, n = 0, m = 0;
    CHECK(fd_dataset_rows(d, &rows) == FD_OK);
    CHECK(fd_dataset_dim(d, &dim) == FD_OK);
    CHECK(fd_dataset_classes(d, &n, &m) == FD_OK);
    CHECK(rows == 32);
    CHECK(dim == 1);
    CHECK(n == 2);
    CHECK(m == 2);
    fd_dataset_free(d);

    CHECK(fd_dataset_load_cache((dir / "absent.cache").string().c_str(), &d) == FD_ERR_IO);
    CHECK(fd_preprocess(nullptr, csv_path.c_str(), nullptr, 0.2, 7, "out", &rep.p) ==
          FD_ERR_INVALID);
}

TEST_CASE("train, reload, encode: the full round trip") {
    fd_model* m = nullptr;
    REQUIRE(fd_model_load(trained_checkpoint().c_str(), &m) == FD_OK);

    size_t code_dim = 0;
    const char* variant = nullptr;
    CHECK(fd_model_code_dim(m, &code_dim) == FD_OK);
    CHECK(fd_model_variant(m, &variant) == FD_OK);
    CHECK(code_dim == 2);
    CHECK(std::string(variant) == "full");

    const std::vector<double> x = {0.1, -0.2, 0.3, 0.0, 1.0, -1.0, 0.5, 0.0, 0.2, -0.4};
    std::vector<double> mu_t(2 * code_dim), mu_s(2 * code_dim), again(2 * code_dim);
    REQUIRE(fd_model_encode(m, x.data(), 2, 5, mu_t.data(), mu_s.data()) == FD_OK);
    for (double v : mu_t) CHECK(std::isfinite(v));
    REQUIRE(fd_model_encode(m, x.data(), 2, 5, again.data(), nullptr) == FD_OK);
    CHECK(mu_t == again);
    CHECK(mu_t != mu_s); // distinct heads

    // Save under a new name; the reload encodes identically.
    const std::string copy = scratch("roundtrip") + "/copy.ckpt";
    REQUIRE(fd_model_save(m, copy.c_str()) == FD_OK);
    fd_model* m2 = nullptr;
    REQUIRE(fd_model_load(copy.c_str(), &m2) == FD_OK);
    std::vector<double> mu_t2(2 * code_dim);
    REQUIRE(fd_model_encode(m2, x.data(), 2, 5, mu_t2.data(), nullptr) == FD_OK);
    CHECK(mu_t == mu_t2);
    fd_model_free(m2);

    // Wrong width and zero rows are refused.
    CHECK(fd_model_encode(m, x.data(), 2, 4, mu_t.data(), nullptr) == FD_ERR_INVALID);
    CHECK(fd_model_encode(m, x.data(), 0, 5, mu_t.data(), nullptr) == FD_ERR_INVALID);
    fd_model_free(m);

    CHECK(fd_model_load((scratch("roundtrip") + "/absent.ckpt").c_str(), &m2) == FD_ERR_IO);
}

TEST_CASE("baseline models have no sensitive code to encode") {
    OwnedString base_cfg;
    REQUIRE(fd_config_override(kQuickConfig, "baseline", 0, 0, &base_cfg.p) == FD_OK);
    OwnedString rep;
    REQUIRE(fd_train_run(base_cfg.p, scratch("base").c_str(), &rep.p) == FD_OK);

    fd_model* m = nullptr;
    REQUIRE(fd_model_load(rep.parse().at("checkpoint").get<std::string>().c_str(), &m) == FD_OK);
    std::vector<double> x(5, 0.0), mu_t(2), mu_s(2);
    CHECK(fd_model_encode(m, x.data(), 1, 5, mu_t.data(), nullptr) == FD_OK);
    CHECK(fd_model_encode(m, x.data(), 1, 5, mu_t.data(), mu_s.data()) == FD_ERR_INVALID);
    CHECK(std::string(fd_last_error()).find("sensitive") != std::string::npos);
    fd_model_free(m);
}

TEST_CASE("evaluate run reports probe accuracies") {
    OwnedString rep;
    REQUIRE(fd_evaluate_run(kQuickConfig, scratch("eval").c_str(),
                            trained_checkpoint().c_str(), &rep.p) == FD_OK);
    const json doc = rep.parse();
    CHECK(doc.at("variant") == "full");
    CHECK(doc.at("target_acc").get<double>() >= 0.0);
    CHECK(doc.at("target_acc").get<double>() <= 1.0);
    CHECK(doc.at("sensitive_acc").get<double>() >= 0.0);
    CHECK(fs::exists(doc.at("results").get<std::string>()));

    // A checkpoint trained at a different width is a data error.
    OwnedString wide;
    REQUIRE(fd_config_override(
                R"({"dataset": {"synthetic": {"rows": 240, "obs_dim": 7, "mix_hidden": 8}},
                    "model": {"trunk_hidden": [8], "sensitive_disc_hidden": [8]},
                    "train": {"max_epochs": 2}, "probe": {"hidden": [8], "epochs": 5}})",
                nullptr, 0, 0, &wide.p) == FD_OK);
    OwnedString rep2;
    CHECK(fd_evaluate_run(wide.p, scratch("eval_bad").c_str(), trained_checkpoint().c_str(),
                          &rep2.p) == FD_ERR_DATA);
}

TEST_CASE("export embeddings and its refusals") {
    OwnedString rep;
    REQUIRE(fd_export_embeddings(kQuickConfig, scratch("export").c_str(), "target-mean", "test",
                                 trained_checkpoint().c_str(), &rep.p) == FD_OK);
    const json doc = rep.parse();
    CHECK(doc.at("rows").get<size_t>() > 0);
    CHECK(fs::exists(doc.at("embeddings").get<std::string>()));

    OwnedString bad;
    CHECK(fd_export_embeddings(kQuickConfig, scratch("export").c_str(), "latent", "test", nullptr,
                               &bad.p) == FD_ERR_CONFIG);
    CHECK(fd_export_embeddings(kQuickConfig, scratch("export").c_str(), "target-mean",
                               "validation", nullptr, &bad.p) == FD_ERR_INVALID);

    OwnedString base_cfg;
    REQUIRE(fd_config_override(kQuickConfig, "baseline", 0, 0, &base_cfg.p) == FD_OK);
    CHECK(fd_export_embeddings(base_cfg.p, scratch("export").c_str(), "sensitive-mean", "test",
                               nullptr, &bad.p) == FD_ERR_INVALID);
}

TEST_CASE("ablate and sweep write their grids") {
    OwnedString cfg;
    REQUIRE(fd_config_override(
                R"({"dataset": {"synthetic": {"rows": 240, "obs_dim": 5, "mix_hidden": 8}},
                    "model": {"trunk_hidden": [8], "sensitive_disc_hidden": [8]},
                    "train": {"max_epochs": 2}, "probe": {"hidden": [8], "epochs": 5},
                    "ablation_seeds": [1],
                    "sweep": {"lambda_od": [0.5, 1.5]}, "sweep_seeds": [1]})",
                nullptr, 0, 0, &cfg.p) == FD_OK);

    OwnedString arep;
    REQUIRE(fd_ablate_run(cfg.p, scratch("ablate").c_str(), 1, &arep.p) == FD_OK);
    const json adoc = arep.parse();
    CHECK(adoc.at("cells") == 6);
    CHECK(adoc.at("failed_cells") == 0);
    CHECK(fs::exists(adoc.at("results").get<std::string>()));
    CHECK(fs::exists(adoc.at("summary").get<std::string>()));

    OwnedString srep;
    REQUIRE(fd_sweep_run(cfg.p, scratch("sweep").c_str(), 1, &srep.p) == FD_OK);
    const json sdoc = srep.parse();
    CHECK(sdoc.at("cells") == 2);
    CHECK(sdoc.at("failed_cells") == 0);
}

TEST_CASE("status codes separate numeric from config failures") {
    OwnedString rep;
    CHECK(fd_train_run(
              R"({"dataset": {"synthetic": {"rows": 120, "obs_dim": 5, "mix_hidden": 8}},
                  "model": {"trunk_hidden": [8], "sensitive_disc_hidden": [8]},
                  "train": {"max_epochs": 1, "lr": 1e200}})",
              scratch("blowup").c_str(), &rep.p) == FD_ERR_NUMERIC);
    CHECK(std::string(fd_last_error()).find("finite") != std::string::npos);
    CHECK(std::string(fd_last_error()).find("epoch 0 batch") != std::string::npos);

    CHECK(fd_train_run(R"({"train": {"max_epochs": 0}})", scratch("blowup").c_str(), &rep.p) ==
          FD_ERR_CONFIG);
}
