// Command-line front end. Links the C API only; all logic lives behind it.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "fairdisc/fairdisc.h"

namespace {

// 0 success, 2 config error, 3 data error, 4 numeric failure, 1 anything else.
int exit_code(fd_status st) {
    switch (st) {
        case FD_OK: return 0;
        case FD_ERR_CONFIG: return 2;
        case FD_ERR_DATA: return 3;
        case FD_ERR_NUMERIC: return 4;
        default: return 1;
    }
}

int finish(fd_status st, char* report) {
    if (st != FD_OK) {
        std::fprintf(stderr, "error: %s\n", fd_last_error());
    } else if (report) {
        std::fputs(report, stdout);
    }
    fd_string_free(report);
    return exit_code(st);
}

struct CommonFlags {
    std::string config;
    std::string out_dir = "out";
    std::string variant;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::size_t parallel = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_config) {
    auto* c = cmd->add_option("--config", f.config, "run configuration file (JSON)");
    if (needs_config) c->required();
    cmd->add_option("--out-dir", f.out_dir, "directory for artifacts");
    cmd->add_option("--variant", f.variant,
                    "override the model variant (baseline, entropy-only, kl-orth-only, "
                    "multi-task, entropy-kl-shared, full)");
    cmd->add_option("--seed", f.seed, "override the training seed")
        ->each([&f](const std::string&) { f.has_seed = true; });
    cmd->add_option("--parallel", f.parallel, "worker threads for grid commands")
        ->check(CLI::PositiveNumber);
}

// Loads the config file and applies flag overrides; exits via `code` on error.
char* resolve_config(const CommonFlags& f, int& code) {
    char* loaded = nullptr;
    fd_status st = fd_config_load(f.config.c_str(), &loaded);
    if (st != FD_OK) {
        code = finish(st, nullptr);
        return nullptr;
    }
    char* resolved = nullptr;
    st = fd_config_override(loaded, f.variant.empty() ? nullptr : f.variant.c_str(),
                            f.has_seed ? 1 : 0, f.seed, &resolved);
    fd_string_free(loaded);
    if (st != FD_OK) {
        code = finish(st, nullptr);
        return nullptr;
    }
    return resolved;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learns target codes that predict the label while an adversarial "
                 "entropy term and orthogonal priors strip the sensitive attribute."};
    app.require_subcommand(1);
    app.set_version_flag("--version", []() { return std::string(fd_version()); });

    // preprocess
    std::string pre_csv, pre_schema, pre_test_csv;
    double pre_fraction = 0.2;
    std::uint64_t pre_seed = 13;
    std::string pre_out = "out";
    auto* pre = app.add_subcommand("preprocess", "encode a CSV into dataset caches");
    pre->add_option("csv", pre_csv, "training CSV")->required();
    pre->add_option("--schema", pre_schema, "dataset schema (JSON)")->required();
    pre->add_option("--test-csv", pre_test_csv, "held-out CSV (otherwise a split is drawn)");
    pre->add_option("--test-fraction", pre_fraction, "held-out fraction when splitting");
    pre->add_option("--split-seed", pre_seed, "seed for the stratified split");
    pre->add_option("--out-dir", pre_out, "directory for the caches");

    CommonFlags tr, ev, ab, sw, ex;
    auto* train = app.add_subcommand("train", "train one model; writes checkpoint + history");
    add_common(train, tr, true);

    std::string ev_checkpoint;
    auto* evaluate = app.add_subcommand("evaluate", "probe accuracy of the learned codes");
    add_common(evaluate, ev, true);
    evaluate->add_option("--checkpoint", ev_checkpoint,
                         "probe this checkpoint instead of training first");

    auto* ablate = app.add_subcommand("ablate", "run all six variants over the ablation seeds");
    add_common(ablate, ab, true);

    auto* sweep = app.add_subcommand("sweep", "grid search over schedule hyper-parameters");
    add_common(sweep, sw, true);

    std::string ex_embedding = "target-mean", ex_split = "test", ex_checkpoint;
    auto* exp = app.add_subcommand("export-embeddings", "dump codes with labels as CSV");
    add_common(exp, ex, true);
    exp->add_option("--embedding", ex_embedding,
                    "target-mean, target-sample or sensitive-mean");
    exp->add_option("--split", ex_split, "train or test");
    exp->add_option("--checkpoint", ex_checkpoint,
                    "encode with this checkpoint instead of training first");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e); // prints message or help text
        return rc == 0 ? 0 : 2;    // malformed command line = config error
    }

    char* report = nullptr;
    if (pre->parsed()) {
        const fd_status st =
            fd_preprocess(pre_schema.c_str(), pre_csv.c_str(),
                          pre_test_csv.empty() ? nullptr : pre_test_csv.c_str(), pre_fraction,
                          pre_seed, pre_out.c_str(), &report);
        return finish(st, report);
    }

    const CommonFlags& f = train->parsed()      ? tr
                           : evaluate->parsed() ? ev
                           : ablate->parsed()   ? ab
                           : sweep->parsed()    ? sw
                                                : ex;
    int code = 0;
    char* cfg = resolve_config(f, code);
    if (!cfg) return code;

    fd_status st = FD_ERR_INTERNAL;
    if (train->parsed()) {
        st = fd_train_run(cfg, f.out_dir.c_str(), &report);
    } else if (evaluate->parsed()) {
        st = fd_evaluate_run(cfg, f.out_dir.c_str(),
                             ev_checkpoint.empty() ? nullptr : ev_checkpoint.c_str(), &report);
    } else if (ablate->parsed()) {
        st = fd_ablate_run(cfg, f.out_dir.c_str(), f.parallel, &report);
    } else if (sweep->parsed()) {
        st = fd_sweep_run(cfg, f.out_dir.c_str(), f.parallel, &report);
    } else {
        st = fd_export_embeddings(cfg, f.out_dir.c_str(), ex_embedding.c_str(),
                                  ex_split.c_str(),
                                  ex_checkpoint.empty() ? nullptr : ex_checkpoint.c_str(),
                                  &report);
    }
    fd_string_free(cfg);
    return finish(st, report);
}
