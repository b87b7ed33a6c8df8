#include "fairdisc/fairdisc.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "fairdisc/errors.hpp"
#include "fairdisc/json_io.hpp"
#include "fairdisc/model.hpp"
#include "fairdisc/runner.hpp"

using namespace fairdisc;

struct fd_dataset {
    data::Dataset inner;
};

struct fd_model {
    model::FairModel inner;
    explicit fd_model(model::FairModel&& m) : inner(std::move(m)) {}
};

namespace {

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_report(char** slot, const nlohmann::json& j) {
    if (slot) *slot = dup_string(j.dump(2) + "\n");
}

template <class F>
fd_status guard(F&& f) {
    try {
        f();
        t_last_error.clear();
        return FD_OK;
    } catch (const ConfigError& e) {
        t_last_error = e.what();
        return FD_ERR_CONFIG;
    } catch (const DataError& e) {
        t_last_error = e.what();
        return FD_ERR_DATA;
    } catch (const NumericError& e) {
        t_last_error = e.what();
        return FD_ERR_NUMERIC;
    } catch (const IoError& e) {
        t_last_error = e.what();
        return FD_ERR_IO;
    } catch (const InvalidArgument& e) {
        t_last_error = e.what();
        return FD_ERR_INVALID;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return FD_ERR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown failure";
        return FD_ERR_INTERNAL;
    }
}

void require(bool ok, const char* message) {
    if (!ok) throw InvalidArgument(message);
}

config::RunConfig parse_config_arg(const char* config_json) {
    require(config_json != nullptr, "config_json is null");
    return config::parse_run_config(config_json);
}

} // namespace

extern "C" {

const char* fd_version(void) { return "1.0.0"; }

const char* fd_last_error(void) { return t_last_error.c_str(); }

void fd_string_free(char* s) { std::free(s); }

/* ---- datasets ------------------------------------------------------- */

fd_status fd_dataset_load_cache(const char* path, fd_dataset** out) {
    return guard([&] {
        require(path && out, "path and out must be non-null");
        auto* handle = new fd_dataset{data::load_cache(path)};
        *out = handle;
    });
}

fd_status fd_dataset_rows(const fd_dataset* d, size_t* out) {
    return guard([&] {
        require(d && out, "dataset and out must be non-null");
        *out = d->inner.rows();
    });
}

fd_status fd_dataset_dim(const fd_dataset* d, size_t* out) {
    return guard([&] {
        require(d && out, "dataset and out must be non-null");
        *out = d->inner.dim();
    });
}

fd_status fd_dataset_classes(const fd_dataset* d, size_t* target, size_t* sensitive) {
    return guard([&] {
        require(d != nullptr, "dataset must be non-null");
        if (target) *target = d->inner.n_classes;
        if (sensitive) *sensitive = d->inner.m_classes;
    });
}

void fd_dataset_free(fd_dataset* d) { delete d; }

/* ---- models --------------------------------------------------------- */

fd_status fd_model_load(const char* checkpoint_path, fd_model** out) {
    return guard([&] {
        require(checkpoint_path && out, "checkpoint_path and out must be non-null");
        *out = new fd_model(model::load_checkpoint(checkpoint_path));
    });
}

fd_status fd_model_save(const fd_model* m, const char* checkpoint_path) {
    return guard([&] {
        require(m && checkpoint_path, "model and checkpoint_path must be non-null");
        model::save_checkpoint(checkpoint_path, m->inner);
    });
}

fd_status fd_model_code_dim(const fd_model* m, size_t* out) {
    return guard([&] {
        require(m && out, "model and out must be non-null");
        *out = m->inner.config().code_dim;
    });
}

fd_status fd_model_variant(const fd_model* m, const char** out) {
    return guard([&] {
        require(m && out, "model and out must be non-null");
        *out = model::variant_name(m->inner.config().variant);
    });
}

fd_status fd_model_encode(const fd_model* m, const double* x, size_t rows, size_t dim,
                          double* mu_t, double* mu_s) {
    return guard([&] {
        require(m && x && mu_t, "model, x and mu_t must be non-null");
        require(rows > 0 && dim > 0, "rows and dim must be positive");
        const ad::Tensor input =
            ad::Tensor::from({rows, dim}, std::vector<double>(x, x + rows * dim));
        const model::FairModel::Codes codes = m->inner.encode(input);
        std::memcpy(mu_t, codes.mu_t.raw(), codes.mu_t.size() * sizeof(double));
        if (mu_s) {
            if (codes.mu_s.size() == 0)
                throw InvalidArgument(std::string("variant '") +
                                      model::variant_name(m->inner.config().variant) +
                                      "' has no sensitive code");
            std::memcpy(mu_s, codes.mu_s.raw(), codes.mu_s.size() * sizeof(double));
        }
    });
}

void fd_model_free(fd_model* m) { delete m; }

/* ---- configs -------------------------------------------------------- */

fd_status fd_config_load(const char* path, char** out_json) {
    return guard([&] {
        require(path && out_json, "path and out_json must be non-null");
        const config::RunConfig rc = config::load_run_config(path);
        *out_json = dup_string(config::dump_run_config(rc));
    });
}

fd_status fd_config_override(const char* config_json, const char* variant, int has_seed,
                             uint64_t seed, char** out_json) {
    return guard([&] {
        require(out_json != nullptr, "out_json must be non-null");
        config::RunConfig rc = parse_config_arg(config_json);
        if (variant) rc.model.variant = model::variant_from_string(variant);
        if (has_seed) rc.train.seed = seed;
        rc.validate();
        *out_json = dup_string(config::dump_run_config(rc));
    });
}

/* ---- run orchestration ---------------------------------------------- */

fd_status fd_preprocess(const char* schema_path, const char* train_csv, const char* test_csv,
                        double test_fraction, uint64_t split_seed, const char* out_dir,
                        char** report_json) {
    return guard([&] {
        require(schema_path && train_csv && out_dir,
                "schema_path, train_csv and out_dir must be non-null");
        runner::PreprocessRequest req;
        req.schema_path = schema_path;
        req.train_csv = train_csv;
        req.test_csv = test_csv ? test_csv : "";
        req.test_fraction = test_fraction;
        req.split_seed = split_seed;
        req.out_dir = out_dir;
        const runner::PreprocessReport rep = runner::preprocess(req);
        set_report(report_json, {{"train_cache", rep.train_cache},
                                 {"test_cache", rep.test_cache},
                                 {"train_rows", rep.train_rows},
                                 {"test_rows", rep.test_rows},
                                 {"dropped_missing_rows", rep.dropped_missing},
                                 {"unknown_test_categories", rep.unknown_categories}});
    });
}

fd_status fd_train_run(const char* config_json, const char* out_dir, char** report_json) {
    return guard([&] {
        require(out_dir != nullptr, "out_dir must be non-null");
        const config::RunConfig rc = parse_config_arg(config_json);
        const runner::TrainReport rep = runner::train_run(rc, out_dir);
        set_report(report_json, {{"checkpoint", rep.checkpoint},
                                 {"history", rep.history},
                                 {"epochs", rep.epochs},
                                 {"final_objective", rep.final_objective},
                                 {"final_train_acc", rep.final_train_acc},
                                 {"final_val_acc", rep.final_val_acc}});
    });
}

fd_status fd_evaluate_run(const char* config_json, const char* out_dir,
                          const char* checkpoint_path, char** report_json) {
    return guard([&] {
        require(out_dir != nullptr, "out_dir must be non-null");
        const config::RunConfig rc = parse_config_arg(config_json);
        const runner::EvaluateReport rep =
            runner::evaluate_run(rc, out_dir, checkpoint_path ? checkpoint_path : "");
        set_report(report_json, {{"results", rep.results},
                                 {"variant", rep.result.variant},
                                 {"seed", rep.result.seed},
                                 {"target_acc", rep.result.target_acc},
                                 {"sensitive_acc", rep.result.sensitive_acc},
                                 {"target_majority", rep.result.target_majority},
                                 {"sensitive_majority", rep.result.sensitive_majority}});
    });
}

fd_status fd_ablate_run(const char* config_json, const char* out_dir, size_t parallel,
                        char** report_json) {
    return guard([&] {
        require(out_dir != nullptr, "out_dir must be non-null");
        const config::RunConfig rc = parse_config_arg(config_json);
        const runner::GridReport rep = runner::ablate_run(rc, out_dir, parallel ? parallel : 1);
        set_report(report_json, {{"results", rep.results},
                                 {"summary", rep.summary},
                                 {"cells", rep.cells},
                                 {"failed_cells", rep.failed}});
    });
}

fd_status fd_sweep_run(const char* config_json, const char* out_dir, size_t parallel,
                       char** report_json) {
    return guard([&] {
        require(out_dir != nullptr, "out_dir must be non-null");
        const config::RunConfig rc = parse_config_arg(config_json);
        const runner::GridReport rep = runner::sweep_run(rc, out_dir, parallel ? parallel : 1);
        set_report(report_json, {{"results", rep.results},
                                 {"cells", rep.cells},
                                 {"failed_cells", rep.failed}});
    });
}

fd_status fd_export_embeddings(const char* config_json, const char* out_dir,
                               const char* embedding, const char* split,
                               const char* checkpoint_path, char** report_json) {
    return guard([&] {
        require(out_dir && embedding, "out_dir and embedding must be non-null");
        const config::RunConfig rc = parse_config_arg(config_json);
        const runner::ExportReport rep = runner::export_embeddings_run(
            rc, out_dir, eval::embedding_from_string(embedding), split ? split : "test",
            checkpoint_path ? checkpoint_path : "");
        set_report(report_json, {{"embeddings", rep.embeddings}, {"rows", rep.rows}});
    });
}

} // extern "C"
