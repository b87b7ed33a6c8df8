#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairdisc/data.hpp"
#include "fairdisc/eval.hpp"
#include "fairdisc/model.hpp"
#include "fairdisc/train.hpp"

namespace fairdisc::config {

// Where a run's data comes from: preprocessed cache files or the seeded
// synthetic generator.
struct DatasetSource {
    enum class Kind { Cache, Synthetic };
    Kind kind = Kind::Synthetic;
    std::string train_cache;
    std::string test_cache;
    data::SyntheticSpec synthetic;
    double test_fraction = 0.2;   // synthetic route split
    std::uint64_t split_seed = 13;

    void validate() const;
};

// One file drives every command; commands read the sections they need.
struct RunConfig {
    DatasetSource dataset;
    model::ModelConfig model;   // input_dim 0 = infer from data
    train::TrainConfig train;
    eval::ProbeConfig probe;
    std::vector<std::uint64_t> ablation_seeds{1, 2, 3};
    eval::SweepGrid sweep;
    std::vector<std::uint64_t> sweep_seeds{1};

    void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Full resolved echo (for manifests); parseable by parse_run_config.
std::string dump_run_config(const RunConfig& rc);

data::Splits resolve_dataset(const DatasetSource& src);

} // namespace fairdisc::config
