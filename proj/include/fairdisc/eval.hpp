#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairdisc/data.hpp"
#include "fairdisc/model.hpp"
#include "fairdisc/train.hpp"

namespace fairdisc::eval {

enum class Embedding { TargetMean, TargetSample, SensitiveMean };

Embedding embedding_from_string(const std::string& s);
const char* embedding_name(Embedding e);

// Probes default to the discriminator architecture and a fixed budget so
// leakage numbers stay comparable across models.
struct ProbeConfig {
    std::vector<std::size_t> hidden{64, 64};
    ad::Activation activation = ad::Activation::Relu;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    double weight_decay = 0.0;
    Embedding embedding = Embedding::TargetMean;
    std::uint64_t seed = 97;

    void validate() const;
};

// Mean embeddings are deterministic; the sample variant draws once with the
// given seed.
ad::Tensor extract_embeddings(const model::FairModel& m, const ad::Tensor& x, Embedding which,
                              std::uint64_t sample_seed = 0);

struct ProbeOutcome {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

// Fresh classifier on frozen embeddings; reports held-out accuracy.
ProbeOutcome train_probe(const ad::Tensor& train_emb, const std::vector<int>& train_labels,
                         const ad::Tensor& test_emb, const std::vector<int>& test_labels,
                         std::size_t classes, const ProbeConfig& pc);

struct RunResult {
    std::string variant;
    std::uint64_t seed = 0;
    double target_acc = 0.0;        // probe on the target code vs y, test split
    double sensitive_acc = 0.0;     // probe on the target code vs s, test split
    double target_majority = 0.0;   // test-split majority baselines
    double sensitive_majority = 0.0;
};

// Target and sensitive probes on the target-code embedding, plus majority
// baselines. Verifies the encoder is bit-identical before and after.
RunResult evaluate(const model::FairModel& m, const data::Dataset& train,
                   const data::Dataset& test, const ProbeConfig& pc);

struct AblationCell {
    model::Variant variant = model::Variant::Baseline;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    RunResult result;
};

// Trains all six variants per seed on identical data; failed cells carry the
// error and the run continues.
std::vector<AblationCell> run_ablation(const data::Dataset& train, const data::Dataset& test,
                                       const model::ModelConfig& base_model,
                                       const train::TrainConfig& base_train,
                                       const ProbeConfig& probe,
                                       const std::vector<std::uint64_t>& seeds,
                                       std::size_t parallel = 1);

std::string ablation_csv(const std::vector<AblationCell>& cells);
// Per-variant mean and (sample) std over seeds.
std::string ablation_summary_csv(const std::vector<AblationCell>& cells);

struct SweepGrid {
    std::vector<double> lambda_od{1.0};
    std::vector<double> lambda_e{1.0};
    std::vector<double> gamma_od{1.0};
    std::vector<double> gamma_e{1.0};

    void validate() const;
    std::size_t cells() const;
};

struct SweepCell {
    double lambda_od = 0.0, lambda_e = 0.0, gamma_od = 0.0, gamma_e = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    RunResult result;
};

// One Full-variant run per grid cell per seed; long-format results.
std::vector<SweepCell> run_sweep(const data::Dataset& train, const data::Dataset& test,
                                 const model::ModelConfig& base_model,
                                 const train::TrainConfig& base_train, const ProbeConfig& probe,
                                 const SweepGrid& grid, const std::vector<std::uint64_t>& seeds,
                                 std::size_t parallel = 1);

std::string sweep_csv(const std::vector<SweepCell>& cells);

// rows x d embedding matrix with y and s appended as the last columns.
std::string embeddings_csv(const ad::Tensor& emb, const std::vector<int>& y,
                           const std::vector<int>& s);

} // namespace fairdisc::eval
