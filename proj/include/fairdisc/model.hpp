#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fairdisc/distributions.hpp"
#include "fairdisc/nn.hpp"
#include "fairdisc/rng.hpp"
#include "fairdisc/tape.hpp"
#include "fairdisc/tensor.hpp"

namespace fairdisc::model {

// The six loss configurations compared in the ablation matrix.
enum class Variant {
    Baseline,        // deterministic target classifier only
    EntropyOnly,     // entropy penalty, no KL terms
    KLOrthOnly,      // KL terms with orthogonal priors, no entropy
    MultiTask,       // target + sensitive heads, no entropy, no KL
    EntropyKLShared, // entropy + KL with shared (equal) prior means
    Full,            // entropy + KL with orthogonal prior means
};

struct VariantTraits {
    bool sensitive_side; // sensitive branch + discriminator exist
    bool stochastic;     // log-std heads, reparameterized sampling, KL terms
    bool entropy;        // entropy-to-uniform penalty active
    bool orthogonal;     // orthogonal prior means (false: shared means)
};

VariantTraits variant_traits(Variant v);
Variant variant_from_string(const std::string& s);
const char* variant_name(Variant v);
std::vector<Variant> all_variants();

struct ModelConfig {
    std::size_t input_dim = 0;
    std::size_t code_dim = 2;
    std::vector<std::size_t> trunk_hidden{64};
    ad::Activation activation = ad::Activation::Relu;
    std::size_t target_classes = 2;
    std::size_t sensitive_classes = 2;
    std::vector<std::size_t> target_disc_hidden{};         // default: logistic regression
    std::vector<std::size_t> sensitive_disc_hidden{64, 64};
    Variant variant = Variant::Full;
    std::vector<double> prior_mean_target;    // empty: first basis vector
    std::vector<double> prior_mean_sensitive; // empty: second basis vector

    void validate() const;
    dist::PriorSpec target_prior() const;
    // Equal to target_prior() for shared-mean variants.
    dist::PriorSpec sensitive_prior() const;
};

struct LossWeights {
    double lambda_e = 0.0;
    double lambda_od = 0.0;
};

struct LossValues {
    double l_t = 0.0;
    double l_s = 0.0;
    double l_e = 0.0;
    double l_zt = 0.0;
    double l_zs = 0.0;
    double l_od = 0.0;
    double j = 0.0;
};

struct Batch {
    ad::Tensor x;                // [rows x input_dim]
    std::vector<std::size_t> y; // target labels in [0, n)
    std::vector<std::size_t> s; // sensitive labels in [0, m)
};

// Frozen standard-normal draws, one [rows x code_dim] tensor per Monte-Carlo
// sample and branch. Empty for deterministic variants.
struct Noise {
    std::vector<ad::Tensor> target;
    std::vector<ad::Tensor> sensitive;
};

struct ForwardOptions {
    Noise noise;
    // When true (default, production), the sensitive classification loss is
    // cut off from the shared trunk structurally, so a single backward pass
    // from J realizes the trunk-exclusion rule. When false the graph is
    // fully connected and the rule must be applied by masked harvesting.
    bool sensitive_trunk_firewall = true;
};

// Term scalars plus their graph handles; inactive terms report 0 and carry
// an invalid Var.
struct LossBreakdown {
    LossValues values;
    ad::Var t{}, s{}, e{}, zt{}, zs{}, od{}, j{};
    LossWeights weights;
    bool has_s = false;
    bool has_e = false;
    bool has_kl = false;
};

// Shared trunk, two variational branch heads, and two discriminators. Which
// pieces exist depends on the variant; parameter creation order is fixed and
// per-component seeded so shared components initialize identically across
// variants under the same seed.
class FairModel {
public:
    FairModel(const ModelConfig& config, std::uint64_t init_seed);

    FairModel(const FairModel&) = delete;
    FairModel& operator=(const FairModel&) = delete;
    FairModel(FairModel&&) = default;
    FairModel& operator=(FairModel&&) = default;

    const ModelConfig& config() const { return config_; }
    VariantTraits traits() const { return traits_; }
    std::uint64_t init_seed() const { return init_seed_; }

    nn::ParamStore& params() { return *store_; }
    const nn::ParamStore& params() const { return *store_; }
    std::vector<nn::Param*> trainable() { return store_->all(); }

    struct EncodeVars {
        ad::Var trunk_out{};
        ad::Var mu_t{}, logstd_t{};
        ad::Var mu_s{}, logstd_s{};
    };
    EncodeVars encode_on_tape(ad::Tape& tape, const nn::TapeBinding& bound, ad::Var x) const;

    Noise make_noise(std::size_t rows, std::size_t mc_samples, Rng& rng) const;

    LossBreakdown forward_losses(ad::Tape& tape, const nn::TapeBinding& bound, const Batch& batch,
                                 const LossWeights& weights, const ForwardOptions& opts) const;

    // Plain inference encode: posterior means and stds per row. std tensors
    // are empty for deterministic variants; mu_s/std_s empty without a
    // sensitive branch.
    struct Codes {
        ad::Tensor mu_t, std_t;
        ad::Tensor mu_s, std_s;
    };
    Codes encode(const ad::Tensor& x) const;

    // Plain class-probability heads (softmax outputs).
    ad::Tensor target_probs(const ad::Tensor& z) const;
    ad::Tensor sensitive_probs(const ad::Tensor& z) const;

    // FNV-1a over parameter names and value bits; used by freeze checks.
    std::uint64_t param_hash() const;

private:
    ad::Tensor trunk_plain(const ad::Tensor& x) const;
    ad::Var trunk_graph(ad::Tape& tape, const nn::TapeBinding& bound, ad::Var x) const;

    ModelConfig config_;
    VariantTraits traits_{};
    std::uint64_t init_seed_ = 0;
    std::unique_ptr<nn::ParamStore> store_;

    bool has_trunk_ = false;
    nn::MLP trunk_;
    nn::MLP target_mean_, target_logstd_;
    nn::MLP sensitive_mean_, sensitive_logstd_;
    nn::MLP target_disc_, sensitive_disc_;
};

// Production backward: one pass from J. Requires the graph to have been
// built with the trunk firewall; writes accumulated gradients into the
// parameter buffers.
void masked_backward(ad::Tape& tape, const nn::TapeBinding& bound, const LossBreakdown& lb);

// Verification route: one backward pass per active term, harvested with the
// term's lambda weight and with trunk gradients zeroed for the sensitive
// classification term. Works on graphs built with or without the firewall.
void masked_backward_per_term(ad::Tape& tape, const nn::TapeBinding& bound,
                              const LossBreakdown& lb);

// Checkpoint serialization: JSON header (format version, model config, init
// seed, parameter manifest) followed by raw little-endian float64 buffers.
void save_checkpoint(const std::string& path, const FairModel& model);
FairModel load_checkpoint(const std::string& path);

} // namespace fairdisc::model
