#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairdisc/rng.hpp"
#include "fairdisc/tape.hpp"
#include "fairdisc/tensor.hpp"

namespace fairdisc::nn {

// Parameter partitions. Trunk is the shared encoder body; the branches are
// the per-code projection heads; the discriminators are the two classifier
// stacks. Every trainable parameter belongs to exactly one partition.
enum class Partition : std::uint8_t {
    Trunk,
    TargetBranch,
    SensitiveBranch,
    TargetDisc,
    SensitiveDisc,
};

const char* partition_name(Partition p);

struct Param {
    std::string name;
    Partition partition;
    ad::Tensor value;
    ad::Tensor grad;       // accumulation buffer consumed by the optimizer
    bool grad_valid = false;

    void zero_grad();
};

// Owns all parameters of one model. Addresses are stable.
class ParamStore {
public:
    Param& create(std::string name, Partition partition, ad::Tensor init);

    std::vector<Param*> all();
    std::vector<const Param*> all() const;
    std::vector<Param*> in_partition(Partition p);
    std::size_t size() const { return params_.size(); }

    void zero_grads();

private:
    std::deque<Param> params_;
};

struct MLPSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;      // hidden layer widths
    std::size_t output_dim = 0;
    ad::Activation activation = ad::Activation::Relu;

    void validate() const;
};

// Feed-forward stack: affine + activation per hidden layer, then a final
// affine with no activation. Weights init uniform in +-1/sqrt(fan_in),
// biases zero.
class MLP {
public:
    static MLP create(ParamStore& store, const std::string& prefix, Partition partition,
                      const MLPSpec& spec, Rng& rng);

    const MLPSpec& spec() const { return spec_; }
    const std::vector<std::pair<Param*, Param*>>& layers() const { return layers_; }

    // Graph-building forward; parameters must be mounted in `bound`.
    ad::Var forward(ad::Tape& tape, const class TapeBinding& bound, ad::Var x) const;

    // Plain forward for inference paths (no tape, no gradients).
    ad::Tensor forward_plain(const ad::Tensor& x) const;

private:
    MLPSpec spec_;
    std::vector<std::pair<Param*, Param*>> layers_; // (weight, bias)
};

// Mounts a parameter set onto one tape as gradient-bearing leaves, and
// harvests tape gradients back into the Param buffers after backward.
class TapeBinding {
public:
    TapeBinding(ad::Tape& tape, const std::vector<Param*>& params);

    ad::Var operator[](const Param& p) const;
    ad::Tape& tape() const { return *tape_; }

    // grad[p] += weight * tape-grad[p], skipping partitions where mask
    // returns true. Marks every bound parameter's grad as populated.
    void harvest(double weight = 1.0) const;
    void harvest_masked(double weight, const std::function<bool(Partition)>& masked) const;

private:
    ad::Tape* tape_;
    std::vector<std::pair<Param*, ad::Var>> bound_;
};

// Batch-mean cross entropy from logits: mean_i -log softmax(logits)[i, labels[i]].
ad::Var cross_entropy_mean(ad::Tape& tape, ad::Var logits, const std::vector<std::size_t>& labels);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    bool decoupled_decay = false; // default: coupled L2 added to the gradient
};

// Adam with bias correction. Weight decay is coupled L2 by default (the
// decay term joins the gradient before the moment updates); the decoupled
// variant applies it directly to the parameter instead.
class Adam {
public:
    Adam(std::vector<Param*> params, AdamConfig config);

    // Consumes Param::grad for every managed parameter; each must have been
    // populated since the previous step.
    void step();

    std::uint64_t steps() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    struct Slot {
        ad::Tensor m;
        ad::Tensor v;
    };

    std::vector<Param*> params_;
    std::vector<Slot> slots_;
    AdamConfig config_;
    std::uint64_t t_ = 0;
};

} // namespace fairdisc::nn
