#include "fairdisc/nn.hpp"

#include <cmath>

#include "fairdisc/errors.hpp"

namespace fairdisc::nn {

const char* partition_name(Partition p) {
    switch (p) {
        case Partition::Trunk: return "trunk";
        case Partition::TargetBranch: return "target_branch";
        case Partition::SensitiveBranch: return "sensitive_branch";
        case Partition::TargetDisc: return "target_disc";
        case Partition::SensitiveDisc: return "sensitive_disc";
    }
    return "?";
}

void Param::zero_grad() {
    grad.fill(0.0);
    grad_valid = false;
}

Param& ParamStore::create(std::string name, Partition partition, ad::Tensor init) {
    for (const Param& p : params_) {
        if (p.name == name) throw InvalidArgument("ParamStore: duplicate parameter name " + name);
    }
    Param p;
    p.name = std::move(name);
    p.partition = partition;
    p.grad = ad::Tensor::zeros(init.shape());
    p.value = std::move(init);
    params_.push_back(std::move(p));
    return params_.back();
}

std::vector<Param*> ParamStore::all() {
    std::vector<Param*> out;
    out.reserve(params_.size());
    for (Param& p : params_) out.push_back(&p);
    return out;
}

std::vector<const Param*> ParamStore::all() const {
    std::vector<const Param*> out;
    out.reserve(params_.size());
    for (const Param& p : params_) out.push_back(&p);
    return out;
}

std::vector<Param*> ParamStore::in_partition(Partition part) {
    std::vector<Param*> out;
    for (Param& p : params_) {
        if (p.partition == part) out.push_back(&p);
    }
    return out;
}

void ParamStore::zero_grads() {
    for (Param& p : params_) p.zero_grad();
}

void MLPSpec::validate() const {
    if (input_dim == 0) throw ConfigError("MLPSpec: input width must be positive");
    if (output_dim == 0) throw ConfigError("MLPSpec: output width must be positive");
    for (std::size_t w : hidden) {
        if (w == 0) throw ConfigError("MLPSpec: hidden widths must be positive");
    }
}

MLP MLP::create(ParamStore& store, const std::string& prefix, Partition partition,
                const MLPSpec& spec, Rng& rng) {
    spec.validate();
    MLP mlp;
    mlp.spec_ = spec;
    std::size_t in = spec.input_dim;
    std::vector<std::size_t> widths = spec.hidden;
    widths.push_back(spec.output_dim);
    for (std::size_t l = 0; l < widths.size(); ++l) {
        const std::size_t out = widths[l];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        ad::Tensor w = ad::Tensor::zeros({in, out});
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
        Param& wp = store.create(prefix + ".w" + std::to_string(l), partition, std::move(w));
        Param& bp = store.create(prefix + ".b" + std::to_string(l), partition,
                                 ad::Tensor::zeros({out}));
        mlp.layers_.emplace_back(&wp, &bp);
        in = out;
    }
    return mlp;
}

ad::Var MLP::forward(ad::Tape& tape, const TapeBinding& bound, ad::Var x) const {
    if (x.value().rank() != 2 || x.value().cols() != spec_.input_dim) {
        throw InvalidArgument("MLP::forward: input " + x.value().shape_str() + " does not match width " +
                              std::to_string(spec_.input_dim));
    }
    ad::Var h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        h = tape.affine(h, bound[*layers_[l].first], bound[*layers_[l].second]);
        if (l + 1 < layers_.size()) h = tape.activate(h, spec_.activation);
    }
    return h;
}

ad::Tensor MLP::forward_plain(const ad::Tensor& x) const {
    if (x.rank() != 2 || x.cols() != spec_.input_dim) {
        throw InvalidArgument("MLP::forward_plain: input " + x.shape_str() + " does not match width " +
                              std::to_string(spec_.input_dim));
    }
    ad::Tensor h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const ad::Tensor& w = layers_[l].first->value;
        const ad::Tensor& b = layers_[l].second->value;
        const std::size_t r = h.rows(), k = h.cols(), c = w.cols();
        ad::Tensor out = ad::Tensor::zeros({r, c});
        for (std::size_t i = 0; i < r; ++i) {
            const double* hrow = h.raw() + i * k;
            double* orow = out.raw() + i * c;
            for (std::size_t j = 0; j < c; ++j) orow[j] = b[j];
            for (std::size_t p = 0; p < k; ++p) {
                const double hp = hrow[p];
                const double* wrow = w.raw() + p * c;
                for (std::size_t j = 0; j < c; ++j) orow[j] += hp * wrow[j];
            }
        }
        if (l + 1 < layers_.size()) {
            if (spec_.activation == ad::Activation::Relu) {
                for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
            } else {
                for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
            }
        }
        h = std::move(out);
    }
    return h;
}

TapeBinding::TapeBinding(ad::Tape& tape, const std::vector<Param*>& params) : tape_(&tape) {
    bound_.reserve(params.size());
    for (Param* p : params) {
        bound_.emplace_back(p, tape.leaf(p->value, true));
    }
}

ad::Var TapeBinding::operator[](const Param& p) const {
    for (const auto& [param, var] : bound_) {
        if (param == &p) return var;
    }
    throw InvalidArgument("TapeBinding: parameter " + p.name + " is not mounted on this tape");
}

void TapeBinding::harvest(double weight) const {
    harvest_masked(weight, [](Partition) { return false; });
}

void TapeBinding::harvest_masked(double weight, const std::function<bool(Partition)>& masked) const {
    for (const auto& [param, var] : bound_) {
        param->grad_valid = true;
        if (masked(param->partition)) continue;
        const ad::Tensor& g = tape_->grad(var);
        for (std::size_t i = 0; i < g.size(); ++i) param->grad[i] += weight * g[i];
    }
}

ad::Var cross_entropy_mean(ad::Tape& tape, ad::Var logits, const std::vector<std::size_t>& labels) {
    ad::Var picked = tape.pick(tape.log_softmax(logits), labels);
    return tape.scale(tape.reduce(picked, ad::ReduceOp::Mean), -1.0);
}

Adam::Adam(std::vector<Param*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    slots_.reserve(params_.size());
    for (Param* p : params_) {
        slots_.push_back({ad::Tensor::zeros(p->value.shape()), ad::Tensor::zeros(p->value.shape())});
    }
}

void Adam::step() {
    for (Param* p : params_) {
        if (!p->grad_valid) {
            throw InvalidArgument("Adam::step: parameter " + p->name +
                                  " has no gradient; run a backward pass first");
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Param& p = *params_[k];
        Slot& s = slots_[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            double g = p.grad[i];
            if (config_.weight_decay != 0.0 && !config_.decoupled_decay) {
                g += config_.weight_decay * p.value[i];
            }
            s.m[i] = config_.beta1 * s.m[i] + (1.0 - config_.beta1) * g;
            s.v[i] = config_.beta2 * s.v[i] + (1.0 - config_.beta2) * g * g;
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            double update = config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
            if (config_.weight_decay != 0.0 && config_.decoupled_decay) {
                update += config_.lr * config_.weight_decay * p.value[i];
            }
            p.value[i] -= update;
        }
        p.zero_grad();
    }
}

} // namespace fairdisc::nn
