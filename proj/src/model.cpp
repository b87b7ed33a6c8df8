#include "fairdisc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fairdisc/errors.hpp"

namespace fairdisc::model {

namespace {

// Fixed stream tags so shared components draw identical init values across
// variants under the same seed; a Baseline and a Full model with one seed
// start from the same trunk.
constexpr std::uint64_t kStreamTrunk = 1;
constexpr std::uint64_t kStreamTargetMean = 2;
constexpr std::uint64_t kStreamTargetLogStd = 3;
constexpr std::uint64_t kStreamSensitiveMean = 4;
constexpr std::uint64_t kStreamSensitiveLogStd = 5;
constexpr std::uint64_t kStreamTargetDisc = 6;
constexpr std::uint64_t kStreamSensitiveDisc = 7;

ad::Tensor apply_activation(ad::Tensor t, ad::Activation a) {
    for (double& v : t.data())
        v = (a == ad::Activation::Relu) ? std::max(0.0, v) : std::tanh(v);
    return t;
}

ad::Tensor exp_clamped(ad::Tensor logstd) {
    for (double& v : logstd.data())
        v = std::exp(std::clamp(v, dist::kLogStdMin, dist::kLogStdMax));
    return logstd;
}

ad::Tensor softmax_rows(ad::Tensor logits) {
    const std::size_t r = logits.rows(), c = logits.cols();
    for (std::size_t i = 0; i < r; ++i) {
        double mx = logits.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            double e = std::exp(logits.at(i, j) - mx);
            logits.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < c; ++j) logits.at(i, j) /= sum;
    }
    return logits;
}

} // namespace

VariantTraits variant_traits(Variant v) {
    switch (v) {
    case Variant::Baseline:        return {false, false, false, false};
    case Variant::EntropyOnly:     return {true, false, true, false};
    case Variant::KLOrthOnly:      return {true, true, false, true};
    case Variant::MultiTask:       return {true, false, false, false};
    case Variant::EntropyKLShared: return {true, true, true, false};
    case Variant::Full:            return {true, true, true, true};
    }
    throw InvalidArgument("unknown variant value");
}

const char* variant_name(Variant v) {
    switch (v) {
    case Variant::Baseline:        return "baseline";
    case Variant::EntropyOnly:     return "entropy-only";
    case Variant::KLOrthOnly:      return "kl-orth-only";
    case Variant::MultiTask:       return "multi-task";
    case Variant::EntropyKLShared: return "entropy-kl-shared";
    case Variant::Full:            return "full";
    }
    throw InvalidArgument("unknown variant value");
}

std::vector<Variant> all_variants() {
    return {Variant::Baseline,  Variant::EntropyOnly,     Variant::KLOrthOnly,
            Variant::MultiTask, Variant::EntropyKLShared, Variant::Full};
}

Variant variant_from_string(const std::string& s) {
    for (Variant v : all_variants())
        if (s == variant_name(v)) return v;
    throw ConfigError("unknown variant '" + s +
                      "'; expected one of baseline, entropy-only, kl-orth-only, "
                      "multi-task, entropy-kl-shared, full");
}

void ModelConfig::validate() const {
    if (input_dim == 0) throw ConfigError("model: input_dim must be positive");
    if (code_dim == 0) throw ConfigError("model: code_dim must be positive");
    if (target_classes < 2) throw ConfigError("model: target_classes must be at least 2");
    if (sensitive_classes < 2) throw ConfigError("model: sensitive_classes must be at least 2");
    for (std::size_t w : trunk_hidden)
        if (w == 0) throw ConfigError("model: trunk_hidden widths must be positive");
    for (std::size_t w : target_disc_hidden)
        if (w == 0) throw ConfigError("model: target_disc_hidden widths must be positive");
    for (std::size_t w : sensitive_disc_hidden)
        if (w == 0) throw ConfigError("model: sensitive_disc_hidden widths must be positive");
    if (!prior_mean_target.empty() && prior_mean_target.size() != code_dim)
        throw ConfigError("model: prior_mean_target has " + std::to_string(prior_mean_target.size()) +
                          " entries, code_dim is " + std::to_string(code_dim));
    if (!prior_mean_sensitive.empty() && prior_mean_sensitive.size() != code_dim)
        throw ConfigError("model: prior_mean_sensitive has " +
                          std::to_string(prior_mean_sensitive.size()) + " entries, code_dim is " +
                          std::to_string(code_dim));
    const VariantTraits tr = variant_traits(variant);
    if (tr.stochastic && tr.orthogonal) {
        if (code_dim < 2)
            throw ConfigError("model: orthogonal prior means require code_dim >= 2");
        dist::validate_orthonormal_pair(target_prior(), sensitive_prior());
    }
}

dist::PriorSpec ModelConfig::target_prior() const {
    if (!prior_mean_target.empty()) return dist::PriorSpec{prior_mean_target};
    return dist::PriorSpec::basis(code_dim, 0);
}

dist::PriorSpec ModelConfig::sensitive_prior() const {
    if (!variant_traits(variant).orthogonal) return target_prior();
    if (!prior_mean_sensitive.empty()) return dist::PriorSpec{prior_mean_sensitive};
    return dist::PriorSpec::basis(code_dim, 1);
}

FairModel::FairModel(const ModelConfig& config, std::uint64_t init_seed)
    : config_(config),
      traits_(variant_traits(config.variant)),
      init_seed_(init_seed),
      store_(std::make_unique<nn::ParamStore>()) {
    config_.validate();
    const Rng base(init_seed);
    const std::size_t trunk_out =
        config_.trunk_hidden.empty() ? config_.input_dim : config_.trunk_hidden.back();

    if (!config_.trunk_hidden.empty()) {
        nn::MLPSpec spec;
        spec.input_dim = config_.input_dim;
        spec.hidden.assign(config_.trunk_hidden.begin(), config_.trunk_hidden.end() - 1);
        spec.output_dim = config_.trunk_hidden.back();
        spec.activation = config_.activation;
        Rng r = base.fork(kStreamTrunk);
        trunk_ = nn::MLP::create(*store_, "trunk", nn::Partition::Trunk, spec, r);
        has_trunk_ = true;
    }

    nn::MLPSpec head;
    head.input_dim = trunk_out;
    head.output_dim = config_.code_dim;
    head.activation = config_.activation;
    {
        Rng r = base.fork(kStreamTargetMean);
        target_mean_ = nn::MLP::create(*store_, "target.mu", nn::Partition::TargetBranch, head, r);
    }
    if (traits_.stochastic) {
        Rng r = base.fork(kStreamTargetLogStd);
        target_logstd_ =
            nn::MLP::create(*store_, "target.logstd", nn::Partition::TargetBranch, head, r);
    }
    if (traits_.sensitive_side) {
        Rng r = base.fork(kStreamSensitiveMean);
        sensitive_mean_ =
            nn::MLP::create(*store_, "sensitive.mu", nn::Partition::SensitiveBranch, head, r);
        if (traits_.stochastic) {
            Rng r2 = base.fork(kStreamSensitiveLogStd);
            sensitive_logstd_ = nn::MLP::create(*store_, "sensitive.logstd",
                                                nn::Partition::SensitiveBranch, head, r2);
        }
    }
    {
        nn::MLPSpec spec;
        spec.input_dim = config_.code_dim;
        spec.hidden = config_.target_disc_hidden;
        spec.output_dim = config_.target_classes;
        spec.activation = config_.activation;
        Rng r = base.fork(kStreamTargetDisc);
        target_disc_ = nn::MLP::create(*store_, "disc.target", nn::Partition::TargetDisc, spec, r);
    }
    if (traits_.sensitive_side) {
        nn::MLPSpec spec;
        spec.input_dim = config_.code_dim;
        spec.hidden = config_.sensitive_disc_hidden;
        spec.output_dim = config_.sensitive_classes;
        spec.activation = config_.activation;
        Rng r = base.fork(kStreamSensitiveDisc);
        sensitive_disc_ =
            nn::MLP::create(*store_, "disc.sensitive", nn::Partition::SensitiveDisc, spec, r);
    }
}

ad::Var FairModel::trunk_graph(ad::Tape& tape, const nn::TapeBinding& bound, ad::Var x) const {
    if (!has_trunk_) return x;
    return tape.activate(trunk_.forward(tape, bound, x), config_.activation);
}

ad::Tensor FairModel::trunk_plain(const ad::Tensor& x) const {
    if (!has_trunk_) return x;
    return apply_activation(trunk_.forward_plain(x), config_.activation);
}

FairModel::EncodeVars FairModel::encode_on_tape(ad::Tape& tape, const nn::TapeBinding& bound,
                                                ad::Var x) const {
    EncodeVars out;
    out.trunk_out = trunk_graph(tape, bound, x);
    out.mu_t = target_mean_.forward(tape, bound, out.trunk_out);
    if (traits_.stochastic)
        out.logstd_t = target_logstd_.forward(tape, bound, out.trunk_out);
    if (traits_.sensitive_side) {
        out.mu_s = sensitive_mean_.forward(tape, bound, out.trunk_out);
        if (traits_.stochastic)
            out.logstd_s = sensitive_logstd_.forward(tape, bound, out.trunk_out);
    }
    return out;
}

Noise FairModel::make_noise(std::size_t rows, std::size_t mc_samples, Rng& rng) const {
    Noise n;
    if (!traits_.stochastic) return n;
    if (rows == 0 || mc_samples == 0)
        throw InvalidArgument("make_noise: rows and mc_samples must be positive");
    const std::size_t d = config_.code_dim;
    for (std::size_t j = 0; j < mc_samples; ++j)
        n.target.push_back(ad::Tensor::from({rows, d}, rng.normal_vec(rows * d)));
    for (std::size_t j = 0; j < mc_samples; ++j)
        n.sensitive.push_back(ad::Tensor::from({rows, d}, rng.normal_vec(rows * d)));
    return n;
}

LossBreakdown FairModel::forward_losses(ad::Tape& tape, const nn::TapeBinding& bound,
                                        const Batch& batch, const LossWeights& weights,
                                        const ForwardOptions& opts) const {
    if (batch.x.rank() != 2)
        throw InvalidArgument("forward_losses: batch.x must be rank 2, got shape " +
                              batch.x.shape_str());
    const std::size_t rows = batch.x.rows();
    if (rows == 0) throw InvalidArgument("forward_losses: empty batch");
    if (batch.x.cols() != config_.input_dim)
        throw InvalidArgument("forward_losses: batch width " + std::to_string(batch.x.cols()) +
                              " does not match input_dim " + std::to_string(config_.input_dim));
    if (batch.y.size() != rows)
        throw InvalidArgument("forward_losses: y has " + std::to_string(batch.y.size()) +
                              " labels for " + std::to_string(rows) + " rows");
    for (std::size_t c : batch.y)
        if (c >= config_.target_classes)
            throw InvalidArgument("forward_losses: target label " + std::to_string(c) +
                                  " out of range for " + std::to_string(config_.target_classes) +
                                  " classes");
    if (traits_.sensitive_side) {
        if (batch.s.size() != rows)
            throw InvalidArgument("forward_losses: s has " + std::to_string(batch.s.size()) +
                                  " labels for " + std::to_string(rows) + " rows");
        for (std::size_t c : batch.s)
            if (c >= config_.sensitive_classes)
                throw InvalidArgument("forward_losses: sensitive label " + std::to_string(c) +
                                      " out of range for " +
                                      std::to_string(config_.sensitive_classes) + " classes");
    }

    std::size_t mc = 1;
    if (traits_.stochastic) {
        mc = opts.noise.target.size();
        if (mc == 0)
            throw InvalidArgument("forward_losses: stochastic variant needs noise draws");
        if (opts.noise.sensitive.size() != mc)
            throw InvalidArgument("forward_losses: noise sample counts differ between branches");
        for (const auto& eps : opts.noise.target)
            if (eps.rank() != 2 || eps.rows() != rows || eps.cols() != config_.code_dim)
                throw InvalidArgument("forward_losses: target noise shape " + eps.shape_str() +
                                      " does not match batch");
        for (const auto& eps : opts.noise.sensitive)
            if (eps.rank() != 2 || eps.rows() != rows || eps.cols() != config_.code_dim)
                throw InvalidArgument("forward_losses: sensitive noise shape " + eps.shape_str() +
                                      " does not match batch");
    }

    LossBreakdown lb;
    lb.weights = weights;
    lb.has_s = traits_.sensitive_side;
    lb.has_e = traits_.entropy;
    lb.has_kl = traits_.stochastic;

    ad::Var x = tape.leaf(batch.x, false);
    EncodeVars enc = encode_on_tape(tape, bound, x);

    if (lb.has_kl) {
        lb.zt = dist::kl_to_prior_node(tape, enc.mu_t, enc.logstd_t, config_.target_prior());
        lb.zs = dist::kl_to_prior_node(tape, enc.mu_s, enc.logstd_s, config_.sensitive_prior());
        lb.od = lb.zt + lb.zs;
    }

    // Target code path: classification loss on the sampled code, and the
    // entropy penalty from running the sensitive discriminator on the same
    // samples.
    {
        ad::Var ce_sum{}, ent_sum{};
        for (std::size_t j = 0; j < mc; ++j) {
            ad::Var z = traits_.stochastic
                            ? dist::reparam_sample_node(tape, enc.mu_t, enc.logstd_t,
                                                        opts.noise.target[j])
                            : enc.mu_t;
            ad::Var ce = nn::cross_entropy_mean(tape, target_disc_.forward(tape, bound, z), batch.y);
            ce_sum = ce_sum.valid() ? ce_sum + ce : ce;
            if (lb.has_e) {
                ad::Var ent = dist::neg_entropy_node(tape, sensitive_disc_.forward(tape, bound, z));
                ent_sum = ent_sum.valid() ? ent_sum + ent : ent;
            }
        }
        lb.t = mc > 1 ? tape.scale(ce_sum, 1.0 / double(mc)) : ce_sum;
        if (lb.has_e) lb.e = mc > 1 ? tape.scale(ent_sum, 1.0 / double(mc)) : ent_sum;
    }

    // Sensitive classification path. With the firewall up, the branch is
    // re-derived from a detached trunk output, so this loss reaches the
    // branch heads and the sensitive discriminator but never the trunk.
    if (lb.has_s) {
        ad::Var h = opts.sensitive_trunk_firewall ? tape.detach(enc.trunk_out) : enc.trunk_out;
        ad::Var mu = sensitive_mean_.forward(tape, bound, h);
        ad::Var logstd{};
        if (traits_.stochastic) logstd = sensitive_logstd_.forward(tape, bound, h);
        ad::Var ce_sum{};
        for (std::size_t j = 0; j < mc; ++j) {
            ad::Var z = traits_.stochastic
                            ? dist::reparam_sample_node(tape, mu, logstd, opts.noise.sensitive[j])
                            : mu;
            ad::Var ce = nn::cross_entropy_mean(tape, sensitive_disc_.forward(tape, bound, z), batch.s);
            ce_sum = ce_sum.valid() ? ce_sum + ce : ce;
        }
        lb.s = mc > 1 ? tape.scale(ce_sum, 1.0 / double(mc)) : ce_sum;
    }

    ad::Var j = lb.t;
    if (lb.has_s) j = j + lb.s;
    if (lb.has_e) j = j + tape.scale(lb.e, weights.lambda_e);
    if (lb.has_kl) j = j + tape.scale(lb.od, weights.lambda_od);
    lb.j = j;

    auto take = [](ad::Var v, const char* name) {
        if (!v.valid()) return 0.0;
        const double val = v.value()[0];
        if (!std::isfinite(val))
            throw NumericError(std::string("loss term ") + name + " is not finite");
        return val;
    };
    lb.values.l_t = take(lb.t, "L_T");
    lb.values.l_s = take(lb.s, "L_S");
    lb.values.l_e = take(lb.e, "L_E");
    lb.values.l_zt = take(lb.zt, "L_zT");
    lb.values.l_zs = take(lb.zs, "L_zS");
    lb.values.l_od = take(lb.od, "L_OD");
    lb.values.j = take(lb.j, "J");
    return lb;
}

FairModel::Codes FairModel::encode(const ad::Tensor& x) const {
    if (x.rank() != 2)
        throw InvalidArgument("encode: input must be rank 2, got shape " + x.shape_str());
    if (x.cols() != config_.input_dim)
        throw InvalidArgument("encode: input width " + std::to_string(x.cols()) +
                              " does not match input_dim " + std::to_string(config_.input_dim));
    const ad::Tensor h = trunk_plain(x);
    Codes c;
    c.mu_t = target_mean_.forward_plain(h);
    if (traits_.stochastic) c.std_t = exp_clamped(target_logstd_.forward_plain(h));
    if (traits_.sensitive_side) {
        c.mu_s = sensitive_mean_.forward_plain(h);
        if (traits_.stochastic) c.std_s = exp_clamped(sensitive_logstd_.forward_plain(h));
    }
    return c;
}

ad::Tensor FairModel::target_probs(const ad::Tensor& z) const {
    return softmax_rows(target_disc_.forward_plain(z));
}

ad::Tensor FairModel::sensitive_probs(const ad::Tensor& z) const {
    if (!traits_.sensitive_side)
        throw InvalidArgument(std::string("variant ") + variant_name(config_.variant) +
                              " has no sensitive discriminator");
    return softmax_rows(sensitive_disc_.forward_plain(z));
}

std::uint64_t FairModel::param_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const nn::Param* p : store_->all()) {
        mix(p->name.data(), p->name.size());
        for (double v : p->value.data()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            mix(&bits, sizeof bits);
        }
    }
    return h;
}

void masked_backward(ad::Tape& tape, const nn::TapeBinding& bound, const LossBreakdown& lb) {
    tape.backward(lb.j);
    bound.harvest();
}

void masked_backward_per_term(ad::Tape& tape, const nn::TapeBinding& bound,
                              const LossBreakdown& lb) {
    tape.backward(lb.t);
    bound.harvest();
    if (lb.has_s) {
        tape.backward(lb.s);
        bound.harvest_masked(1.0, [](nn::Partition p) { return p == nn::Partition::Trunk; });
    }
    if (lb.has_e) {
        tape.backward(lb.e);
        bound.harvest(lb.weights.lambda_e);
    }
    if (lb.has_kl) {
        tape.backward(lb.od);
        bound.harvest(lb.weights.lambda_od);
    }
}

} // namespace fairdisc::model
