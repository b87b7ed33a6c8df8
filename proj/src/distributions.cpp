#include "fairdisc/distributions.hpp"

#include <cmath>

#include "fairdisc/errors.hpp"

namespace fairdisc::dist {

void DiagGaussian::validate() const {
    if (mean.size() != std.size()) {
        throw InvalidArgument("DiagGaussian: mean length " + std::to_string(mean.size()) +
                              " does not match std length " + std::to_string(std.size()));
    }
    for (double s : std) {
        if (!(s > 0.0)) throw InvalidArgument("DiagGaussian: std must be strictly positive");
    }
}

PriorSpec PriorSpec::basis(std::size_t dim, std::size_t axis) {
    if (axis >= dim) throw InvalidArgument("PriorSpec::basis: axis out of range");
    PriorSpec p;
    p.mean.assign(dim, 0.0);
    p.mean[axis] = 1.0;
    return p;
}

double PriorSpec::dot(const PriorSpec& other) const {
    if (mean.size() != other.mean.size()) {
        throw InvalidArgument("PriorSpec::dot: dimension mismatch");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) d += mean[i] * other.mean[i];
    return d;
}

double PriorSpec::norm() const {
    double d = 0.0;
    for (double x : mean) d += x * x;
    return std::sqrt(d);
}

void validate_orthonormal_pair(const PriorSpec& target, const PriorSpec& sensitive, double tol) {
    if (std::abs(target.norm() - 1.0) > tol || std::abs(sensitive.norm() - 1.0) > tol) {
        throw ConfigError("prior means must have unit norm");
    }
    if (std::abs(target.dot(sensitive)) > tol) {
        throw ConfigError("target and sensitive prior means must be orthogonal");
    }
}

double kl_to_prior(const DiagGaussian& post, const PriorSpec& prior) {
    post.validate();
    if (post.mean.size() != prior.mean.size()) {
        throw InvalidArgument("kl_to_prior: posterior dim " + std::to_string(post.mean.size()) +
                              " does not match prior dim " + std::to_string(prior.mean.size()));
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < post.mean.size(); ++i) {
        const double var = post.std[i] * post.std[i];
        const double dm = post.mean[i] - prior.mean[i];
        kl += var + dm * dm - 1.0 - std::log(var);
    }
    return 0.5 * kl;
}

std::vector<double> reparam_sample(const DiagGaussian& post, const std::vector<double>& noise) {
    post.validate();
    if (noise.size() != post.mean.size()) {
        throw InvalidArgument("reparam_sample: noise length " + std::to_string(noise.size()) +
                              " does not match dim " + std::to_string(post.mean.size()));
    }
    std::vector<double> z(post.mean.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = post.mean[i] + post.std[i] * noise[i];
    return z;
}

namespace {

void check_normalized(const std::vector<double>& probs, double tol, const char* op) {
    if (probs.empty()) throw InvalidArgument(std::string(op) + ": empty distribution");
    double sum = 0.0;
    for (double p : probs) sum += p;
    if (std::abs(sum - 1.0) > tol) {
        throw InvalidArgument(std::string(op) + ": probabilities sum to " + std::to_string(sum) +
                              ", outside tolerance " + std::to_string(tol));
    }
}

} // namespace

double neg_entropy(const std::vector<double>& probs, double tol) {
    check_normalized(probs, tol, "neg_entropy");
    double acc = 0.0;
    for (double p : probs) {
        const double pc = std::max(p, kProbFloor);
        acc += pc * std::log(pc);
    }
    return acc;
}

double kl_to_uniform(const std::vector<double>& probs, double tol) {
    check_normalized(probs, tol, "kl_to_uniform");
    return std::log(static_cast<double>(probs.size())) + neg_entropy(probs, tol);
}

ad::Var kl_to_prior_node(ad::Tape& tape, ad::Var mu, ad::Var logstd, const PriorSpec& prior) {
    const ad::Tensor& mv = mu.value();
    if (mv.rank() != 2 || mv.cols() != prior.mean.size()) {
        throw InvalidArgument("kl_to_prior_node: mu " + mv.shape_str() + " does not match prior dim " +
                              std::to_string(prior.mean.size()));
    }
    if (!logstd.value().same_shape(mv)) {
        throw InvalidArgument("kl_to_prior_node: logstd shape " + logstd.value().shape_str() +
                              " does not match mu " + mv.shape_str());
    }
    ad::Var ls = tape.clamp(logstd, kLogStdMin, kLogStdMax);
    ad::Var var = tape.exp(tape.scale(ls, 2.0));                  // sigma^2
    ad::Var m = tape.leaf(ad::Tensor::vec(prior.mean));
    ad::Var dm = tape.sub(mu, m);
    ad::Var sq = tape.mul(dm, dm);
    // 0.5 * (sigma^2 + (mu - m)^2 - 1 - 2*logstd), summed over dims
    ad::Var inner = tape.add_const(tape.sub(tape.add(var, sq), tape.scale(ls, 2.0)), -1.0);
    ad::Var per_sample = tape.reduce(inner, ad::ReduceOp::Sum, 1);
    return tape.scale(tape.reduce(per_sample, ad::ReduceOp::Mean), 0.5);
}

ad::Var reparam_sample_node(ad::Tape& tape, ad::Var mu, ad::Var logstd, const ad::Tensor& noise) {
    if (!noise.same_shape(mu.value())) {
        throw InvalidArgument("reparam_sample_node: noise " + noise.shape_str() +
                              " does not match mu " + mu.value().shape_str());
    }
    ad::Var sigma = tape.exp(tape.clamp(logstd, kLogStdMin, kLogStdMax));
    ad::Var eps = tape.leaf(noise); // constant; gradients stop here
    return tape.add(mu, tape.mul(sigma, eps));
}

ad::Var neg_entropy_node(ad::Tape& tape, ad::Var logits) {
    ad::Var probs = tape.softmax(logits);
    ad::Var logp = tape.log_clamped(probs, kProbFloor);
    ad::Var per_sample = tape.reduce(tape.mul(probs, logp), ad::ReduceOp::Sum, 1);
    return tape.reduce(per_sample, ad::ReduceOp::Mean);
}

} // namespace fairdisc::dist
