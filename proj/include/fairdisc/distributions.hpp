#pragma once

#include <cstddef>
#include <vector>

#include "fairdisc/tape.hpp"
#include "fairdisc/tensor.hpp"

namespace fairdisc::dist {

// Clamp floor applied to probabilities before any log.
inline constexpr double kProbFloor = 1e-12;

// Clamp range for the unconstrained log-std head output.
inline constexpr double kLogStdMin = -10.0;
inline constexpr double kLogStdMax = 10.0;

// Diagonal Gaussian q(z|x) = N(mean, diag(std^2)).
struct DiagGaussian {
    std::vector<double> mean;
    std::vector<double> std;

    void validate() const; // equal lengths, std > 0
};

// Fixed prior N(mean, I). Orthogonality between the target and sensitive
// prior means is what pulls the two posteriors into orthogonal subspaces.
struct PriorSpec {
    std::vector<double> mean;

    static PriorSpec basis(std::size_t dim, std::size_t axis); // unit vector e_axis
    double dot(const PriorSpec& other) const;
    double norm() const;
};

// Checks m_T . m_S == 0 and unit norms (within tol); throws ConfigError.
void validate_orthonormal_pair(const PriorSpec& target, const PriorSpec& sensitive,
                               double tol = 1e-9);

// KL( N(mean, diag(std^2)) || N(prior_mean, I) )
//   = 0.5 * sum_i( std_i^2 + (mean_i - m_i)^2 - 1 - ln std_i^2 )
double kl_to_prior(const DiagGaussian& post, const PriorSpec& prior);

// z = mean + std * eps, eps ~ N(0, I) supplied by the caller.
std::vector<double> reparam_sample(const DiagGaussian& post, const std::vector<double>& noise);

// sum_j q_j ln(clamp(q_j)); in [-ln m, 0], minimized at the uniform
// distribution. probs must sum to 1 within tol.
double neg_entropy(const std::vector<double>& probs, double tol = 1e-6);

// KL(q || U) = ln m + neg_entropy(q); zero iff q is uniform.
double kl_to_uniform(const std::vector<double>& probs, double tol = 1e-6);

// ---- graph-building forms (batch means over rank-2 inputs) ----

// mu, logstd: [batch x d]; prior_mean: length d. Returns the batch mean of
// the per-sample closed-form KL. logstd is clamped to [kLogStdMin, kLogStdMax]
// before exponentiation.
ad::Var kl_to_prior_node(ad::Tape& tape, ad::Var mu, ad::Var logstd, const PriorSpec& prior);

// z = mu + exp(clamp(logstd)) * eps with eps entering as a constant leaf.
ad::Var reparam_sample_node(ad::Tape& tape, ad::Var mu, ad::Var logstd, const ad::Tensor& noise);

// Batch mean of sum_j q_j ln(clamp(q_j)) where q = softmax(logits) row-wise.
ad::Var neg_entropy_node(ad::Tape& tape, ad::Var logits);

} // namespace fairdisc::dist
