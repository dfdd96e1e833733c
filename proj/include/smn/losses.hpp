#pragma once

#include "smn/model.hpp"

namespace smn {

// kendall: ½(lc/δc² + ls/δs²) + log δc + log δs + l1
// raw_clamped: ½(lc/δc² + ls/δs²) + l1 with δ clamped to [0.1, 10]
enum class WeightingMode { kendall, raw_clamped };

struct LossConfig {
  Scalar gamma_pos = 3.0;
  Scalar gamma_neg = 2.0;
  Scalar margin = 0.05;
  Scalar lambda = 0.001;
  WeightingMode weighting = WeightingMode::kendall;

  void validate() const;
};

struct LossReport {
  Scalar classification = 0;
  Scalar spatial = 0;
  Scalar l1 = 0;
  Scalar fused = 0;
  Scalar delta_c = 1;
  Scalar delta_s = 1;
};

inline constexpr Scalar kProbClamp = 1e-12;

/// Asymmetric loss of a single probability. p is clamped to [1e-12, 1-1e-12].
Scalar asl(Scalar p, bool positive, const LossConfig& cfg);
/// d asl / dp (zero where the clamp is active).
Scalar asl_grad(Scalar p, bool positive, const LossConfig& cfg);

/// Mean ASL of sigmoid(logits) against 0/1 labels of the same shape.
Scalar classification_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg);
Matrix classification_loss_grad(const Matrix& logits, const Matrix& labels, const LossConfig& cfg);

/// D[v,j] = ½(σ(-‖h'−w'_j‖) + σ(cos(h', w'_j))), h' = h_v ⊙ gate_j.
/// Cosine against a zero vector is 0.
Matrix spatial_scores(const Matrix& embeddings, const Matrix& gated_classifier, const Matrix& gate);

struct SpatialGrads {
  Matrix embeddings;
  Matrix gated_classifier;
  Matrix gate;
};
SpatialGrads spatial_scores_backward(const Matrix& embeddings, const Matrix& gated_classifier, const Matrix& gate,
                                     const Matrix& d_scores);

/// Mean ASL over the score matrix (scores are probabilities already).
Scalar spatial_loss(const Matrix& scores, const Matrix& labels, const LossConfig& cfg);
Matrix spatial_loss_grad(const Matrix& scores, const Matrix& labels, const LossConfig& cfg);

Scalar l1_penalty(const Matrix& gate, Scalar lambda);

Scalar fused_loss(Scalar lc, Scalar ls, Scalar l1, Scalar delta_c, Scalar delta_s, WeightingMode mode);

// Fused loss with δ = exp(log δ), plus its partials.
struct FusedTerms {
  Scalar value = 0;
  Scalar delta_c = 1, delta_s = 1;  // as used (after clamping in raw mode)
  Scalar d_lc = 0, d_ls = 0, d_l1 = 1;
  Scalar d_log_delta_c = 0, d_log_delta_s = 0;
};
FusedTerms fused_terms(Scalar lc, Scalar ls, Scalar l1, Scalar log_delta_c, Scalar log_delta_s, WeightingMode mode);

struct Objective {
  LossReport report;
  Upstream upstream;
  Matrix d_log_delta;  // 2 × 1
};

/// Evaluates every loss on a soft-gate trace whose rows are the training nodes
/// and returns the gradient flowing back into the network.
Objective evaluate_objective(const SmnParams& params, const ForwardTrace& trace, const Matrix& labels,
                             const LossConfig& cfg);

}  // namespace smn
