#include "smn/losses.hpp"

#include <algorithm>

namespace smn {

void LossConfig::validate() const {
  if (!(gamma_pos >= 0) || !(gamma_neg >= 0)) throw ConfigError("loss.gamma_pos and loss.gamma_neg must be >= 0");
  if (!(margin >= 0 && margin < 1)) throw ConfigError("loss.margin must lie in [0, 1)");
  if (!(lambda >= 0)) throw ConfigError("loss.lambda must be >= 0");
}

namespace {

Scalar clamp_prob(Scalar p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

// x^γ with 0^0 = 1
Scalar focus(Scalar x, Scalar gamma) { return gamma == 0 ? 1.0 : std::pow(x, gamma); }

// d/dx x^γ, taken as 0 at x = 0 (the paired log factor vanishes there too)
Scalar focus_grad(Scalar x, Scalar gamma) {
  if (gamma == 0 || x == 0) return 0.0;
  return gamma * std::pow(x, gamma - 1);
}

}  // namespace

Scalar asl(Scalar p, bool positive, const LossConfig& cfg) {
  p = clamp_prob(p);
  if (positive) return focus(1 - p, cfg.gamma_pos) * -std::log(p);
  const Scalar pm = std::max(p - cfg.margin, 0.0);
  if (pm == 0) return 0.0;
  return focus(pm, cfg.gamma_neg) * -std::log(1 - pm);
}

Scalar asl_grad(Scalar p, bool positive, const LossConfig& cfg) {
  if (p <= kProbClamp || p >= 1 - kProbClamp) return 0.0;
  if (positive) {
    const Scalar q = 1 - p;
    return -focus_grad(q, cfg.gamma_pos) * -std::log(p) + focus(q, cfg.gamma_pos) * (-1.0 / p);
  }
  const Scalar pm = p - cfg.margin;
  if (pm <= 0) return 0.0;
  return focus_grad(pm, cfg.gamma_neg) * -std::log(1 - pm) + focus(pm, cfg.gamma_neg) / (1 - pm);
}

Scalar classification_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols())
    throw DimensionError("logits and labels differ in shape");
  if (logits.size() == 0) return 0.0;
  Scalar total = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    for (Eigen::Index j = 0; j < logits.cols(); ++j) total += asl(sigmoid(logits(i, j)), labels(i, j) > 0.5, cfg);
  return total / static_cast<Scalar>(logits.size());
}

Matrix classification_loss_grad(const Matrix& logits, const Matrix& labels, const LossConfig& cfg) {
  Matrix g(logits.rows(), logits.cols());
  const Scalar scale = logits.size() ? 1.0 / static_cast<Scalar>(logits.size()) : 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const Scalar p = sigmoid(logits(i, j));
      g(i, j) = scale * asl_grad(p, labels(i, j) > 0.5, cfg) * p * (1 - p);
    }
  return g;
}

Matrix spatial_scores(const Matrix& h, const Matrix& w, const Matrix& gate) {
  if (h.cols() != w.rows() || w.rows() != gate.rows() || w.cols() != gate.cols())
    throw DimensionError("spatial_scores: inconsistent shapes");
  Matrix d(h.rows(), w.cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const Vector wj = w.col(j);
    const Scalar nw = wj.norm();
    for (Eigen::Index v = 0; v < h.rows(); ++v) {
      const Vector hp = h.row(v).transpose().cwiseProduct(gate.col(j));
      const Scalar dist = (hp - wj).norm();
      const Scalar nh = hp.norm();
      const Scalar sim = (nh > 0 && nw > 0) ? hp.dot(wj) / (nh * nw) : 0.0;
      d(v, j) = 0.5 * (sigmoid(-dist) + sigmoid(sim));
    }
  }
  return d;
}

SpatialGrads spatial_scores_backward(const Matrix& h, const Matrix& w, const Matrix& gate, const Matrix& d_scores) {
  SpatialGrads g{Matrix::Zero(h.rows(), h.cols()), Matrix::Zero(w.rows(), w.cols()),
                 Matrix::Zero(gate.rows(), gate.cols())};
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const Vector wj = w.col(j);
    const Scalar nw = wj.norm();
    for (Eigen::Index v = 0; v < h.rows(); ++v) {
      const Scalar up = d_scores(v, j);
      if (up == 0) continue;
      const Vector hv = h.row(v).transpose();
      const Vector hp = hv.cwiseProduct(gate.col(j));
      const Vector diff = hp - wj;
      const Scalar dist = diff.norm();
      const Scalar nh = hp.norm();

      Vector d_hp = Vector::Zero(hp.size());
      Vector d_w = Vector::Zero(hp.size());
      if (dist > 0) {
        const Scalar sd = sigmoid(-dist);
        const Scalar d_dist = -0.5 * sd * (1 - sd) * up;
        d_hp += d_dist * diff / dist;
        d_w -= d_dist * diff / dist;
      }
      if (nh > 0 && nw > 0) {
        const Scalar sim = hp.dot(wj) / (nh * nw);
        const Scalar ss = sigmoid(sim);
        const Scalar d_sim = 0.5 * ss * (1 - ss) * up;
        d_hp += d_sim * (wj / (nh * nw) - sim * hp / (nh * nh));
        d_w += d_sim * (hp / (nh * nw) - sim * wj / (nw * nw));
      }
      g.embeddings.row(v) += d_hp.cwiseProduct(gate.col(j)).transpose();
      g.gate.col(j) += d_hp.cwiseProduct(hv);
      g.gated_classifier.col(j) += d_w;
    }
  }
  return g;
}

Scalar spatial_loss(const Matrix& scores, const Matrix& labels, const LossConfig& cfg) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols())
    throw DimensionError("scores and labels differ in shape");
  if (scores.size() == 0) return 0.0;
  Scalar total = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    for (Eigen::Index j = 0; j < scores.cols(); ++j) total += asl(scores(i, j), labels(i, j) > 0.5, cfg);
  return total / static_cast<Scalar>(scores.size());
}

Matrix spatial_loss_grad(const Matrix& scores, const Matrix& labels, const LossConfig& cfg) {
  Matrix g(scores.rows(), scores.cols());
  const Scalar scale = scores.size() ? 1.0 / static_cast<Scalar>(scores.size()) : 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    for (Eigen::Index j = 0; j < scores.cols(); ++j) g(i, j) = scale * asl_grad(scores(i, j), labels(i, j) > 0.5, cfg);
  return g;
}

Scalar l1_penalty(const Matrix& gate, Scalar lambda) { return lambda * gate.sum(); }

namespace {
constexpr Scalar kDeltaMin = 0.1;
constexpr Scalar kDeltaMax = 10.0;
}  // namespace

FusedTerms fused_terms(Scalar lc, Scalar ls, Scalar l1, Scalar log_dc, Scalar log_ds, WeightingMode mode) {
  FusedTerms t;
  Scalar dc = std::exp(log_dc), ds = std::exp(log_ds);
  // d(δ)/d(log δ) is δ inside the clamp range and 0 outside it
  Scalar jac_c = 1, jac_s = 1;
  if (mode == WeightingMode::raw_clamped) {
    if (dc < kDeltaMin || dc > kDeltaMax) jac_c = 0;
    if (ds < kDeltaMin || ds > kDeltaMax) jac_s = 0;
    dc = std::clamp(dc, kDeltaMin, kDeltaMax);
    ds = std::clamp(ds, kDeltaMin, kDeltaMax);
  }
  t.delta_c = dc;
  t.delta_s = ds;
  t.d_lc = 0.5 / (dc * dc);
  t.d_ls = 0.5 / (ds * ds);
  t.value = t.d_lc * lc + t.d_ls * ls + l1;
  // ∂/∂log δ of ½ x δ⁻² is -x δ⁻²
  t.d_log_delta_c = -lc / (dc * dc) * jac_c;
  t.d_log_delta_s = -ls / (ds * ds) * jac_s;
  if (mode == WeightingMode::kendall) {
    t.value += std::log(dc) + std::log(ds);
    t.d_log_delta_c += 1;
    t.d_log_delta_s += 1;
  }
  return t;
}

Scalar fused_loss(Scalar lc, Scalar ls, Scalar l1, Scalar delta_c, Scalar delta_s, WeightingMode mode) {
  if (!(delta_c > 0) || !(delta_s > 0)) throw ContractError("fused_loss: balance weights must be positive");
  return fused_terms(lc, ls, l1, std::log(delta_c), std::log(delta_s), mode).value;
}

Objective evaluate_objective(const SmnParams& params, const ForwardTrace& trace, const Matrix& labels,
                             const LossConfig& cfg) {
  Objective obj;
  auto& r = obj.report;
  r.classification = classification_loss(trace.logits, labels, cfg);
  const Matrix scores = spatial_scores(trace.embeddings, trace.gated_classifier, trace.gate);
  r.spatial = spatial_loss(scores, labels, cfg);
  r.l1 = l1_penalty(trace.gate, cfg.lambda);

  const auto f = fused_terms(r.classification, r.spatial, r.l1, params.log_delta(0, 0), params.log_delta(1, 0),
                             cfg.weighting);
  r.fused = f.value;
  r.delta_c = f.delta_c;
  r.delta_s = f.delta_s;

  const Matrix d_scores = f.d_ls * spatial_loss_grad(scores, labels, cfg);
  auto sg = spatial_scores_backward(trace.embeddings, trace.gated_classifier, trace.gate, d_scores);
  obj.upstream.logits = f.d_lc * classification_loss_grad(trace.logits, labels, cfg);
  obj.upstream.embeddings = std::move(sg.embeddings);
  obj.upstream.gated_classifier = std::move(sg.gated_classifier);
  obj.upstream.gate = sg.gate.array() + f.d_l1 * cfg.lambda;
  obj.d_log_delta = Matrix(2, 1);
  obj.d_log_delta << f.d_log_delta_c, f.d_log_delta_s;
  return obj;
}

}  // namespace smn
