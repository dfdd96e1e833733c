#include "smn/trainer.hpp"

#include <ostream>

namespace smn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (dims.hidden < 1 || dims.embedding < 1 || dims.heads < 1 || dims.hops < 1)
    throw ConfigError("model dimensions must be >= 1");
  loss.validate();
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,lc,ls,l1,fused,val_f1\n";
  const auto prec = out.precision(10);
  for (const auto& e : epochs)
    out << e.epoch << ',' << e.loss.classification << ',' << e.loss.spatial << ',' << e.loss.l1 << ','
        << e.loss.fused << ',' << e.val_f1 << '\n';
  out.precision(prec);
}

void require_finite(const SmnParams& tensors, std::string_view what) {
  tensors.for_each([&](std::string_view name, const Matrix& m) {
    if (!m.allFinite()) throw NumericError("non-finite value in " + std::string(what) + " " + std::string(name));
  });
}

namespace {

void require_finite(const LossReport& r) {
  const std::pair<const char*, Scalar> parts[] = {
      {"classification loss", r.classification}, {"spatial loss", r.spatial}, {"l1 penalty", r.l1},
      {"fused loss", r.fused}};
  for (auto [name, v] : parts)
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + name);
}

}  // namespace

std::pair<LossReport, SmnGrads> loss_and_grad(const SmnParams& params, const MultiHopFeatures& rows,
                                              const Matrix& labels, const LossConfig& cfg) {
  const auto trace = forward(params, rows, GateMode::soft);
  auto obj = evaluate_objective(params, trace, labels, cfg);
  SmnGrads g = backward(params, rows, trace, obj.upstream);
  g.log_delta = obj.d_log_delta;
  return {obj.report, std::move(g)};
}

Optimizer::Optimizer(OptimizerKind kind, Scalar learning_rate, const SmnParams& like)
    : kind_(kind), lr_(learning_rate), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Optimizer::step(SmnParams& params, const SmnGrads& grads) {
  std::vector<const Matrix*> g;
  grads.for_each([&](std::string_view, const Matrix& m) { g.push_back(&m); });
  std::vector<Matrix*> m1, m2;
  m_.for_each([&](std::string_view, Matrix& m) { m1.push_back(&m); });
  v_.for_each([&](std::string_view, Matrix& m) { m2.push_back(&m); });

  ++t_;
  constexpr Scalar b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const Scalar c1 = 1 - std::pow(b1, static_cast<Scalar>(t_));
  const Scalar c2 = 1 - std::pow(b2, static_cast<Scalar>(t_));
  std::size_t i = 0;
  params.for_each([&](std::string_view, Matrix& p) {
    const Matrix& gi = *g[i];
    if (kind_ == OptimizerKind::sgd) {
      p -= lr_ * gi;
    } else {
      Matrix& m = *m1[i];
      Matrix& v = *m2[i];
      m = b1 * m + (1 - b1) * gi;
      v = b2 * v + (1 - b2) * gi.cwiseAbs2();
      p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
    ++i;
  });
}

Trainer::Trainer(MultiHopFeatures train_rows, Matrix train_labels, const TrainConfig& cfg, SmnParams init)
    : rows_(std::move(train_rows)),
      labels_(std::move(train_labels)),
      cfg_(cfg),
      params_(std::move(init)),
      opt_(cfg.optimizer, cfg.learning_rate, params_) {}

LossReport Trainer::step() {
  auto [report, grads] = loss_and_grad(params_, rows_, labels_, cfg_.loss);
  require_finite(report);
  require_finite(grads, "gradient");
  opt_.step(params_, grads);
  require_finite(params_, "parameter");
  return report;
}

Scalar micro_f1(const Matrix& predicted, const Matrix& truth) {
  const Scalar tp = predicted.cwiseProduct(truth).sum();
  const Scalar fp = predicted.sum() - tp;
  const Scalar fn = truth.sum() - tp;
  const Scalar denom = 2 * tp + fp + fn;
  return denom > 0 ? 2 * tp / denom : 1.0;
}

Matrix predict_label_matrix(const SmnParams& params, const MultiHopFeatures& rows) {
  const auto trace = forward(params, rows, GateMode::hard);
  return trace.logits.unaryExpr([](Scalar o) { return sigmoid(o) > 0.5 ? 1.0 : 0.0; });
}

std::vector<CommunityId> predict_labels(const SmnParams& params, const MultiHopFeatures& mh, NodeId node) {
  if (node < 0 || node >= mh.nodes()) throw ArgumentError("node " + std::to_string(node) + " out of range");
  const Matrix row = predict_label_matrix(params, mh.select_rows({node}));
  std::vector<CommunityId> out;
  for (Eigen::Index j = 0; j < row.cols(); ++j)
    if (row(0, j) > 0) out.push_back(static_cast<CommunityId>(j));
  return out;
}

TrainResult train(const MultiHopFeatures& mh, const LabelMatrix& labels, const Split& split, const TrainConfig& cfg) {
  cfg.validate();
  if (split.train.empty()) throw DatasetError("training set is empty");

  TrainConfig resolved = cfg;
  resolved.dims.input = static_cast<int>(mh.dim());
  resolved.dims.communities = labels.communities();

  auto init = init_params(resolved.dims, resolved.model, derive_seed(cfg.seed, "init"));
  Trainer trainer(mh.select_rows(split.train), labels.dense(split.train), resolved, std::move(init));
  const auto val_rows = mh.select_rows(split.validation);
  const Matrix val_labels = labels.dense(split.validation);

  TrainResult best{trainer.params(), {}};
  Scalar best_f1 = -1;
  Scalar last_f1 = 0;
  for (int epoch = 1; epoch <= resolved.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = trainer.step();
    if (epoch % resolved.eval_every == 0 || epoch == resolved.epochs) {
      last_f1 = split.validation.empty() ? 0.0 : micro_f1(predict_label_matrix(trainer.params(), val_rows), val_labels);
      // ties keep the earlier epoch; without validation rows the last epoch wins
      if (last_f1 > best_f1 || split.validation.empty()) {
        best_f1 = last_f1;
        best.params = trainer.params();
        best.log.best_epoch = epoch;
      }
    }
    rec.val_f1 = last_f1;
    best.log.epochs.push_back(rec);
  }
  return best;
}

TrainResult train(const Graph& g, const Split& split, const TrainConfig& cfg) {
  cfg.validate();
  const auto mh = multi_hop_stack(normalize(g), g.features, cfg.dims.hops);
  return train(mh, g.labels, split, cfg);
}

}  // namespace smn
