#pragma once

#include "smn/losses.hpp"

#include <iosfwd>

namespace smn {

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
  Scalar learning_rate = 0.02;
  int epochs = 300;
  std::uint64_t seed = 0;
  int eval_every = 1;
  ModelDims dims;  // input and communities are taken from the data
  ModelOptions model;
  LossConfig loss;
  OptimizerKind optimizer = OptimizerKind::adam;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  LossReport loss;
  Scalar val_f1 = 0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;

  /// epoch,lc,ls,l1,fused,val_f1
  void write_csv(std::ostream& out) const;
};

struct TrainResult {
  SmnParams params;
  TrainLog log;
};

/// Loss and full gradient (including the balance weights) on the given rows.
std::pair<LossReport, SmnGrads> loss_and_grad(const SmnParams& params, const MultiHopFeatures& rows,
                                              const Matrix& labels, const LossConfig& cfg);

/// Adam (β = 0.9, 0.999, ε = 1e-8) or plain SGD over every tensor of SmnParams.
class Optimizer {
public:
  Optimizer(OptimizerKind kind, Scalar learning_rate, const SmnParams& like);
  void step(SmnParams& params, const SmnGrads& grads);

private:
  OptimizerKind kind_;
  Scalar lr_;
  long t_ = 0;
  SmnParams m_, v_;
};

/// Full-batch training on the rows of `train_rows` only.
class Trainer {
public:
  Trainer(MultiHopFeatures train_rows, Matrix train_labels, const TrainConfig& cfg, SmnParams init);

  /// forward (soft gate) -> losses -> backward -> update. Returns the loss
  /// evaluated before the update.
  LossReport step();

  const SmnParams& params() const { return params_; }

private:
  MultiHopFeatures rows_;
  Matrix labels_;
  TrainConfig cfg_;
  SmnParams params_;
  Optimizer opt_;
};

/// Micro-averaged F1 of hard-gate label predictions against 0/1 labels.
Scalar micro_f1(const Matrix& predicted, const Matrix& truth);

/// 0/1 matrix of sigmoid(logit) > 0.5 under the hard gate.
Matrix predict_label_matrix(const SmnParams& params, const MultiHopFeatures& rows);

std::vector<CommunityId> predict_labels(const SmnParams& params, const MultiHopFeatures& mh, NodeId node);

/// Preprocesses once, then trains and keeps the parameters of the epoch with
/// the best validation micro-F1.
TrainResult train(const Graph& g, const Split& split, const TrainConfig& cfg);
TrainResult train(const MultiHopFeatures& mh, const LabelMatrix& labels, const Split& split, const TrainConfig& cfg);

/// Throws NumericError naming the first tensor holding a NaN or Inf.
void require_finite(const SmnParams& tensors, std::string_view what);

}  // namespace smn
