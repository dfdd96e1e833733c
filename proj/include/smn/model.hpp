#pragma once

#include "smn/preproc.hpp"

#include <cmath>
#include <functional>
#include <string_view>

namespace smn {

enum class GateMode { soft, hard };

// shared: one attention vector per head scores both the self and the hop term.
// split: separate vectors for the two terms.
enum class AttentionMode { shared, split };

struct ModelDims {
  int input = 0;
  int hidden = 128;
  int embedding = 64;
  int communities = 0;
  int heads = 2;
  int hops = 16;

  bool operator==(const ModelDims&) const = default;
};

struct ModelOptions {
  AttentionMode attention = AttentionMode::shared;
  Scalar attention_slope = 0.2;  // LeakyReLU before the hop softmax
  Scalar output_slope = 0.2;     // LeakyReLU on the multi-head filter output
};

/// Every trainable tensor of the network plus the loss-balance scalars.
struct SmnParams {
  ModelDims dims;
  ModelOptions options;

  Matrix hop_weights;   // hidden × input, shared over hops and nodes
  Matrix attn_self;     // heads × hidden
  Matrix attn_hop;      // heads × hidden in split mode, empty in shared mode
  Matrix head_filter;   // embedding × (heads·hidden)
  Matrix classifier;    // embedding × communities
  Matrix ssf_logits;    // embedding × communities, pre-sigmoid subspace filter
  Matrix log_delta;     // 2 × 1: log δ_c, log δ_s

  Scalar delta_c() const { return std::exp(log_delta(0, 0)); }
  Scalar delta_s() const { return std::exp(log_delta(1, 0)); }

  // Visits tensors in a fixed order (also the checkpoint order).
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  /// Same shapes, all zero.
  SmnParams zeros_like() const;
  std::size_t scalar_count() const;

private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f(std::string_view("hop_weights"), self.hop_weights);
    f(std::string_view("attn_self"), self.attn_self);
    f(std::string_view("attn_hop"), self.attn_hop);
    f(std::string_view("head_filter"), self.head_filter);
    f(std::string_view("classifier"), self.classifier);
    f(std::string_view("ssf_logits"), self.ssf_logits);
    f(std::string_view("log_delta"), self.log_delta);
  }
};

using SmnGrads = SmnParams;

SmnParams init_params(const ModelDims& dims, const ModelOptions& options, std::uint64_t seed);

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
  return x.unaryExpr([](Scalar v) { return 1.0 / (1.0 + std::exp(-v)); });
}

inline Scalar sigmoid(Scalar v) { return 1.0 / (1.0 + std::exp(-v)); }

template <typename Derived>
auto leaky_relu(const Eigen::MatrixBase<Derived>& x, Scalar slope) {
  return x.unaryExpr([slope](Scalar v) { return v > 0 ? v : slope * v; });
}

template <typename Derived>
auto leaky_relu_grad(const Eigen::MatrixBase<Derived>& x, Scalar slope) {
  return x.unaryExpr([slope](Scalar v) { return v > 0 ? 1.0 : slope; });
}

/// Row-wise softmax, max-shifted.
Matrix row_softmax(const Matrix& scores);

/// soft: sigmoid(S). hard: 1 where sigmoid(S) >= 0.5, else 0.
Matrix ssf_gate(const SmnParams& params, GateMode mode);

struct ForwardTrace {
  GateMode gate_mode = GateMode::soft;
  std::vector<Matrix> hop_hidden;   // per hop: nodes × hidden
  std::vector<Matrix> raw_scores;   // per head: nodes × hops, before LeakyReLU
  std::vector<Matrix> attention;    // per head: nodes × hops, rows sum to 1
  Matrix fused;                     // nodes × (heads·hidden), heads concatenated
  Matrix pre_activation;            // nodes × embedding
  Matrix embeddings;                // nodes × embedding
  Matrix gate;                      // embedding × communities
  Matrix gated_classifier;          // embedding × communities
  Matrix logits;                    // nodes × communities
};

ForwardTrace forward(const SmnParams& params, const MultiHopFeatures& mh, GateMode gate_mode);

/// Gradient of a scalar loss with respect to forward outputs. Empty matrices
/// mean zero.
struct Upstream {
  Matrix logits;
  Matrix embeddings;
  Matrix gated_classifier;
  Matrix gate;
};

/// Reverse pass through the network. The log_delta entry of the result is
/// left zero; the balance weights are differentiated with the losses.
SmnGrads backward(const SmnParams& params, const MultiHopFeatures& mh, const ForwardTrace& trace,
                  const Upstream& upstream);

// ---------------------------------------------------------------------------
// Checkpoints

struct CheckpointMeta {
  std::string config;  // flattened key=value snapshot of the training config
};

void save_checkpoint(const SmnParams& params, const CheckpointMeta& meta, const std::filesystem::path& path);
SmnParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);
/// Like load_checkpoint, but rejects a file whose dims differ from `expected`.
SmnParams load_checkpoint(const std::filesystem::path& path, const ModelDims& expected, CheckpointMeta* meta = nullptr);

}  // namespace smn
