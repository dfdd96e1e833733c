#include "smn/model.hpp"

#include "binio.hpp"

#include <random>

namespace smn {

SmnParams SmnParams::zeros_like() const {
  SmnParams z = *this;
  z.for_each([](std::string_view, Matrix& m) { m.setZero(); });
  return z;
}

std::size_t SmnParams::scalar_count() const {
  std::size_t total = 0;
  for_each([&](std::string_view, const Matrix& m) { total += static_cast<std::size_t>(m.size()); });
  return total;
}

SmnParams init_params(const ModelDims& dims, const ModelOptions& options, std::uint64_t seed) {
  if (dims.input < 1 || dims.hidden < 1 || dims.embedding < 1 || dims.communities < 1 || dims.heads < 1 ||
      dims.hops < 1)
    throw ArgumentError("all model dimensions must be >= 1");

  std::mt19937_64 rng(seed);
  auto uniform = [&](Eigen::Index rows, Eigen::Index cols, Scalar bound) {
    std::uniform_real_distribution<Scalar> dist(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
  };
  auto fan = [](int fan_in) { return 1.0 / std::sqrt(static_cast<Scalar>(fan_in)); };

  SmnParams p;
  p.dims = dims;
  p.options = options;
  p.hop_weights = uniform(dims.hidden, dims.input, fan(dims.input));
  p.attn_self = uniform(dims.heads, dims.hidden, fan(dims.hidden));
  p.attn_hop = options.attention == AttentionMode::split ? uniform(dims.heads, dims.hidden, fan(dims.hidden))
                                                          : Matrix(0, 0);
  p.head_filter = uniform(dims.embedding, dims.heads * dims.hidden, fan(dims.heads * dims.hidden));
  p.classifier = uniform(dims.embedding, dims.communities, fan(dims.embedding));
  p.ssf_logits = uniform(dims.embedding, dims.communities, 0.1);
  p.log_delta = Matrix::Zero(2, 1);
  return p;
}

Matrix row_softmax(const Matrix& scores) {
  Matrix out = scores;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const Scalar mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Matrix ssf_gate(const SmnParams& params, GateMode mode) {
  Matrix soft = sigmoid(params.ssf_logits);
  if (mode == GateMode::soft) return soft;
  return soft.unaryExpr([](Scalar g) { return g >= 0.5 ? 1.0 : 0.0; });
}

namespace {

void check_shapes(const SmnParams& p, const MultiHopFeatures& mh) {
  if (mh.hops() != p.dims.hops)
    throw DimensionError("feature stack has " + std::to_string(mh.hops()) + " hops, model expects " +
                         std::to_string(p.dims.hops));
  if (mh.dim() != p.dims.input)
    throw DimensionError("feature dim " + std::to_string(mh.dim()) + " != model input " +
                         std::to_string(p.dims.input));
}

const Matrix& hop_vectors(const SmnParams& p) {
  return p.options.attention == AttentionMode::split ? p.attn_hop : p.attn_self;
}

}  // namespace

ForwardTrace forward(const SmnParams& p, const MultiHopFeatures& mh, GateMode gate_mode) {
  check_shapes(p, mh);
  const int hops = p.dims.hops;
  const int heads = p.dims.heads;
  const int hidden = p.dims.hidden;
  const Eigen::Index n = mh.nodes();

  ForwardTrace t;
  t.gate_mode = gate_mode;
  t.hop_hidden.reserve(static_cast<std::size_t>(hops));
  for (const auto& h : mh.channels) t.hop_hidden.push_back(h * p.hop_weights.transpose());

  const Matrix& a_hop = hop_vectors(p);
  t.fused.resize(n, heads * hidden);
  for (int head = 0; head < heads; ++head) {
    const Vector self_term = t.hop_hidden[0] * p.attn_self.row(head).transpose();
    Matrix e(n, hops);
    for (int k = 0; k < hops; ++k)
      e.col(k) = self_term + t.hop_hidden[static_cast<std::size_t>(k)] * a_hop.row(head).transpose();
    Matrix alpha = row_softmax(leaky_relu(e, p.options.attention_slope));

    auto block = t.fused.middleCols(head * hidden, hidden);
    block.setZero();
    for (int k = 0; k < hops; ++k)
      block += alpha.col(k).asDiagonal() * t.hop_hidden[static_cast<std::size_t>(k)];

    t.raw_scores.push_back(std::move(e));
    t.attention.push_back(std::move(alpha));
  }

  t.pre_activation = t.fused * p.head_filter.transpose();
  t.embeddings = leaky_relu(t.pre_activation, p.options.output_slope);
  t.gate = ssf_gate(p, gate_mode);
  t.gated_classifier = t.gate.cwiseProduct(p.classifier);
  t.logits = t.embeddings * t.gated_classifier;
  return t;
}

SmnGrads backward(const SmnParams& p, const MultiHopFeatures& mh, const ForwardTrace& t, const Upstream& up) {
  if (t.gate_mode != GateMode::soft) throw ContractError("backward requires a soft-gate forward trace");
  check_shapes(p, mh);
  const int hops = p.dims.hops;
  const int heads = p.dims.heads;
  const int hidden = p.dims.hidden;
  const Eigen::Index n = t.embeddings.rows();

  auto or_zero = [](const Matrix& m, Eigen::Index r, Eigen::Index c) -> Matrix {
    if (m.size() == 0) return Matrix::Zero(r, c);
    if (m.rows() != r || m.cols() != c) throw DimensionError("upstream gradient has the wrong shape");
    return m;
  };
  const Eigen::Index s = p.dims.embedding, c = p.dims.communities;
  const Matrix d_logits = or_zero(up.logits, n, c);
  Matrix d_embed = or_zero(up.embeddings, n, s);
  Matrix d_gated = or_zero(up.gated_classifier, s, c);
  Matrix d_gate = or_zero(up.gate, s, c);

  SmnGrads g = p.zeros_like();

  // O = H_s W_c'
  d_gated.noalias() += t.embeddings.transpose() * d_logits;
  d_embed.noalias() += d_logits * t.gated_classifier.transpose();

  // W_c' = G ⊙ W_c, G = sigmoid(S)
  g.classifier = d_gated.cwiseProduct(t.gate);
  d_gate += d_gated.cwiseProduct(p.classifier);
  g.ssf_logits = d_gate.cwiseProduct(t.gate.cwiseProduct((1.0 - t.gate.array()).matrix()));

  // H_s = LeakyReLU(P), P = F W_rᵀ
  const Matrix d_pre = d_embed.cwiseProduct(leaky_relu_grad(t.pre_activation, p.options.output_slope));
  g.head_filter.noalias() = d_pre.transpose() * t.fused;
  const Matrix d_fused = d_pre * p.head_filter;

  std::vector<Matrix> d_hidden(static_cast<std::size_t>(hops), Matrix::Zero(n, hidden));
  const Matrix& a_hop = hop_vectors(p);
  Matrix d_a_self = Matrix::Zero(heads, hidden);
  Matrix d_a_hop = Matrix::Zero(heads, hidden);

  for (int head = 0; head < heads; ++head) {
    const auto d_block = d_fused.middleCols(head * hidden, hidden);
    const Matrix& alpha = t.attention[static_cast<std::size_t>(head)];
    const Matrix& e = t.raw_scores[static_cast<std::size_t>(head)];

    // F = Σ_k α_k ⊙ Z_k
    Matrix d_alpha(n, hops);
    for (int k = 0; k < hops; ++k) {
      const auto& z = t.hop_hidden[static_cast<std::size_t>(k)];
      d_alpha.col(k) = z.cwiseProduct(d_block).rowwise().sum();
      d_hidden[static_cast<std::size_t>(k)] += alpha.col(k).asDiagonal() * d_block;
    }

    // softmax, then LeakyReLU
    const Vector inner = alpha.cwiseProduct(d_alpha).rowwise().sum();
    const Matrix d_act = alpha.cwiseProduct((d_alpha.colwise() - inner));
    const Matrix d_e = d_act.cwiseProduct(leaky_relu_grad(e, p.options.attention_slope));

    // e_k = a_selfᵀ z_0 + a_hopᵀ z_k
    const Vector d_self = d_e.rowwise().sum();
    d_a_self.row(head) += (t.hop_hidden[0].transpose() * d_self).transpose();
    d_hidden[0] += d_self * p.attn_self.row(head);
    for (int k = 0; k < hops; ++k) {
      const auto& z = t.hop_hidden[static_cast<std::size_t>(k)];
      d_a_hop.row(head) += (z.transpose() * d_e.col(k)).transpose();
      d_hidden[static_cast<std::size_t>(k)] += d_e.col(k) * a_hop.row(head);
    }
  }

  if (p.options.attention == AttentionMode::split) {
    g.attn_self = d_a_self;
    g.attn_hop = d_a_hop;
  } else {
    g.attn_self = d_a_self + d_a_hop;
  }

  // Z_k = H_k W_lᵀ
  g.hop_weights.setZero();
  for (int k = 0; k < hops; ++k)
    g.hop_weights.noalias() += d_hidden[static_cast<std::size_t>(k)].transpose() * mh.channels[static_cast<std::size_t>(k)];
  return g;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'S', 'M', 'N', '1'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const SmnParams& p, const CheckpointMeta& meta, const std::filesystem::path& path) {
  binio::Writer w;
  w.bytes(kMagic, 4);
  w.pod(kVersion);
  for (int v : {p.dims.input, p.dims.hidden, p.dims.embedding, p.dims.communities, p.dims.heads, p.dims.hops})
    w.pod<std::int32_t>(v);
  w.pod<std::int32_t>(p.options.attention == AttentionMode::split ? 1 : 0);
  w.pod(p.options.attention_slope);
  w.pod(p.options.output_slope);
  w.str(meta.config);
  p.for_each([&](std::string_view, const Matrix& m) { w.matrix(m); });
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  w.commit(path);
}

SmnParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  binio::Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError(path.string() + ": bad magic, not an SMN1 checkpoint");
  if (const auto v = r.pod<std::uint32_t>(); v != kVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(v));

  SmnParams p;
  for (int* field : {&p.dims.input, &p.dims.hidden, &p.dims.embedding, &p.dims.communities, &p.dims.heads,
                     &p.dims.hops})
    *field = r.pod<std::int32_t>();
  const auto mode = r.pod<std::int32_t>();
  if (mode != 0 && mode != 1) throw FormatError(path.string() + ": bad attention mode");
  p.options.attention = mode == 1 ? AttentionMode::split : AttentionMode::shared;
  p.options.attention_slope = r.pod<Scalar>();
  p.options.output_slope = r.pod<Scalar>();
  std::string config = r.str();

  // Expected shapes follow from the header; anything else is corruption.
  const SmnParams shape = [&] {
    if (p.dims.input < 1 || p.dims.hidden < 1 || p.dims.embedding < 1 || p.dims.communities < 1 ||
        p.dims.heads < 1 || p.dims.hops < 1)
      throw FormatError(path.string() + ": invalid dims in header");
    return init_params(p.dims, p.options, 0);
  }();
  std::vector<Matrix> tensors;
  shape.for_each([&](std::string_view name, const Matrix& expect) {
    Matrix m = r.matrix();
    if (m.rows() != expect.rows() || m.cols() != expect.cols())
      throw FormatError(path.string() + ": tensor " + std::string(name) + " has unexpected shape");
    tensors.push_back(std::move(m));
  });
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");

  std::size_t i = 0;
  p.for_each([&](std::string_view, Matrix& m) { m = std::move(tensors[i++]); });
  if (meta) meta->config = std::move(config);
  return p;
}

SmnParams load_checkpoint(const std::filesystem::path& path, const ModelDims& expected, CheckpointMeta* meta) {
  auto p = load_checkpoint(path, meta);
  if (!(p.dims == expected))
    throw DimensionError(path.string() + ": checkpoint dims (hidden=" + std::to_string(p.dims.hidden) +
                         ", embedding=" + std::to_string(p.dims.embedding) + ") differ from the expected model (hidden=" +
                         std::to_string(expected.hidden) + ", embedding=" + std::to_string(expected.embedding) + ")");
  return p;
}

}  // namespace smn
