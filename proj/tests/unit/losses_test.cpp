#include "../support.hpp"

#include <doctest.h>

using namespace smn;

namespace {

LossConfig plain(double gp = 0, double gn = 0, double m = 0) {
  LossConfig c;
  c.gamma_pos = gp;
  c.gamma_neg = gn;
  c.margin = m;
  return c;
}

const double kLog2 = std::log(2.0);

}  // namespace

TEST_CASE("asl closed forms") {
  LossConfig cfg;
  cfg.margin = 0.2;
  CHECK(asl(0.1, false, cfg) == 0.0);
  CHECK(asl(0.5, true, plain(0)) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(asl(0.5, true, plain(2)) == doctest::Approx(0.173287).epsilon(1e-6));
  // negative part with the shifted probability
  CHECK(asl(0.7, false, plain(0, 2, 0.2)) == doctest::Approx(0.25 * -std::log(0.5)));
  // clamped at the ends
  CHECK(std::isfinite(asl(0.0, true, plain())));
  CHECK(std::isfinite(asl(1.0, false, plain())));
}

TEST_CASE("asl is non-negative and monotone") {
  for (const LossConfig& cfg : {LossConfig{}, plain(), plain(1, 4, 0.3)}) {
    double prev_pos = std::numeric_limits<double>::infinity(), prev_neg = -1;
    for (int i = 0; i <= 1000; ++i) {
      const double p = i / 1000.0;
      const double lp = asl(p, true, cfg), ln = asl(p, false, cfg);
      CHECK(lp >= 0);
      CHECK(ln >= 0);
      CHECK(lp <= prev_pos);
      CHECK(ln >= prev_neg);
      prev_pos = lp;
      prev_neg = ln;
    }
  }
}

TEST_CASE("asl gradient") {
  for (const LossConfig& cfg : {LossConfig{}, plain(), plain(1, 4, 0.3)})
    for (double p : {0.03, 0.2, 0.41, 0.77, 0.95})
      for (bool y : {true, false}) {
        const double fd = (asl(p + 1e-6, y, cfg) - asl(p - 1e-6, y, cfg)) / 2e-6;
        CHECK(asl_grad(p, y, cfg) == doctest::Approx(fd).epsilon(1e-6));
      }
}

TEST_CASE("classification loss") {
  SUBCASE("perfect logits") {
    Matrix labels(3, 2);
    labels << 1, 0, 0, 1, 1, 1;
    const Matrix logits = (labels.array() * 40 - 20).matrix();
    CHECK(classification_loss(logits, labels, plain(3, 2, 0)) < 1e-6);
  }
  SUBCASE("zero logits, zero labels") {
    CHECK(classification_loss(Matrix::Zero(2, 3), Matrix::Zero(2, 3), plain(3, 0, 0)) == doctest::Approx(kLog2));
  }
  SUBCASE("scripted fixture") {
    Matrix logits(4, 3), labels(4, 3);
    logits << 0.3, -1.2, 2.0, -0.7, 0.1, 0.9, 1.5, -2.2, -0.4, 0.0, 0.8, -1.1;
    labels << 1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1, 0;
    // tests/oracles/losses_oracle.py
    CHECK(std::abs(classification_loss(logits, labels, LossConfig{}) - 0.17557297850328502) <= 1e-10);
  }
  SUBCASE("reduces to binary cross-entropy") {
    const Matrix logits = Matrix::Random(5, 4) * 3;
    const Matrix labels = (Matrix::Random(5, 4).array() > 0).cast<double>().matrix();
    double bce = 0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      const double p = sigmoid(logits.data()[i]);
      bce -= labels.data()[i] ? std::log(p) : std::log(1 - p);
    }
    CHECK(std::abs(classification_loss(logits, labels, plain()) - bce / 20) <= 1e-10);
  }
  SUBCASE("gradient") {
    const Matrix logits = Matrix::Random(3, 4) * 2;
    const Matrix labels = (Matrix::Random(3, 4).array() > 0).cast<double>().matrix();
    const Matrix grad = classification_loss_grad(logits, labels, LossConfig{});
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      Matrix up = logits, down = logits;
      up.data()[i] += 1e-6;
      down.data()[i] -= 1e-6;
      const double fd = (classification_loss(up, labels, {}) - classification_loss(down, labels, {})) / 2e-6;
      CHECK(grad.data()[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("spatial scores closed forms") {
  SUBCASE("identical vectors") {
    Matrix h(1, 3);
    h << 0.4, -0.2, 0.9;
    const Matrix d = spatial_scores(h, h.transpose(), Matrix::Ones(3, 1));
    CHECK(d(0, 0) == doctest::Approx(0.615529).epsilon(1e-6));
  }
  SUBCASE("orthogonal unit vectors") {
    Matrix h(1, 2), w(2, 1);
    h << 1, 0;
    w << 0, 1;
    CHECK(spatial_scores(h, w, Matrix::Ones(2, 1))(0, 0) == doctest::Approx(0.3479).epsilon(1e-4));
  }
  SUBCASE("fully gated column") {
    Matrix h(1, 2);
    h << 1, 2;
    CHECK(spatial_scores(h, Matrix::Zero(2, 1), Matrix::Zero(2, 1))(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("scripted fixture") {
    Matrix h(4, 3), wc(3, 2), gate(3, 2), labels(4, 2), expected(4, 2);
    h << 0.5, -1.0, 0.2, 1.1, 0.3, -0.4, -0.6, 0.9, 0.7, 0.0, 0.4, 1.3;
    wc << 0.8, -0.3, 0.2, 1.0, -0.5, 0.6;
    gate << 0.9, 0.1, 0.4, 0.7, 0.2, 0.95;
    labels << 1, 0, 1, 1, 0, 1, 0, 0;
    // tests/oracles/losses_oracle.py
    expected << 0.45154664558138813, 0.23934890860111507, 0.54671980973451417, 0.34327700945216577,
        0.26076213950055077, 0.55545263939112044, 0.33325037501330318, 0.46460417977920598;
    const Matrix d = spatial_scores(h, wc, gate);
    CHECK((d - expected).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(spatial_loss(d, labels, LossConfig{}) - 0.084837706643126287) <= 1e-10);
  }
}

TEST_CASE("spatial scores stay inside (0.13, 0.616]") {
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix h = Matrix::Random(6, 4) * 5;
    const Matrix wc = Matrix::Random(4, 3) * 5;
    const Matrix gate = (Matrix::Random(4, 3).array() * 0.5 + 0.5).matrix();
    const Matrix d = spatial_scores(h, wc, gate);
    CHECK(d.minCoeff() > 0.13);
    CHECK(d.maxCoeff() <= 0.6155295 + 1e-12);
  }
}

TEST_CASE("spatial loss") {
  Matrix labels(2, 2);
  labels << 1, 0, 0, 1;
  CHECK(spatial_loss(labels, labels, plain()) < 1e-6);
  CHECK(spatial_loss(Matrix::Constant(2, 2, 0.5), Matrix::Ones(2, 2), plain()) == doctest::Approx(kLog2));
}

TEST_CASE("spatial score gradients") {
  const Matrix h = Matrix::Random(3, 4);
  const Matrix wc = Matrix::Random(4, 2);
  Matrix gate = (Matrix::Random(4, 2).array() * 0.4 + 0.5).matrix();
  gate(3, 1) = 0;  // one gated-out coordinate
  const Matrix weights = Matrix::Random(3, 2);
  const auto g = spatial_scores_backward(h, wc, gate, weights);
  auto f = [&](const Matrix& hh, const Matrix& ww, const Matrix& gg) {
    return spatial_scores(hh, ww, gg).cwiseProduct(weights).sum();
  };
  auto check = [&](const Matrix& base, const Matrix& analytic, auto call) {
    for (Eigen::Index i = 0; i < base.size(); ++i) {
      Matrix up = base, down = base;
      up.data()[i] += 1e-6;
      down.data()[i] -= 1e-6;
      CHECK(analytic.data()[i] == doctest::Approx((call(up) - call(down)) / 2e-6).epsilon(1e-5));
    }
  };
  check(h, g.embeddings, [&](const Matrix& m) { return f(m, wc, gate); });
  check(wc, g.gated_classifier, [&](const Matrix& m) { return f(h, m, gate); });
  check(gate, g.gate, [&](const Matrix& m) { return f(h, wc, m); });
}

TEST_CASE("l1 penalty") {
  CHECK(l1_penalty(Matrix::Zero(64, 4), 0.01) == 0.0);
  CHECK(l1_penalty(Matrix::Ones(64, 4), 0.01) == doctest::Approx(2.56));
  CHECK(l1_penalty(Matrix::Random(5, 5).cwiseAbs(), 0.0) == 0.0);
  const Matrix g = Matrix::Random(3, 3).cwiseAbs();
  CHECK(l1_penalty(g, 0.4) == doctest::Approx(2 * l1_penalty(g, 0.2)));
  CHECK(l1_penalty(3 * g, 0.2) == doctest::Approx(3 * l1_penalty(g, 0.2)));
}

TEST_CASE("fused loss") {
  CHECK(fused_loss(0.8, 0.6, 0, 1, 1, WeightingMode::kendall) == doctest::Approx(0.7));
  CHECK(fused_loss(2, 2, 0.5, 1, 1, WeightingMode::raw_clamped) == doctest::Approx(2.5));
  CHECK(fused_loss(2, 2, 0, 100, 0.001, WeightingMode::raw_clamped) == doctest::Approx(0.5 * (2 / 100.0 + 2 / 0.01)));
  CHECK_THROWS_AS(fused_loss(1, 1, 0, 0, 1, WeightingMode::kendall), ContractError);
  CHECK_THROWS_AS(fused_loss(1, 1, 0, 1, -1, WeightingMode::raw_clamped), ContractError);
}

TEST_CASE("fused loss partials") {
  for (auto mode : {WeightingMode::kendall, WeightingMode::raw_clamped})
    for (double rc : {-0.4, 0.3}) {
      const double rs = -rc / 2, lc = 0.7, ls = 0.2, l1 = 0.1;
      const auto t = fused_terms(lc, ls, l1, rc, rs, mode);
      auto v = [&](double a, double b, double c, double d, double e) { return fused_terms(a, b, c, d, e, mode).value; };
      const double h = 1e-6;
      CHECK(t.d_lc == doctest::Approx((v(lc + h, ls, l1, rc, rs) - v(lc - h, ls, l1, rc, rs)) / (2 * h)));
      CHECK(t.d_ls == doctest::Approx((v(lc, ls + h, l1, rc, rs) - v(lc, ls - h, l1, rc, rs)) / (2 * h)));
      CHECK(t.d_log_delta_c == doctest::Approx((v(lc, ls, l1, rc + h, rs) - v(lc, ls, l1, rc - h, rs)) / (2 * h)));
      CHECK(t.d_log_delta_s == doctest::Approx((v(lc, ls, l1, rc, rs + h) - v(lc, ls, l1, rc, rs - h)) / (2 * h)));
    }
}

TEST_CASE("kendall weights settle at the stationary point") {
  // x / (2δ²) + log δ is minimized at δ = sqrt(x); with lc = ls = 1 the fused
  // value there is 1.
  SmnParams p;
  p.log_delta = Matrix(2, 1);
  p.log_delta << 0.9, -0.7;
  for (auto* m : {&p.hop_weights, &p.attn_self, &p.attn_hop, &p.head_filter, &p.classifier, &p.ssf_logits})
    m->resize(0, 0);
  Optimizer opt(OptimizerKind::adam, 0.02, p);
  for (int i = 0; i < 3000; ++i) {
    const auto t = fused_terms(1, 1, 0, p.log_delta(0), p.log_delta(1), WeightingMode::kendall);
    SmnGrads g = p.zeros_like();
    g.log_delta << t.d_log_delta_c, t.d_log_delta_s;
    opt.step(p, g);
  }
  CHECK(std::abs(p.delta_c() - 1) < 1e-2);
  CHECK(std::abs(p.delta_s() - 1) < 1e-2);
  const auto t = fused_terms(1, 1, 0, p.log_delta(0), p.log_delta(1), WeightingMode::kendall);
  CHECK(std::abs(t.value - 1) < 1e-2);
}

TEST_CASE("loss config validation") {
  LossConfig c;
  CHECK_NOTHROW(c.validate());
  c.margin = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.gamma_neg = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.lambda = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("full objective gradient including the balance weights") {
  const Graph g = test::random_graph(5, 4, 3, 0.6, 91);
  const auto mh = test::stack_for(g, 3);
  const Matrix labels = g.labels.dense();
  ModelDims dims{.input = 4, .hidden = 3, .embedding = 4, .communities = 3, .heads = 2, .hops = 3};
  for (auto mode : {WeightingMode::kendall, WeightingMode::raw_clamped}) {
    LossConfig cfg;
    cfg.weighting = mode;
    cfg.lambda = 0.05;
    const SmnParams p = test::random_params(dims, {}, 92);
    const auto [report, grads] = loss_and_grad(p, mh, labels, cfg);
    CHECK(report.classification >= 0);
    CHECK(report.spatial >= 0);
    CHECK(report.l1 >= 0);
    const auto fd = test::finite_difference_check(
        p, grads, [&](const SmnParams& q) { return loss_and_grad(q, mh, labels, cfg).first.fused; });
    INFO(fd.worst);
    CHECK(fd.max_rel_error < 1e-4);
  }
}
