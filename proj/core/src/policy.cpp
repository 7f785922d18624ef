#include "rdnn/policy.hpp"

#include <cmath>

#include "rdnn/errors.hpp"

namespace rdnn {

namespace {

// sigmoid saturates irrecoverably past this point; clamping keeps the
// normalized head away from 0/0 for arbitrary finite parameters
constexpr double kLogitClamp = 500.0;

Eigen::MatrixXd xavier_uniform(Eigen::Index rows, Eigen::Index cols,
                               std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-s, s);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

}  // namespace

void PolicyConfig::validate() const {
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    fail(Errc::ShapeMismatch, "dropout rate outside [0, 1)");
  }
  for (int h : hidden_sizes) {
    if (h < 1) fail(Errc::ShapeMismatch, "hidden sizes must be >= 1");
  }
  if (!(max_shares > 0.0)) fail(Errc::ShapeMismatch, "max_shares must be > 0");
}

bool PolicyParameters::shapes_consistent() const {
  return layer1.a.cols() == layer1.b.size() &&
         layer1.u.cols() == layer1.b.size() &&
         layer2.a.rows() == layer1.b.size() &&
         layer2.a.cols() == layer2.b.size() &&
         layer3.a.rows() == layer2.b.size() &&
         layer3.a.cols() == layer3.b.size();
}

void PolicyParameters::validate() const {
  if (!shapes_consistent()) fail(Errc::ShapeMismatch, "parameter tree");
  bool finite = true;
  for_each_param(*this, [&](double v) { finite = finite && std::isfinite(v); });
  if (!finite) fail(Errc::NonFiniteGradient, "non-finite parameter");
}

int action_dim_for(PolicyMode mode, int num_assets) {
  return mode == PolicyMode::WeightHead ? num_assets : num_assets - 1;
}

PolicyParameters init_params(const PolicyConfig& cfg, int feature_dim,
                             int num_assets) {
  cfg.validate();
  if (feature_dim < 1 || num_assets < 2) {
    fail(Errc::ShapeMismatch, "need feature_dim >= 1 and bond + one stock");
  }
  const int h1 = cfg.hidden_sizes[0];
  const int h2 = cfg.hidden_sizes[1];
  const int act = action_dim_for(cfg.mode, num_assets);
  const int out = act;

  std::mt19937_64 rng(cfg.seed);
  PolicyParameters p;
  p.layer1.a = xavier_uniform(feature_dim, h1, rng);
  p.layer1.b = Eigen::VectorXd::Zero(h1);
  p.layer1.u = xavier_uniform(act, h1, rng);
  p.layer2.a = xavier_uniform(h1, h2, rng);
  p.layer2.b = Eigen::VectorXd::Zero(h2);
  p.layer3.a = xavier_uniform(h2, out, rng);
  p.layer3.b = Eigen::VectorXd::Zero(out);
  return p;
}

PortfolioWeights Action::to_weights() const {
  if (mode != PolicyMode::WeightHead) {
    fail(Errc::ShapeMismatch, "share action has no weight form");
  }
  return PortfolioWeights(values);
}

Action initial_action(const PolicyConfig& cfg, int num_assets) {
  Action a;
  a.mode = cfg.mode;
  if (cfg.mode == PolicyMode::WeightHead) {
    a.values = PortfolioWeights::all_bond(num_assets - 1).values;
  } else {
    a.values = Eigen::VectorXd::Zero(num_assets - 1);
  }
  return a;
}

Eigen::VectorXd DropoutSampler::mask(Eigen::Index n) {
  Eigen::VectorXd m = Eigen::VectorXd::Ones(n);
  if (rate <= 0.0) return m;
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i) = dist(rng) < rate ? 0.0 : scale;
  }
  return m;
}

Action forward(const Eigen::VectorXd& features, const Action& prev,
               const PolicyParameters& params, const PolicyConfig& cfg,
               DropoutSampler* dropout, StepCache* cache) {
  if (features.size() != params.feature_dim()) {
    fail(Errc::ShapeMismatch, "feature vector vs layer 1");
  }
  if (prev.values.size() != params.action_dim()) {
    fail(Errc::ShapeMismatch, "previous action vs feedback matrix");
  }

  // share counts are fed back on a [0, 1] scale
  Eigen::VectorXd feedback = cfg.mode == PolicyMode::ShareHead
                                 ? (prev.values / cfg.max_shares).eval()
                                 : prev.values;

  Eigen::VectorXd z1 =
      params.layer1.a.transpose() * features + params.layer1.b +
      params.layer1.u.transpose() * feedback;
  Eigen::VectorXd mask1 = dropout ? dropout->mask(z1.size())
                                  : Eigen::VectorXd::Ones(z1.size());
  Eigen::VectorXd h1 = z1.cwiseMax(0.0).cwiseProduct(mask1);

  Eigen::VectorXd z2 = params.layer2.a.transpose() * h1 + params.layer2.b;
  Eigen::VectorXd mask2 = dropout ? dropout->mask(z2.size())
                                  : Eigen::VectorXd::Ones(z2.size());
  Eigen::VectorXd h2 = z2.cwiseMax(0.0).cwiseProduct(mask2);

  Eigen::VectorXd z3 = params.layer3.a.transpose() * h2 + params.layer3.b;

  Action out;
  out.mode = cfg.mode;
  Eigen::VectorXd head(z3.size());
  double head_sum = 0.0;
  if (cfg.mode == PolicyMode::WeightHead) {
    if (cfg.output_activation == OutputActivation::SigmoidNormalized) {
      for (Eigen::Index i = 0; i < z3.size(); ++i) {
        head(i) = sigmoid(std::clamp(z3(i), -kLogitClamp, kLogitClamp));
      }
    } else {
      const double zmax = z3.maxCoeff();
      for (Eigen::Index i = 0; i < z3.size(); ++i) {
        head(i) = std::exp(z3(i) - zmax);
      }
    }
    head_sum = head.sum();
    out.values = head / head_sum;
  } else {
    for (Eigen::Index i = 0; i < z3.size(); ++i) head(i) = std::tanh(z3(i));
    out.values = (cfg.max_shares * head).cwiseMax(0.0);
  }

  if (cache) {
    cache->input = features;
    cache->feedback = std::move(feedback);
    cache->z1 = std::move(z1);
    cache->h1 = std::move(h1);
    cache->z2 = std::move(z2);
    cache->h2 = std::move(h2);
    cache->z3 = std::move(z3);
    cache->head = std::move(head);
    cache->head_sum = head_sum;
    cache->mask1 = std::move(mask1);
    cache->mask2 = std::move(mask2);
    cache->action = out.values;
  }
  return out;
}

SequenceResult forward_sequence(const Eigen::MatrixXd& features,
                                const PolicyParameters& params,
                                const PolicyConfig& cfg,
                                DropoutSampler* dropout, bool keep_caches) {
  if (features.rows() == 0) fail(Errc::EmptySlice, "forward_sequence");
  SequenceResult out;
  out.actions.reserve(features.rows());
  if (keep_caches) out.caches.resize(features.rows());
  const int num_assets = cfg.mode == PolicyMode::WeightHead
                             ? static_cast<int>(params.output_dim())
                             : static_cast<int>(params.output_dim()) + 1;
  Action prev = initial_action(cfg, num_assets);
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    StepCache* cache = keep_caches ? &out.caches[t] : nullptr;
    Action a = forward(features.row(t).transpose(), prev, params, cfg, dropout,
                       cache);
    out.actions.push_back(a);
    prev = std::move(a);
  }
  return out;
}

PolicyParameters zeros_like(const PolicyParameters& params) {
  PolicyParameters g;
  g.layer1.a = Eigen::MatrixXd::Zero(params.layer1.a.rows(), params.layer1.a.cols());
  g.layer1.b = Eigen::VectorXd::Zero(params.layer1.b.size());
  g.layer1.u = Eigen::MatrixXd::Zero(params.layer1.u.rows(), params.layer1.u.cols());
  g.layer2.a = Eigen::MatrixXd::Zero(params.layer2.a.rows(), params.layer2.a.cols());
  g.layer2.b = Eigen::VectorXd::Zero(params.layer2.b.size());
  g.layer3.a = Eigen::MatrixXd::Zero(params.layer3.a.rows(), params.layer3.a.cols());
  g.layer3.b = Eigen::VectorXd::Zero(params.layer3.b.size());
  return g;
}

namespace {

template <typename Params, typename Fn>
void visit_blocks(Params& p, Fn&& fn) {
  fn(p.layer1.a);
  fn(p.layer1.b);
  fn(p.layer1.u);
  fn(p.layer2.a);
  fn(p.layer2.b);
  fn(p.layer3.a);
  fn(p.layer3.b);
}

}  // namespace

std::size_t param_count(const PolicyParameters& params) {
  std::size_t n = 0;
  visit_blocks(params, [&](const auto& block) { n += block.size(); });
  return n;
}

void for_each_param(PolicyParameters& params,
                    const std::function<void(double&)>& fn) {
  visit_blocks(params, [&](auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) fn(block.data()[i]);
  });
}

void for_each_param(const PolicyParameters& params,
                    const std::function<void(double)>& fn) {
  visit_blocks(params, [&](const auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) fn(block.data()[i]);
  });
}

double* param_at(PolicyParameters& params, std::size_t flat_index) {
  double* found = nullptr;
  std::size_t seen = 0;
  visit_blocks(params, [&](auto& block) {
    const std::size_t sz = block.size();
    if (!found && flat_index < seen + sz) {
      found = block.data() + (flat_index - seen);
    }
    seen += sz;
  });
  if (!found) fail(Errc::ShapeMismatch, "flat index out of range");
  return found;
}

void axpy(double scale, const PolicyParameters& src, PolicyParameters& dst) {
  if (!dst.shapes_consistent() || param_count(src) != param_count(dst)) {
    fail(Errc::ShapeMismatch, "axpy parameter trees");
  }
  dst.layer1.a += scale * src.layer1.a;
  dst.layer1.b += scale * src.layer1.b;
  dst.layer1.u += scale * src.layer1.u;
  dst.layer2.a += scale * src.layer2.a;
  dst.layer2.b += scale * src.layer2.b;
  dst.layer3.a += scale * src.layer3.a;
  dst.layer3.b += scale * src.layer3.b;
}

double param_norm(const PolicyParameters& params) {
  double ss = 0.0;
  for_each_param(params, [&](double v) { ss += v * v; });
  return std::sqrt(ss);
}

}  // namespace rdnn
