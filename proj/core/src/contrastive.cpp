#include "soilsim/contrastive.hpp"

#include "soilsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace soilsim {

namespace {

/// Sample indices of the reference row and of each component group.
struct GroupIndex {
  int ref = -1;
  std::array<std::vector<int>, kNumComponents> groups;
};

GroupIndex build_group_index(const Dataset& ds) {
  GroupIndex idx;
  for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i) {
    const GroupTag tag = ds.samples[static_cast<std::size_t>(i)].tag;
    if (tag == GroupTag::REF) {
      if (idx.ref >= 0) throw StructureError("more than one REF sample");
      idx.ref = i;
      continue;
    }
    for (int g = 0; g < kNumComponents; ++g)
      if (tag == component_group_tag(static_cast<Component>(g)))
        idx.groups[static_cast<std::size_t>(g)].push_back(i);
  }
  if (idx.ref < 0) throw StructureError("training set has no REF sample");
  for (int g = 0; g < kNumComponents; ++g)
    if (idx.groups[static_cast<std::size_t>(g)].empty())
      throw StructureError(std::string("training set is missing the ") +
                           kComponentNames[g] + " group");
  return idx;
}

/// Forward pass for a whole dataset; rows are samples.
struct ForwardCache {
  Eigen::MatrixXd x_std; // standardized inputs, L x in
  Eigen::MatrixXd h;     // pre-activation,      L x hidden
  Eigen::MatrixXd a;     // relu(h),             L x hidden
  Eigen::MatrixXd z;     // embeddings,          L x D
};

Eigen::MatrixXd raw_inputs(const std::vector<LabeledSample>& xs) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(xs.size()), kInputDim);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = xs[static_cast<std::size_t>(i)].sensing.as_array8();
    for (int j = 0; j < kInputDim; ++j) {
      if (!std::isfinite(row[static_cast<std::size_t>(j)]))
        throw std::domain_error("non-finite sensing feature");
      x(i, j) = row[static_cast<std::size_t>(j)];
    }
  }
  return x;
}

ForwardCache forward_batch(const EncoderParams& p, const std::vector<LabeledSample>& xs) {
  ForwardCache c;
  const Eigen::MatrixXd x = raw_inputs(xs);
  c.x_std = (x.rowwise() - p.feat_mean.transpose()).array().rowwise() /
            p.feat_std.transpose().array();
  c.h = (c.x_std * p.w1.transpose()).rowwise() + p.b1.transpose();
  c.a = c.h.cwiseMax(0.0);
  c.z = (c.a * p.w2.transpose()).rowwise() + p.b2.transpose();
  return c;
}

Eigen::MatrixXd norm_label_matrix(const Dataset& ds) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(ds.samples.size()), kNumComponents);
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    y.row(i) = normalize_labels(ds.samples[static_cast<std::size_t>(i)].composition, ds.norm)
                   .transpose();
  return y;
}

DirectionSet directions_from_embeddings(const Eigen::MatrixXd& z, const GroupIndex& idx) {
  DirectionSet d;
  d.z0 = z.row(idx.ref).transpose();
  d.directions.resize(kNumComponents, z.cols());
  for (int g = 0; g < kNumComponents; ++g) {
    const auto& members = idx.groups[static_cast<std::size_t>(g)];
    Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(z.cols());
    for (int i : members) avg += z.row(i) - z.row(idx.ref);
    d.directions.row(g) = avg / static_cast<double>(members.size());
    d.group_counts[static_cast<std::size_t>(g)] = static_cast<int>(members.size());
  }
  return d;
}

struct CompoundEval {
  double sep = 0.0;
  double ort = 0.0;
  double total = 0.0;
};

/// Loss and, when dz is non-null, the per-sample embedding gradient of
/// lambda_sep*sep + lambda_ort*ort.
CompoundEval eval_compound(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y,
                           const GroupIndex& idx, double lambda_sep, double lambda_ort,
                           Eigen::MatrixXd* dz) {
  const Eigen::Index l = z.rows();
  CompoundEval ev;
  if (dz) dz->setZero(l, z.cols());

  // Separation: sum over unordered pairs of (||z_i-z_j|| - ||y_i-y_j||)^2.
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = i + 1; j < l; ++j) {
      const double dist_z = (z.row(i) - z.row(j)).norm();
      const double dist_y = (y.row(i) - y.row(j)).norm();
      const double diff = dist_z - dist_y;
      ev.sep += diff * diff;
      if (dz && dist_z > 0.0) { // subgradient 0 at coincident embeddings
        const double coeff = lambda_sep * 2.0 * diff / dist_z;
        dz->row(i) += coeff * (z.row(i) - z.row(j));
        dz->row(j) -= coeff * (z.row(i) - z.row(j));
      }
    }
  }

  // Orthogonality: ||A*A^T - I||_F^2 over the direction rows.
  const DirectionSet dirs = directions_from_embeddings(z, idx);
  const Eigen::Matrix<double, kNumComponents, kNumComponents> gram_minus_i =
      dirs.gram() - Eigen::Matrix<double, kNumComponents, kNumComponents>::Identity();
  ev.ort = gram_minus_i.squaredNorm();
  if (dz) {
    // d ort / d a_g = 4 * [(G - I) A]_g ; a_g depends on the group rows
    // (1/n_g each) and on the reference row (-1 each).
    const Eigen::MatrixXd da = 4.0 * gram_minus_i * dirs.directions; // 6 x D
    for (int g = 0; g < kNumComponents; ++g) {
      const auto& members = idx.groups[static_cast<std::size_t>(g)];
      const double inv_n = 1.0 / static_cast<double>(members.size());
      for (int i : members) dz->row(i) += lambda_ort * inv_n * da.row(g);
      dz->row(idx.ref) -= lambda_ort * da.row(g);
    }
  }

  ev.total = lambda_sep * ev.sep + lambda_ort * ev.ort;
  return ev;
}

EncoderGradients backprop(const EncoderParams& p, const ForwardCache& c,
                          const Eigen::MatrixXd& dz) {
  EncoderGradients g;
  g.w2 = dz.transpose() * c.a;
  g.b2 = dz.colwise().sum().transpose();
  const Eigen::MatrixXd ds =
      (dz * p.w2).cwiseProduct((c.h.array() > 0.0).cast<double>().matrix());
  g.w1 = ds.transpose() * c.x_std;
  g.b1 = ds.colwise().sum().transpose();
  return g;
}

struct AdamState {
  EncoderGradients m;
  EncoderGradients v;
  int t = 0;

  explicit AdamState(const EncoderParams& p)
      : m(EncoderGradients::zeros_like(p)), v(EncoderGradients::zeros_like(p)) {}
};

void adam_step(EncoderParams& p, const EncoderGradients& g, AdamState& st, double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++st.t;
  const double bc1 = 1.0 - std::pow(beta1, st.t);
  const double bc2 = 1.0 - std::pow(beta2, st.t);
  auto update = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& grad, Eigen::MatrixXd& m,
                    Eigen::MatrixXd& v) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  };
  auto update_vec = [&](Eigen::VectorXd& w, const Eigen::VectorXd& grad, Eigen::VectorXd& m,
                        Eigen::VectorXd& v) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  };
  update(p.w1, g.w1, st.m.w1, st.v.w1);
  update_vec(p.b1, g.b1, st.m.b1, st.v.b1);
  update(p.w2, g.w2, st.m.w2, st.v.w2);
  update_vec(p.b2, g.b2, st.m.b2, st.v.b2);
}

bool all_finite(const EncoderGradients& g) {
  return g.w1.allFinite() && g.b1.allFinite() && g.w2.allFinite() && g.b2.allFinite();
}

} // namespace

EncoderParams EncoderParams::init(std::uint64_t seed, int input_dim, int hidden_dim,
                                  int embedding_dim) {
  if (input_dim < 1 || hidden_dim < 1 || embedding_dim < 1)
    throw ConfigError("encoder dimensions must be >= 1");
  EncoderParams p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // First layer at moderate scale with a positive bias offset: the
  // rectifier units start active across the standardized data region, so
  // the encoder begins near an affine map and only grows curvature where
  // the loss asks for it. The output layer starts small so the embedding
  // expands smoothly from zero.
  const double s1 = 0.5 / std::sqrt(static_cast<double>(input_dim));
  const double s2 = 0.02 / std::sqrt(static_cast<double>(hidden_dim));
  p.w1.resize(hidden_dim, input_dim);
  for (Eigen::Index r = 0; r < p.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < p.w1.cols(); ++c) p.w1(r, c) = s1 * gauss(rng);
  p.b1.resize(hidden_dim);
  for (Eigen::Index r = 0; r < p.b1.size(); ++r) p.b1(r) = 1.5 + 0.1 * gauss(rng);
  p.w2.resize(embedding_dim, hidden_dim);
  for (Eigen::Index r = 0; r < p.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < p.w2.cols(); ++c) p.w2(r, c) = s2 * gauss(rng);
  p.b2 = Eigen::VectorXd::Zero(embedding_dim);
  p.feat_mean = Eigen::VectorXd::Zero(input_dim);
  p.feat_std = Eigen::VectorXd::Ones(input_dim);
  return p;
}

void EncoderParams::validate() const {
  if (w1.rows() != b1.size() || w2.cols() != w1.rows() || w2.rows() != b2.size() ||
      feat_mean.size() != w1.cols() || feat_std.size() != w1.cols())
    throw ConfigError("inconsistent encoder shapes");
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite() ||
      !feat_mean.allFinite() || !feat_std.allFinite())
    throw ConfigError("non-finite encoder parameters");
  if ((feat_std.array() <= 0.0).any())
    throw ConfigError("standardization std must be > 0 per feature");
}

EncoderGradients EncoderGradients::zeros_like(const EncoderParams& p) {
  EncoderGradients g;
  g.w1 = Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols());
  g.b1 = Eigen::VectorXd::Zero(p.b1.size());
  g.w2 = Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols());
  g.b2 = Eigen::VectorXd::Zero(p.b2.size());
  return g;
}

Eigen::Matrix<double, kNumComponents, kNumComponents> DirectionSet::gram() const {
  return directions * directions.transpose();
}

void TrainConfig::validate() const {
  if (!(lambda_sep >= 0.0) || !(lambda_ort >= 0.0))
    throw ConfigError("loss weights must be >= 0");
  if (!(lambda_sep + lambda_ort > 0.0)) throw ConfigError("at least one loss weight must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

Eigen::VectorXd encode(const EncoderParams& params, const SensingVector& x) {
  params.validate();
  const auto raw = x.as_array8();
  Eigen::VectorXd in(kInputDim);
  for (int j = 0; j < kInputDim; ++j) {
    if (!std::isfinite(raw[static_cast<std::size_t>(j)]))
      throw std::domain_error("non-finite sensing feature");
    in(j) = raw[static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd x_std =
      (in - params.feat_mean).cwiseQuotient(params.feat_std);
  const Eigen::VectorXd a = (params.w1 * x_std + params.b1).cwiseMax(0.0);
  return params.w2 * a + params.b2;
}

Eigen::MatrixXd encode_batch(const EncoderParams& params, const std::vector<LabeledSample>& xs) {
  params.validate();
  return forward_batch(params, xs).z;
}

std::uint64_t encoder_forward_flops(int input_dim, int hidden_dim, int output_dim) {
  const std::uint64_t in = static_cast<std::uint64_t>(input_dim);
  const std::uint64_t h = static_cast<std::uint64_t>(hidden_dim);
  const std::uint64_t out = static_cast<std::uint64_t>(output_dim);
  return 2 * (in * h + h * h + h * out);
}

DirectionSet compute_directions(const EncoderParams& params, const Dataset& training) {
  const GroupIndex idx = build_group_index(training);
  // Per-sample encoding keeps z0 bit-identical to encode() on the same
  // input, so a reference query projects to exactly zero.
  Eigen::MatrixXd z(static_cast<Eigen::Index>(training.samples.size()), params.embedding_dim());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    z.row(i) = encode(params, training.samples[static_cast<std::size_t>(i)].sensing).transpose();
  return directions_from_embeddings(z, idx);
}

double orthogonality_loss(const DirectionSet& dirs) {
  if (!dirs.directions.allFinite()) throw std::domain_error("non-finite direction set");
  return (dirs.gram() - Eigen::Matrix<double, kNumComponents, kNumComponents>::Identity())
      .squaredNorm();
}

double separation_loss(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& norm_labels) {
  if (embeddings.rows() != norm_labels.rows())
    throw std::domain_error("embedding/label count mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < embeddings.rows(); ++j) {
      const double diff =
          (embeddings.row(i) - embeddings.row(j)).norm() -
          (norm_labels.row(i) - norm_labels.row(j)).norm();
      sum += diff * diff;
    }
  }
  return sum;
}

double compound_loss(const EncoderParams& params, const Dataset& training,
                     const TrainConfig& cfg) {
  cfg.validate();
  params.validate();
  const GroupIndex idx = build_group_index(training);
  const ForwardCache c = forward_batch(params, training.samples);
  const Eigen::MatrixXd y = norm_label_matrix(training);
  return eval_compound(c.z, y, idx, cfg.lambda_sep, cfg.lambda_ort, nullptr).total;
}

EncoderGradients grad_compound(const EncoderParams& params, const Dataset& training,
                               const TrainConfig& cfg) {
  cfg.validate();
  params.validate();
  const GroupIndex idx = build_group_index(training);
  const ForwardCache c = forward_batch(params, training.samples);
  const Eigen::MatrixXd y = norm_label_matrix(training);
  Eigen::MatrixXd dz;
  eval_compound(c.z, y, idx, cfg.lambda_sep, cfg.lambda_ort, &dz);
  return backprop(params, c, dz);
}

Eigen::Matrix<double, 6, 1> projection_scores(const DirectionSet& dirs,
                                              const Eigen::VectorXd& embedding, InferMode mode) {
  if (embedding.size() != dirs.z0.size())
    throw std::domain_error("embedding dimension mismatch");
  const Eigen::VectorXd dev = embedding - dirs.z0;
  Eigen::Matrix<double, 6, 1> scores;
  for (int g = 0; g < kNumComponents; ++g) {
    const double dot = dirs.directions.row(g).dot(dev.transpose());
    if (mode == InferMode::PaperLiteral) {
      scores(g) = dot;
    } else {
      const double nn = dirs.directions.row(g).squaredNorm();
      if (nn <= 0.0)
        throw DegenerateModelError(std::string("zero-norm direction for component ") +
                                   kComponentNames[g]);
      scores(g) = dot / nn;
    }
  }
  return scores;
}

SoilSample infer(const ModelBundle& bundle, const SensingVector& x, InferMode mode) {
  const Eigen::VectorXd z = encode(bundle.params, x);
  const Eigen::Matrix<double, 6, 1> scores = projection_scores(bundle.directions, z, mode);
  Eigen::Matrix<double, 6, 1> y_norm;
  for (int g = 0; g < kNumComponents; ++g) {
    const Calibration cal =
        mode == InferMode::Calibrated ? bundle.calibration[static_cast<std::size_t>(g)]
                                      : Calibration{};
    y_norm(g) = bundle.ref_norm_labels(g) + cal.slope * scores(g) + cal.intercept;
    y_norm(g) = std::clamp(y_norm(g), 0.0, 1.0);
  }
  return denormalize_labels(y_norm, bundle.norm);
}

ModelBundle train(const Dataset& training, const TrainConfig& cfg) {
  cfg.validate();
  validate_training_structure(training);
  training.norm.validate();

  // Standardization statistics over the full training sensing vectors.
  const Eigen::MatrixXd x_raw = raw_inputs(training.samples);
  EncoderParams params = EncoderParams::init(cfg.seed);
  params.feat_mean = x_raw.colwise().mean().transpose();
  Eigen::VectorXd var = (x_raw.rowwise() - params.feat_mean.transpose())
                            .array()
                            .square()
                            .colwise()
                            .mean()
                            .transpose();
  params.feat_std = var.array().sqrt().max(0.0).matrix();
  for (Eigen::Index j = 0; j < params.feat_std.size(); ++j)
    if (params.feat_std(j) < 1e-12) params.feat_std(j) = 1.0; // constant feature

  // Hold out one sample per group for early stopping.
  const GroupIndex full_idx = build_group_index(training);
  std::mt19937_64 rng(cfg.seed);
  std::vector<bool> held(training.samples.size(), false);
  for (int g = 0; g < kNumComponents; ++g) {
    const auto& members = full_idx.groups[static_cast<std::size_t>(g)];
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    held[static_cast<std::size_t>(members[pick(rng)])] = true;
  }
  Dataset fit_set, val_set;
  fit_set.norm = val_set.norm = training.norm;
  for (std::size_t i = 0; i < training.samples.size(); ++i)
    (held[i] ? val_set : fit_set).samples.push_back(training.samples[i]);

  const GroupIndex fit_idx = build_group_index(fit_set);
  const Eigen::MatrixXd fit_y = norm_label_matrix(fit_set);
  const Eigen::MatrixXd val_y = norm_label_matrix(val_set);

  AdamState adam(params);
  EncoderParams best = params;
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;

  // The post-update forward pass doubles as the next epoch's cache.
  ForwardCache fit_cache = forward_batch(params, fit_set.samples);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Eigen::MatrixXd dz;
    const CompoundEval ev =
        eval_compound(fit_cache.z, fit_y, fit_idx, cfg.lambda_sep, cfg.lambda_ort, &dz);
    if (!std::isfinite(ev.total))
      throw DivergenceError("training loss became non-finite", static_cast<std::size_t>(epoch));
    const EncoderGradients grads = backprop(params, fit_cache, dz);
    if (!all_finite(grads))
      throw DivergenceError("gradient became non-finite", static_cast<std::size_t>(epoch));
    adam_step(params, grads, adam, cfg.learning_rate);
    fit_cache = forward_batch(params, fit_set.samples);
    if (!fit_cache.z.allFinite())
      throw DivergenceError("embeddings became non-finite", static_cast<std::size_t>(epoch));

    // Validation: separation over every pair that involves a held-out
    // sample (within-validation and validation-to-fit), plus the current
    // orthogonality of the fit-set directions.
    const Eigen::MatrixXd val_z = forward_batch(params, val_set.samples).z;
    double val_sep = 0.0;
    for (Eigen::Index i = 0; i < val_z.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < val_z.rows(); ++j) {
        const double diff = (val_z.row(i) - val_z.row(j)).norm() -
                            (val_y.row(i) - val_y.row(j)).norm();
        val_sep += diff * diff;
      }
      for (Eigen::Index j = 0; j < fit_cache.z.rows(); ++j) {
        const double diff = (val_z.row(i) - fit_cache.z.row(j)).norm() -
                            (val_y.row(i) - fit_y.row(j)).norm();
        val_sep += diff * diff;
      }
    }
    const double val_loss =
        cfg.lambda_sep * val_sep +
        cfg.lambda_ort *
            orthogonality_loss(directions_from_embeddings(fit_cache.z, fit_idx));
    if (!std::isfinite(val_loss))
      throw DivergenceError("validation loss became non-finite",
                            static_cast<std::size_t>(epoch));

    if (val_loss < best_val) {
      best_val = val_loss;
      best = params;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= cfg.patience) {
      break;
    }
  }

  ModelBundle bundle;
  bundle.params = best;
  bundle.directions = compute_directions(best, training);
  bundle.norm = training.norm;
  bundle.ref_norm_labels =
      normalize_labels(training.samples[static_cast<std::size_t>(full_idx.ref)].composition,
                       training.norm);
  bundle.seed = cfg.seed;

  // Least-squares affine map from projection scores to normalized label
  // deviations, fitted on the full training set. Scores go through the
  // same single-sample encode path that inference uses.
  const Eigen::MatrixXd y_all = norm_label_matrix(training);
  const Eigen::Index l = static_cast<Eigen::Index>(training.samples.size());
  Eigen::MatrixXd scores(l, kNumComponents);
  for (Eigen::Index i = 0; i < l; ++i)
    scores.row(i) =
        projection_scores(bundle.directions,
                          encode(best, training.samples[static_cast<std::size_t>(i)].sensing),
                          InferMode::Calibrated)
            .transpose();
  for (int g = 0; g < kNumComponents; ++g) {
    const Eigen::VectorXd sx = scores.col(g);
    const Eigen::VectorXd sy = y_all.col(g).array() - bundle.ref_norm_labels(g);
    const double mean_x = sx.mean(), mean_y = sy.mean();
    const double sxx = (sx.array() - mean_x).square().sum();
    if (sxx < 1e-30)
      throw DegenerateModelError(std::string("projection scores are constant for component ") +
                                 kComponentNames[g]);
    const double sxy = ((sx.array() - mean_x) * (sy.array() - mean_y)).sum();
    Calibration cal;
    cal.slope = sxy / sxx;
    cal.intercept = mean_y - cal.slope * mean_x;
    if (!std::isfinite(cal.slope) || cal.slope == 0.0)
      throw DegenerateModelError(std::string("degenerate calibration slope for component ") +
                                 kComponentNames[g]);
    bundle.calibration[static_cast<std::size_t>(g)] = cal;
  }
  return bundle;
}

} // namespace soilsim
