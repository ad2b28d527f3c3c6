#pragma once

#include "soilsim/dataset.hpp"
#include "soilsim/soil_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace soilsim {

inline constexpr int kInputDim = 8;      ///< [epsilon; 7 VNIR voltages]
inline constexpr int kEmbeddingDim = 512;

/// Two-layer encoder mapping a standardized sensing vector into the
/// latent space: z = W2 * relu(W1 * x + b1) + b2. The second layer is
/// linear so embeddings are free to match label distances; the six-way
/// output head is realized by the direction projection at inference.
struct EncoderParams {
  Eigen::MatrixXd w1; ///< hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2; ///< embedding x hidden
  Eigen::VectorXd b2;
  Eigen::VectorXd feat_mean; ///< per-feature standardization, input dim
  Eigen::VectorXd feat_std;  ///< > 0 per feature

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int embedding_dim() const { return static_cast<int>(w2.rows()); }

  /// Seeded small-variance initialization (sigma = 1/sqrt(fan_in),
  /// zero biases, identity standardization).
  static EncoderParams init(std::uint64_t seed, int input_dim = kInputDim,
                            int hidden_dim = kEmbeddingDim, int embedding_dim = kEmbeddingDim);
  void validate() const;
};

/// Gradient container with the same shapes as EncoderParams.
struct EncoderGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  static EncoderGradients zeros_like(const EncoderParams& p);
};

/// Reference embedding and the six averaged component directions,
///   z_avg_g = (1/n_g) * sum_i (z_g_i - z0),
/// rows of `directions` in label order [M, N, P, K, C, Al].
struct DirectionSet {
  Eigen::Matrix<double, kNumComponents, Eigen::Dynamic> directions;
  Eigen::VectorXd z0;
  std::array<int, kNumComponents> group_counts{};

  /// 6x6 Gram of the direction rows.
  Eigen::Matrix<double, kNumComponents, kNumComponents> gram() const;
};

struct TrainConfig {
  double lambda_sep = 0.82;
  double lambda_ort = 0.18;
  double learning_rate = 1e-3;
  int max_epochs = 5000;
  int patience = 200; ///< epochs without validation improvement before stopping
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-component affine map from raw projection score to normalized
/// label deviation.
struct Calibration {
  double slope = 1.0;
  double intercept = 0.0;
};

/// Everything needed for inference: encoder, directions, reference
/// embedding, normalization spec, reference normalized labels and the
/// least-squares score calibration.
struct ModelBundle {
  EncoderParams params;
  DirectionSet directions;
  NormSpec norm = NormSpec::canonical();
  std::array<Calibration, kNumComponents> calibration{};
  Eigen::Matrix<double, 6, 1> ref_norm_labels = Eigen::Matrix<double, 6, 1>::Zero();
  std::uint64_t seed = 0;
};

/// Forward pass for one sensing vector.
Eigen::VectorXd encode(const EncoderParams& params, const SensingVector& x);
/// Rows = samples. Throws std::domain_error on non-finite input.
Eigen::MatrixXd encode_batch(const EncoderParams& params, const std::vector<LabeledSample>& xs);

/// Multiply-add count of one forward pass through both hidden layers and
/// the six-way projection head.
std::uint64_t encoder_forward_flops(int input_dim = kInputDim, int hidden_dim = kEmbeddingDim,
                                    int output_dim = kNumComponents);

/// Reference embedding + group-averaged directions over a structured
/// dataset. Throws StructureError when REF or a component group is
/// missing.
DirectionSet compute_directions(const EncoderParams& params, const Dataset& training);

/// || Z*Z^T - I ||_F^2 over the six direction rows. Zero exactly when
/// the directions are orthonormal.
double orthogonality_loss(const DirectionSet& dirs);

/// Sum over unordered sample pairs of
///   (||z_i - z_j|| - ||y_i - y_j||)^2
/// with normalized labels y. Zero exactly when every embedding distance
/// matches its label distance.
double separation_loss(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& norm_labels);

/// lambda_sep * separation + lambda_ort * orthogonality, recomputing
/// embeddings and directions from scratch.
double compound_loss(const EncoderParams& params, const Dataset& training, const TrainConfig& cfg);

/// Exact analytic gradient of compound_loss, including the dependence of
/// the reference embedding and every group direction on the encoder
/// parameters. Coincident embeddings use subgradient 0.
EncoderGradients grad_compound(const EncoderParams& params, const Dataset& training,
                               const TrainConfig& cfg);

/// Full-batch Adam over the compound loss with a per-group held-out
/// validation split for early stopping. The best-validation parameters
/// are restored, then directions and the affine score calibration are
/// fitted on the complete training set. Deterministic per seed.
/// Throws DivergenceError (with epoch) when the loss becomes non-finite.
ModelBundle train(const Dataset& training, const TrainConfig& cfg);

enum class InferMode {
  Calibrated,  ///< normalized projection + least-squares affine calibration
  PaperLiteral ///< raw dot-product scores, slope 1, intercept 0
};

/// Six projection scores of an embedding against the directions.
/// Calibrated mode divides by ||z_avg_g||^2, PaperLiteral is the plain
/// dot product. Throws DegenerateModelError on a zero-norm direction.
Eigen::Matrix<double, 6, 1> projection_scores(const DirectionSet& dirs,
                                              const Eigen::VectorXd& embedding, InferMode mode);

/// Composition estimate for a new sensing vector: project the embedding
/// deviation onto the stored directions, map scores through the
/// calibration, clamp to [0,1] in normalized space and denormalize.
SoilSample infer(const ModelBundle& bundle, const SensingVector& x,
                 InferMode mode = InferMode::Calibrated);

} // namespace soilsim
