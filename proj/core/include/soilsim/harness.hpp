#pragma once

#include "soilsim/antenna_array.hpp"
#include "soilsim/contrastive.hpp"
#include "soilsim/dataset.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace soilsim {

/// Per-component mean absolute error in reporting units: % for M, C and
/// Al, per-mille for N, P, K (the native units of SoilSample fields).
struct MaeReport {
  std::array<double, kNumComponents> mae{};
  std::size_t count = 0;
  std::string fingerprint;

  double average() const;
};

/// Throws std::domain_error on length mismatch or empty input.
MaeReport mae(const std::vector<SoilSample>& preds, const std::vector<SoilSample>& truth);

/// Constant predictor returning the component-wise mean of the training
/// labels; the reference point for learning-quality checks.
SoilSample mean_predictor(const Dataset& training);

enum class AblationMode { Full, NoSep, NoOrt, DualAntenna };

const char* to_string(AblationMode mode);
AblationMode ablation_mode_from_string(const std::string& s);

struct EvalOptions {
  std::uint64_t train_seed = 1;
  std::uint64_t test_seed = 2;
  NoiseConfig noise;                       ///< applied to test sensing vectors
  AblationMode mode = AblationMode::Full;
  std::optional<double> gamma_rad;         ///< dual-antenna rotation; sampled from test_seed when unset
  std::size_t test_count = 55;
  InferMode infer_mode = InferMode::Calibrated;
  TrainConfig train_cfg;                   ///< lambdas are overridden by ablation mode
};

struct EvalResult {
  MaeReport model;
  MaeReport baseline; ///< mean-predictor on the same test set
  ModelBundle bundle;
  double gamma_rad = 0.0; ///< rotation actually used (DualAntenna only)
  std::vector<SoilSample> predictions;
  std::vector<SoilSample> truths;
};

/// Canonical pipeline: generate the structured training set, train under
/// the ablation mode, generate the random test set, evaluate.
/// NoSep/NoOrt zero the corresponding loss weight; DualAntenna replaces
/// each test permittivity by the dual-antenna estimate under the run's
/// rotation before inference.
EvalResult run_eval(const EvalOptions& opt);

/// Evaluate an existing bundle on a dataset (no training).
EvalResult evaluate_bundle(const ModelBundle& bundle, const Dataset& training, const Dataset& test,
                           const EvalOptions& opt);

struct OrientationCase {
  std::string name;
  Orientation orientation;
};

/// yaw90 / pitch90 / roll90 plus `n_random` seeded random throws,
/// identity first.
std::vector<OrientationCase> standard_orientations(int n_random, std::uint64_t seed);

struct OrientSweepOptions {
  double epsilon_true = 16.69;
  Eigen::Vector3d r_tx_world = Eigen::Vector3d::UnitZ();
  RfConfig rf;
  bool through_chirp = false;   ///< route phases through the IQ pipeline
  bool wrapped = false;         ///< wrap phases and invert via integer search
  double phase_noise_sigma = 0.0;
  int noise_draws = 100;
  std::uint64_t seed = 7;
};

struct OrientSweepRow {
  std::string name;
  double eps_hat = 0.0;     ///< noiseless estimate (best candidate when wrapped)
  bool ambiguous = false;   ///< wrapped search found conflicting candidates
  std::size_t n_candidates = 1;
  double noisy_mean = 0.0;  ///< over noise_draws (when phase_noise_sigma > 0)
  double noisy_std = 0.0;
};

std::vector<OrientSweepRow> run_orient_sweep(const std::vector<OrientationCase>& cases,
                                             const OrientSweepOptions& opt);

struct DataSweepRow {
  std::size_t size = 0;
  MaeReport report;
};

/// Retrain at each training-set size. Sizes below 43 subsample the
/// structured groups (REF and at least one sample per group retained),
/// sizes above 43 add random in-range samples. Requires sizes >= 28.
std::vector<DataSweepRow> run_data_sweep(const std::vector<std::size_t>& sizes,
                                         const EvalOptions& opt);

/// Build a training set of the requested size as run_data_sweep does;
/// augmented samples are sensed under the given noise.
Dataset resize_training_set(const Dataset& canonical, std::size_t size, std::uint64_t seed,
                            const NoiseConfig& noise = {});

/// Aligned text table for one or more reports (row label -> report).
std::string format_mae_table(const std::vector<std::pair<std::string, MaeReport>>& rows);
/// Machine-readable twin: label,count,mae_m,...,mae_al,fingerprint.
void write_mae_csv(const std::vector<std::pair<std::string, MaeReport>>& rows,
                   const std::string& path);

/// Reproducibility manifest: tool version, subcommand, every flag and
/// seed of the run, one `key=value` per line plus the reconstructed
/// command line.
void write_manifest(const std::string& path, const std::string& subcommand,
                    const std::vector<std::pair<std::string, std::string>>& entries);

} // namespace soilsim
