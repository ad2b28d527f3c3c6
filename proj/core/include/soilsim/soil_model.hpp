#pragma once

#include <array>
#include <cstdint>

namespace soilsim {

/// Six-component soil composition.
/// Moisture, carbon and aluminosilicate are mass percentages; the
/// macronutrients N, P, K are on a per-mille (0-10) scale.
struct SoilSample {
  double m_pct = 0.0;  ///< moisture, % in [0, 50]
  double c_pct = 0.0;  ///< organic carbon, % in [0, 50]
  double al_pct = 0.0; ///< aluminosilicate, % in [0, 10]
  double n_pml = 0.0;  ///< nitrogen, per-mille in [0, 10]
  double p_pml = 0.0;  ///< phosphorus, per-mille in [0, 10]
  double k_pml = 0.0;  ///< potassium, per-mille in [0, 10]

  bool is_valid() const;
  /// Throws ConfigError when any component is non-finite or out of range.
  void validate() const;
};

/// Component index order used for label vectors, normalization and reports.
enum class Component : int { M = 0, N = 1, P = 2, K = 3, C = 4, Al = 5 };

inline constexpr int kNumComponents = 6;
inline constexpr const char* kComponentNames[kNumComponents] = {"M", "N", "P", "K", "C", "Al"};

/// Component value in label order [M, N, P, K, C, Al], native units.
std::array<double, 6> label_vector(const SoilSample& s);
SoilSample sample_from_label_vector(const std::array<double, 6>& y);

/// VNIR band wavelengths in nanometres, in sensing-vector order.
inline constexpr int kNumBands = 7;
inline constexpr std::array<int, kNumBands> kVnirBandsNm = {460, 620, 1200, 1300, 1450, 1550, 1650};

/// Observable produced by one sensing pass: bulk relative permittivity
/// plus the seven photodiode voltages.
struct SensingVector {
  double epsilon = 1.0;                  ///< relative permittivity, >= 1
  std::array<double, kNumBands> vnir{};  ///< volts, each in [0, 0.5]

  /// [epsilon; v460; v620; v1200; v1300; v1450; v1550; v1650]
  std::array<double, 8> as_array8() const;
};

/// Measurement-noise settings for sense(). Zero sigmas give the exact
/// deterministic forward model.
struct NoiseConfig {
  double sigma_epsilon_rel = 0.0; ///< relative std of multiplicative permittivity noise
  double sigma_vnir = 0.0;        ///< additive voltage noise std, volts
  std::uint64_t seed = 0;

  void validate() const;
};

/// Defaults used for robustness studies when noise is requested without
/// explicit sigmas.
inline constexpr double kDefaultSigmaEpsilonRel = 0.01;
inline constexpr double kDefaultSigmaVnir = 0.005;

/// Moisture <-> permittivity law, moisture as a fraction:
///   M = 0.1138 * sqrt(epsilon) - 0.1758
inline constexpr double kMoistureSlope = 0.1138;
inline constexpr double kMoistureOffset = 0.1758;
/// Additive permittivity per % of carbon / aluminosilicate.
inline constexpr double kCarbonEpsSlope = 0.16;
inline constexpr double kAluminaEpsSlope = 0.8;

/// Bulk permittivity of a composition. Inverts the moisture law for the
/// moisture backbone and adds linear carbon/aluminosilicate terms;
/// independent of N, P, K.
double permittivity_of(const SoilSample& sample);

/// Seven-band photodiode voltages for a composition. Per-band affine
/// response clamped to [0, 0.5] V.
std::array<double, kNumBands> vnir_response(const SoilSample& sample);

/// Baseline voltage of each band at zero composition.
std::array<double, kNumBands> vnir_baselines();

/// Per-band slope table, volts per native unit of each component
/// (label order M, N, P, K, C, Al).
std::array<std::array<double, kNumComponents>, kNumBands> vnir_slopes();

/// Full forward model with optional measurement noise. Multiplicative
/// Gaussian noise on epsilon, additive Gaussian noise on the voltages
/// (re-clamped); one seeded RNG per call, so identical seeds reproduce
/// identical output bit for bit.
SensingVector sense(const SoilSample& sample, const NoiseConfig& noise = {});

/// Moisture fraction from permittivity. No clamping: small epsilon gives
/// a negative moisture, callers decide how to treat it. Throws
/// std::domain_error for non-finite input or epsilon < 1.
double moisture_from_permittivity(double epsilon);

} // namespace soilsim
