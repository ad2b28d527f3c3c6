#include "soilsim/soil_model.hpp"

#include "soilsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace soilsim {

namespace {

struct FieldRange {
  const char* name;
  double SoilSample::* field;
  double lo;
  double hi;
};

constexpr FieldRange kFieldRanges[] = {
    {"m_pct", &SoilSample::m_pct, 0.0, 50.0},   {"c_pct", &SoilSample::c_pct, 0.0, 50.0},
    {"al_pct", &SoilSample::al_pct, 0.0, 10.0}, {"n_pml", &SoilSample::n_pml, 0.0, 10.0},
    {"p_pml", &SoilSample::p_pml, 0.0, 10.0},   {"k_pml", &SoilSample::k_pml, 0.0, 10.0},
};

// Band rows in kVnirBandsNm order {460, 620, 1200, 1300, 1450, 1550, 1650},
// slope columns in label order [M, N, P, K, C, Al]. One dominant slope per
// band reproduces the component-specific wavelength mapping; the small
// cross terms are the interference the learner has to untangle.
constexpr std::array<double, kNumBands> kBaselines = {0.30, 0.30, 0.22, 0.28,
                                                      0.30, 0.28, 0.30};

constexpr std::array<std::array<double, kNumComponents>, kNumBands> kSlopes = {{
    // M        N        P        K        C        Al
    {0.0, 0.0, 0.0, -0.020, 0.0, 0.0},                      // 460 nm: K
    {0.0, 0.0, -0.020, 0.0, 0.0, 0.0},                      // 620 nm: P
    {-0.001, -0.021, 0.0, 0.0, 0.0, 0.014},                 // 1200 nm: N, opposed by Al
    {-0.0015, -0.004, -0.004, -0.004, -0.0012, 0.004},      // 1300 nm: combined effects
    {-0.0056, 0.0, 0.0, 0.0, -0.0004, -0.0005},             // 1450 nm: M
    {-0.0015, -0.004, -0.004, -0.004, -0.0012, 0.004},      // 1550 nm: combined effects
    {-0.0008, 0.0, 0.0, 0.0, -0.004, -0.0006},              // 1650 nm: C
}};

constexpr double kVoltageMax = 0.5;

} // namespace

bool SoilSample::is_valid() const {
  for (const auto& r : kFieldRanges) {
    const double v = this->*(r.field);
    if (!std::isfinite(v) || v < r.lo || v > r.hi) return false;
  }
  return true;
}

void SoilSample::validate() const {
  for (const auto& r : kFieldRanges) {
    const double v = this->*(r.field);
    if (!std::isfinite(v) || v < r.lo || v > r.hi) {
      std::ostringstream os;
      os << "soil component " << r.name << " = " << v << " outside [" << r.lo << ", " << r.hi
         << "]";
      throw ConfigError(os.str());
    }
  }
}

std::array<double, 6> label_vector(const SoilSample& s) {
  return {s.m_pct, s.n_pml, s.p_pml, s.k_pml, s.c_pct, s.al_pct};
}

SoilSample sample_from_label_vector(const std::array<double, 6>& y) {
  SoilSample s;
  s.m_pct = y[0];
  s.n_pml = y[1];
  s.p_pml = y[2];
  s.k_pml = y[3];
  s.c_pct = y[4];
  s.al_pct = y[5];
  return s;
}

std::array<double, 8> SensingVector::as_array8() const {
  return {epsilon, vnir[0], vnir[1], vnir[2], vnir[3], vnir[4], vnir[5], vnir[6]};
}

void NoiseConfig::validate() const {
  if (!(sigma_epsilon_rel >= 0.0) || !(sigma_vnir >= 0.0))
    throw ConfigError("noise sigmas must be >= 0");
}

double permittivity_of(const SoilSample& sample) {
  sample.validate();
  const double root = (sample.m_pct / 100.0 + kMoistureOffset) / kMoistureSlope;
  return root * root + kCarbonEpsSlope * sample.c_pct + kAluminaEpsSlope * sample.al_pct;
}

std::array<double, kNumBands> vnir_baselines() { return kBaselines; }

std::array<std::array<double, kNumComponents>, kNumBands> vnir_slopes() { return kSlopes; }

std::array<double, kNumBands> vnir_response(const SoilSample& sample) {
  sample.validate();
  const std::array<double, 6> y = label_vector(sample);
  std::array<double, kNumBands> v{};
  for (int b = 0; b < kNumBands; ++b) {
    double volts = kBaselines[b];
    for (int g = 0; g < kNumComponents; ++g) volts += kSlopes[b][g] * y[g];
    v[b] = std::clamp(volts, 0.0, kVoltageMax);
  }
  return v;
}

SensingVector sense(const SoilSample& sample, const NoiseConfig& noise) {
  noise.validate();
  SensingVector out;
  out.epsilon = permittivity_of(sample);
  out.vnir = vnir_response(sample);
  if (noise.sigma_epsilon_rel == 0.0 && noise.sigma_vnir == 0.0) return out;

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (noise.sigma_epsilon_rel > 0.0)
    out.epsilon *= 1.0 + noise.sigma_epsilon_rel * gauss(rng);
  if (noise.sigma_vnir > 0.0) {
    for (double& v : out.vnir)
      v = std::clamp(v + noise.sigma_vnir * gauss(rng), 0.0, kVoltageMax);
  }
  return out;
}

double moisture_from_permittivity(double epsilon) {
  if (!std::isfinite(epsilon) || epsilon < 1.0)
    throw std::domain_error("permittivity must be finite and >= 1");
  return kMoistureSlope * std::sqrt(epsilon) - kMoistureOffset;
}

} // namespace soilsim
