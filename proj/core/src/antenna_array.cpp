#include "soilsim/antenna_array.hpp"

#include "soilsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace soilsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Matrix3d vertex_matrix(const RfConfig& cfg) {
  const auto d = tetra_vertices(cfg);
  Eigen::Matrix3d m;
  for (int k = 0; k < 3; ++k) m.row(k) = d[k].transpose();
  return m;
}

} // namespace

void RfConfig::validate() const {
  if (!(f_c > 0.0) || !std::isfinite(f_c)) throw ConfigError("carrier frequency must be > 0");
  if (!(d0 > 0.0) || !std::isfinite(d0)) throw ConfigError("antenna spacing must be > 0");
}

Orientation::Orientation(const Eigen::Quaterniond& q) : q_(q.normalized()) {
  const Eigen::Matrix3d r = q_.toRotationMatrix();
  if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-12 ||
      r.determinant() < 0.0)
    throw ConfigError("orientation is not a proper rotation");
}

Orientation::Orientation(const Eigen::Matrix3d& rotation) {
  if ((rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >
          1e-12 ||
      rotation.determinant() < 0.0)
    throw ConfigError("orientation is not a proper rotation");
  q_ = Eigen::Quaterniond(rotation).normalized();
}

Orientation Orientation::axis_angle(const Eigen::Vector3d& axis, double angle_rad) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("rotation axis must be nonzero");
  return Orientation(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis / n)));
}

Orientation Orientation::yaw(double angle_rad) {
  return axis_angle(Eigen::Vector3d::UnitZ(), angle_rad);
}
Orientation Orientation::pitch(double angle_rad) {
  return axis_angle(Eigen::Vector3d::UnitY(), angle_rad);
}
Orientation Orientation::roll(double angle_rad) {
  return axis_angle(Eigen::Vector3d::UnitX(), angle_rad);
}

Orientation Orientation::random(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u1 = uni(rng), u2 = uni(rng), u3 = uni(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  Eigen::Quaterniond q(a * std::sin(kTwoPi * u2), a * std::cos(kTwoPi * u2),
                       b * std::sin(kTwoPi * u3), b * std::cos(kTwoPi * u3));
  return Orientation(q);
}

TxDirection::TxDirection(const Eigen::Vector3d& v) : v_(v) {
  if (std::abs(v.norm() - 1.0) > 1e-12) throw ConfigError("transmit direction must be unit length");
}

TxDirection TxDirection::normalized(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (!(n > 1e-300) || !std::isfinite(n))
    throw ConfigError("cannot normalize a zero transmit direction");
  return TxDirection(Eigen::Vector3d(v / n));
}

TxDirection TxDirection::random(std::mt19937_64& rng, double min_z) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
    const double n = v.norm();
    if (n < 1e-12) continue;
    v /= n;
    if (v.z() >= min_z) return TxDirection(v);
  }
}

void EpsilonRange::validate() const {
  if (!(eps_min >= 1.0)) throw ConfigError("epsilon range must start at >= 1");
  if (!(eps_max <= 45.0)) throw ConfigError("epsilon range must end at <= 45");
  if (!(eps_max > eps_min)) throw ConfigError("epsilon range must be non-empty");
}

std::array<Eigen::Vector3d, 3> tetra_vertices(const RfConfig& cfg) {
  cfg.validate();
  const double d0 = cfg.d0;
  const double s3 = std::sqrt(3.0), s6 = std::sqrt(6.0);
  return {Eigen::Vector3d(s3 / 3.0 * d0, 0.0, -s6 / 3.0 * d0),
          Eigen::Vector3d(-s3 / 6.0 * d0, -0.5 * d0, -s6 / 3.0 * d0),
          Eigen::Vector3d(-s3 / 6.0 * d0, 0.5 * d0, -s6 / 3.0 * d0)};
}

PhaseTriple forward_phases(double epsilon, const Eigen::Vector3d& r_tx_world,
                           const Orientation& orient, const RfConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(epsilon) || epsilon < 1.0)
    throw std::domain_error("permittivity must be finite and >= 1");
  if (std::abs(r_tx_world.norm() - 1.0) > 1e-9)
    throw ConfigError("transmit direction must be unit length");

  const double scale = kTwoPi * cfg.f_c * std::sqrt(epsilon) / RfConfig::kC0;
  const Eigen::Matrix3d r = orient.matrix();
  const auto d = tetra_vertices(cfg);
  PhaseTriple p;
  p.wrapped = false;
  for (int k = 0; k < 3; ++k) p.phi[k] = scale * (r * d[k]).dot(r_tx_world);
  return p;
}

double wrap_angle(double a) {
  double w = std::remainder(a, kTwoPi); // (-pi, pi], remainder returns [-pi, pi]
  if (w <= -std::numbers::pi) w += kTwoPi;
  return w;
}

PhaseTriple wrap_phases(const PhaseTriple& p) {
  PhaseTriple out;
  out.wrapped = true;
  for (int k = 0; k < 3; ++k) out.phi[k] = wrap_angle(p.phi[k]);
  return out;
}

InversionResult invert_phases(const PhaseTriple& p, const RfConfig& cfg) {
  cfg.validate();
  if (p.wrapped) throw ConfigError("invert_phases requires unwrapped phases");
  for (double v : p.phi)
    if (!std::isfinite(v)) throw std::domain_error("non-finite phase");

  const Eigen::Matrix3d d = vertex_matrix(cfg);
  const Eigen::Vector3d rhs =
      RfConfig::kC0 / (kTwoPi * cfg.f_c) * Eigen::Vector3d(p.phi[0], p.phi[1], p.phi[2]);
  const Eigen::Vector3d u = d.partialPivLu().solve(rhs);

  InversionResult res;
  res.residual = (d * u - rhs).norm();
  const double norm = u.norm();
  res.epsilon = norm * norm;
  if (norm < 1.0) {
    std::ostringstream os;
    os << "inverted permittivity " << res.epsilon << " is below the physical bound of 1";
    throw EpsilonOutOfRangeError(os.str());
  }
  res.r_tx_array = u / norm;
  return res;
}

WrappedInversion invert_wrapped(const PhaseTriple& p, const RfConfig& cfg,
                                const EpsilonRange& range, double match_tol) {
  cfg.validate();
  range.validate();
  if (!p.wrapped) throw ConfigError("invert_wrapped requires wrapped phases");
  for (double v : p.phi)
    if (!std::isfinite(v)) throw std::domain_error("non-finite phase");

  const int k_max =
      static_cast<int>(std::ceil(cfg.f_c * std::sqrt(range.eps_max) * cfg.d0 / RfConfig::kC0)) + 1;
  const Eigen::Matrix3d d = vertex_matrix(cfg);
  const Eigen::PartialPivLU<Eigen::Matrix3d> lu = d.partialPivLu();
  const double phase_scale = RfConfig::kC0 / (kTwoPi * cfg.f_c);

  WrappedInversion out;
  for (int k1 = -k_max; k1 <= k_max; ++k1) {
    for (int k2 = -k_max; k2 <= k_max; ++k2) {
      for (int k3 = -k_max; k3 <= k_max; ++k3) {
        const Eigen::Vector3d phi(p.phi[0] + kTwoPi * k1, p.phi[1] + kTwoPi * k2,
                                  p.phi[2] + kTwoPi * k3);
        const Eigen::Vector3d u = lu.solve(phase_scale * phi);
        const double eps = u.squaredNorm();
        if (eps < range.eps_min || eps > range.eps_max) continue;

        // Re-simulate in the array frame and compare modulo 2*pi.
        const double scale = kTwoPi * cfg.f_c * std::sqrt(eps) / RfConfig::kC0;
        const Eigen::Vector3d r = u / u.norm();
        double err = 0.0;
        for (int i = 0; i < 3; ++i) {
          const double resim = scale * d.row(i).dot(r);
          err = std::max(err, std::abs(wrap_angle(resim - p.phi[i])));
        }
        if (err > match_tol) continue;

        InversionResult cand;
        cand.epsilon = eps;
        cand.r_tx_array = r;
        cand.residual = err;
        cand.unwrap_ints = {k1, k2, k3};
        out.candidates.push_back(cand);
      }
    }
  }
  if (out.candidates.empty())
    throw NoCandidateError("no unwrap candidate matches the phases in the epsilon range");

  const double mid = range.midpoint();
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [mid](const InversionResult& a, const InversionResult& b) {
                     return std::abs(a.epsilon - mid) < std::abs(b.epsilon - mid);
                   });
  for (std::size_t i = 0; i + 1 < out.candidates.size() && !out.ambiguous; ++i)
    for (std::size_t j = i + 1; j < out.candidates.size(); ++j)
      if (std::abs(out.candidates[i].epsilon - out.candidates[j].epsilon) > 0.5) {
        out.ambiguous = true;
        break;
      }
  return out;
}

double dual_phase(double epsilon, double beta_rad, double gamma_rad, const RfConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(epsilon) || epsilon < 1.0)
    throw std::domain_error("permittivity must be finite and >= 1");
  return kTwoPi * cfg.f_c * std::sqrt(epsilon) / RfConfig::kC0 * cfg.d0 *
         std::cos(beta_rad - gamma_rad);
}

double dual_epsilon_estimate(double phase_rad, const RfConfig& cfg) {
  cfg.validate();
  const double root = phase_rad * RfConfig::kC0 / (kTwoPi * cfg.f_c * cfg.d0);
  return root * root;
}

double dual_epsilon_error_ratio(double gamma_rad) {
  const double c = std::cos(gamma_rad);
  return c * c;
}

PhaseTriple add_phase_noise(const PhaseTriple& p, double sigma_rad, std::uint64_t seed) {
  if (!(sigma_rad >= 0.0)) throw ConfigError("phase noise sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PhaseTriple out = p;
  for (double& v : out.phi) v += sigma_rad * gauss(rng);
  if (p.wrapped) out = wrap_phases(out);
  return out;
}

} // namespace soilsim
