#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace soilsim {

/// Radio configuration for the buried-array phase model.
struct RfConfig {
  double f_c = 915e6;  ///< carrier frequency, Hz
  double d0 = 0.132;   ///< antenna spacing, metres

  static constexpr double kC0 = 299792458.0; ///< speed of light, m/s

  void validate() const;
};

/// Proper rotation of the array frame relative to the world frame.
class Orientation {
 public:
  Orientation() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Orientation(const Eigen::Quaterniond& q);
  explicit Orientation(const Eigen::Matrix3d& rotation);

  static Orientation identity() { return Orientation(); }
  static Orientation axis_angle(const Eigen::Vector3d& axis, double angle_rad);
  /// Rotations about the world z / y / x axes.
  static Orientation yaw(double angle_rad);
  static Orientation pitch(double angle_rad);
  static Orientation roll(double angle_rad);
  /// Uniformly random rotation (Shoemake's subgroup method).
  static Orientation random(std::mt19937_64& rng);

  Eigen::Matrix3d matrix() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }
  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const { return q_ * v; }
  Eigen::Vector3d rotate_back(const Eigen::Vector3d& v) const { return q_.conjugate() * v; }

 private:
  Eigen::Quaterniond q_;
};

/// Unit transmit direction. The positive z axis points from the buried
/// node toward the above-ground gateway.
class TxDirection {
 public:
  /// Requires ||v|| == 1 within 1e-12; throws ConfigError otherwise.
  explicit TxDirection(const Eigen::Vector3d& v);
  /// Normalizes v (throws ConfigError on a near-zero vector).
  static TxDirection normalized(const Eigen::Vector3d& v);
  /// Random unit vector; optionally rejects directions with z below a floor.
  static TxDirection random(std::mt19937_64& rng, double min_z = -1.0);

  const Eigen::Vector3d& vec() const { return v_; }

 private:
  Eigen::Vector3d v_;
};

/// Three inter-antenna phase shifts, radians. When wrapped, each value
/// lies in (-pi, pi].
struct PhaseTriple {
  std::array<double, 3> phi{};
  bool wrapped = false;
};

/// Result of inverting a phase triple: permittivity, the transmit
/// direction expressed in the array-local frame, the linear-solve
/// residual, and the 2*pi multiples applied per component (zero for
/// unwrapped input).
struct InversionResult {
  double epsilon = 0.0;
  Eigen::Vector3d r_tx_array = Eigen::Vector3d::UnitZ();
  double residual = 0.0;
  std::array<int, 3> unwrap_ints{0, 0, 0};
};

/// Candidate list from the wrapped-phase integer search, best first.
/// `ambiguous` is set when two candidates disagree on epsilon by more
/// than 0.5.
struct WrappedInversion {
  std::vector<InversionResult> candidates;
  bool ambiguous = false;

  const InversionResult& best() const { return candidates.front(); }
};

/// Permittivity prior for the wrapped search, [eps_min, eps_max].
struct EpsilonRange {
  double eps_min = 3.0;
  double eps_max = 40.0;

  void validate() const;
  double midpoint() const { return 0.5 * (eps_min + eps_max); }
};

/// Antenna positions relative to the origin vertex of the regular
/// tetrahedron, array-local frame:
///   d1 = [ sqrt(3)/3*d0,     0, -sqrt(6)/3*d0]
///   d2 = [-sqrt(3)/6*d0, -d0/2, -sqrt(6)/3*d0]
///   d3 = [-sqrt(3)/6*d0,  d0/2, -sqrt(6)/3*d0]
/// All pairwise distances equal d0.
std::array<Eigen::Vector3d, 3> tetra_vertices(const RfConfig& cfg);

/// Unwrapped phase shifts for the three baselines:
///   dphi_k = (2*pi*f_c*sqrt(epsilon)/c0) * ((R*d_k) . r_tx_world)
PhaseTriple forward_phases(double epsilon, const Eigen::Vector3d& r_tx_world,
                           const Orientation& orient, const RfConfig& cfg);

/// Map each component into (-pi, pi]. Idempotent.
PhaseTriple wrap_phases(const PhaseTriple& p);

/// Wrap a single angle into (-pi, pi].
double wrap_angle(double a);

/// Closed-form inversion of an unwrapped triple. Substituting
/// u = sqrt(epsilon)*r_tx turns the three phase equations into the
/// linear system D*u = (c0/(2*pi*f_c))*phi with D the vertex matrix;
/// epsilon = ||u||^2 and r_tx = u/||u|| (array frame).
/// Throws EpsilonOutOfRangeError when ||u|| < 1 and std::domain_error
/// on non-finite input; requires p.wrapped == false.
InversionResult invert_phases(const PhaseTriple& p, const RfConfig& cfg);

/// Integer search over the 2*pi ambiguity of a wrapped triple. Tries all
/// k with |k_i| <= ceil(f_c*sqrt(eps_max)*d0/c0)+1, inverts phi + 2*pi*k,
/// keeps candidates inside the epsilon range whose re-simulated phases
/// match the input modulo 2*pi within match_tol, and sorts them by
/// distance of epsilon to the range midpoint.
/// Throws NoCandidateError when nothing survives.
WrappedInversion invert_wrapped(const PhaseTriple& p, const RfConfig& cfg,
                                const EpsilonRange& range, double match_tol = 1e-9);

/// Dual-antenna baseline phase: (2*pi*f_c*sqrt(epsilon)/c0) * d0 * cos(beta - gamma).
double dual_phase(double epsilon, double beta_rad, double gamma_rad, const RfConfig& cfg);

/// Permittivity a dual-antenna system infers from a phase shift under its
/// perpendicular-placement assumption (cos term taken as 1).
double dual_epsilon_estimate(double phase_rad, const RfConfig& cfg);

/// Rotation-error law of the dual-antenna baseline: estimated/true
/// permittivity equals cos^2(gamma).
double dual_epsilon_error_ratio(double gamma_rad);

/// Independent Gaussian phase noise on each component, seeded.
PhaseTriple add_phase_noise(const PhaseTriple& p, double sigma_rad, std::uint64_t seed);

} // namespace soilsim
