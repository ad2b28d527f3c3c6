#pragma once

#include "soilsim/antenna_array.hpp"

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace soilsim {

/// LoRa preamble parameters. Chirp duration T = 2^sf / bw.
struct ChirpConfig {
  int sf = 9;            ///< spreading factor, [7, 12]
  double bw = 125000.0;  ///< bandwidth, Hz
  double fs = 125000.0;  ///< sample rate, Hz, >= bw
  int n_chirps = 8;      ///< preamble length

  double chirp_duration() const; ///< seconds
  long samples_per_chirp() const;
  long frame_samples() const;
  void validate() const;
};

/// SP4T switching plan: the radio dwells on each of the four ports in
/// order, `dwell` seconds per port, first dwell aligned to the frame
/// start. Ports 1..4 feed the origin antenna and d1..d3. After the last
/// dwell the switch stays on the final port.
struct SwitchSchedule {
  double dwell = 0.0;
  std::array<int, 4> port_order{1, 2, 3, 4};

  /// Default plan: 1.5 chirp periods per port.
  static SwitchSchedule spft_default(const ChirpConfig& cfg);
  /// Checks dwell in (T, 2T] and 4*dwell <= n_chirps*T.
  void validate(const ChirpConfig& cfg) const;
};

/// Channel impairments applied on top of the switching plan.
/// antenna_phases[0] is the origin antenna and must be 0; entries 1..3
/// are the propagation phase shifts of the other antennas.
struct Impairments {
  double cfo = 0.0;    ///< carrier frequency offset, Hz
  double phase0 = 0.0; ///< constant phase offset, radians
  std::array<double, 4> antenna_phases{0.0, 0.0, 0.0, 0.0};

  void validate() const;
};

/// Complex baseband samples.
struct IqFrame {
  std::vector<std::complex<double>> samples;
  double sample_rate = 0.0;
};

/// n_chirps identical unit-magnitude up-chirps,
/// s(t) = exp(j*2*pi*(-bw/2*t + bw/(2T)*t^2)) per chirp period.
IqFrame gen_preamble(const ChirpConfig& cfg);

/// Multiply sample n by exp(j*(2*pi*cfo*t_n + phase0 + antenna_phases[port(t_n)])).
/// Magnitudes are preserved. Throws ScheduleError when the schedule
/// overruns the frame.
IqFrame apply_channel(const IqFrame& frame, const Impairments& imp, const SwitchSchedule& sched);

/// Additive complex white Gaussian noise at the given SNR (signal power
/// taken as the frame's mean square magnitude).
IqFrame add_awgn(const IqFrame& frame, double snr_db, std::uint64_t seed);

/// Chirp-ratio extraction of the three inter-antenna phase shifts.
///
/// Dividing samples one chirp period apart gives a constant-phase ratio:
/// within a dwell its angle is the common CFO advance 2*pi*cfo*T, across
/// a switch it additionally carries the phase step between the ports.
/// Subtracting the same-antenna angle and accumulating the per-switch
/// steps yields the wrapped shifts of antennas 2..4 relative to the
/// origin. The constant offset cancels in every ratio.
///
/// Throws ScheduleError when the frame has no same-antenna pair or a
/// port transition is missing, std::domain_error on empty/zero samples.
PhaseTriple extract_phase_triple(const IqFrame& frame, const ChirpConfig& cfg,
                                 const SwitchSchedule& sched);

/// IQ dump: interleaved float64 I/Q, little-endian, plus a sidecar text
/// header `<path>.hdr` recording fs, sf, bw and n_chirps.
void save_iq(const IqFrame& frame, const ChirpConfig& cfg, const std::string& path);
IqFrame load_iq(const std::string& path, ChirpConfig* cfg_out = nullptr);

} // namespace soilsim
