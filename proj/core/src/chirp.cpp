#include "soilsim/chirp.hpp"

#include "soilsim/errors.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

namespace soilsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

long dwell_samples(const SwitchSchedule& sched, double fs) {
  return std::lround(sched.dwell * fs);
}

// Port index (0..3) active at sample n; the switch stays on the last
// port once the schedule is exhausted.
int port_at(long n, long per_dwell) {
  const long idx = n / per_dwell;
  return static_cast<int>(idx < 3 ? idx : 3);
}

} // namespace

double ChirpConfig::chirp_duration() const { return std::ldexp(1.0, sf) / bw; }

long ChirpConfig::samples_per_chirp() const { return std::lround(chirp_duration() * fs); }

long ChirpConfig::frame_samples() const { return samples_per_chirp() * n_chirps; }

void ChirpConfig::validate() const {
  if (sf < 7 || sf > 12) throw ConfigError("spreading factor must be in [7, 12]");
  if (!(bw > 0.0)) throw ConfigError("bandwidth must be > 0");
  if (!(fs >= bw)) throw ConfigError("sample rate must be >= bandwidth");
  if (n_chirps < 1) throw ConfigError("preamble needs at least one chirp");
}

SwitchSchedule SwitchSchedule::spft_default(const ChirpConfig& cfg) {
  cfg.validate();
  SwitchSchedule s;
  s.dwell = 1.5 * cfg.chirp_duration();
  return s;
}

void SwitchSchedule::validate(const ChirpConfig& cfg) const {
  cfg.validate();
  const double t = cfg.chirp_duration();
  if (!(dwell > t) || !(dwell <= 2.0 * t))
    throw ScheduleError("dwell must lie in (T, 2T]");
  if (4.0 * dwell > cfg.n_chirps * t + 1e-12)
    throw ScheduleError("switch schedule exceeds the preamble duration");
  std::array<bool, 5> seen{};
  for (int p : port_order) {
    if (p < 1 || p > 4 || seen[p]) throw ScheduleError("port order must be a permutation of 1..4");
    seen[p] = true;
  }
}

void Impairments::validate() const {
  if (antenna_phases[0] != 0.0)
    throw ConfigError("origin antenna phase is the reference and must be 0");
}

IqFrame gen_preamble(const ChirpConfig& cfg) {
  cfg.validate();
  const long n_per = cfg.samples_per_chirp();
  const double t_chirp = cfg.chirp_duration();
  IqFrame frame;
  frame.sample_rate = cfg.fs;
  frame.samples.resize(static_cast<std::size_t>(n_per) * cfg.n_chirps);

  // One chirp, replicated: phase(t) = 2*pi*(-bw/2*t + bw/(2T)*t^2).
  std::vector<std::complex<double>> chirp(static_cast<std::size_t>(n_per));
  for (long n = 0; n < n_per; ++n) {
    const double t = static_cast<double>(n) / cfg.fs;
    const double phase = kTwoPi * (-0.5 * cfg.bw * t + cfg.bw / (2.0 * t_chirp) * t * t);
    chirp[static_cast<std::size_t>(n)] = std::polar(1.0, phase);
  }
  for (int c = 0; c < cfg.n_chirps; ++c)
    std::copy(chirp.begin(), chirp.end(),
              frame.samples.begin() + static_cast<std::ptrdiff_t>(c) * n_per);
  return frame;
}

IqFrame apply_channel(const IqFrame& frame, const Impairments& imp, const SwitchSchedule& sched) {
  imp.validate();
  if (frame.samples.empty() || !(frame.sample_rate > 0.0))
    throw std::domain_error("empty IQ frame");
  const long per_dwell = dwell_samples(sched, frame.sample_rate);
  if (per_dwell < 1) throw ScheduleError("dwell shorter than one sample");
  if (4 * per_dwell > static_cast<long>(frame.samples.size()))
    throw ScheduleError("switch schedule overruns the frame");

  IqFrame out;
  out.sample_rate = frame.sample_rate;
  out.samples.resize(frame.samples.size());
  for (long n = 0; n < static_cast<long>(frame.samples.size()); ++n) {
    const double t = static_cast<double>(n) / frame.sample_rate;
    const int port = sched.port_order[port_at(n, per_dwell)];
    const double phase = kTwoPi * imp.cfo * t + imp.phase0 + imp.antenna_phases[port - 1];
    out.samples[static_cast<std::size_t>(n)] =
        frame.samples[static_cast<std::size_t>(n)] * std::polar(1.0, phase);
  }
  return out;
}

IqFrame add_awgn(const IqFrame& frame, double snr_db, std::uint64_t seed) {
  if (frame.samples.empty()) throw std::domain_error("empty IQ frame");
  double power = 0.0;
  for (const auto& s : frame.samples) power += std::norm(s);
  power /= static_cast<double>(frame.samples.size());
  const double noise_power = power / std::pow(10.0, snr_db / 10.0);
  const double sigma = std::sqrt(noise_power / 2.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  IqFrame out = frame;
  for (auto& s : out.samples) s += std::complex<double>(sigma * gauss(rng), sigma * gauss(rng));
  return out;
}

PhaseTriple extract_phase_triple(const IqFrame& frame, const ChirpConfig& cfg,
                                 const SwitchSchedule& sched) {
  cfg.validate();
  sched.validate(cfg);
  if (frame.samples.empty()) throw std::domain_error("empty IQ frame");
  const long n_per = cfg.samples_per_chirp();
  const long total = static_cast<long>(frame.samples.size());
  if (total < 2 * n_per) throw ScheduleError("frame shorter than two chirps");
  const long per_dwell = dwell_samples(sched, frame.sample_rate);

  // Chirp ratios one period apart, pooled by (port(n), port(n+N)).
  // same[.]: CFO-only ratios; step[k]: ratios across the switch from the
  // k-th dwell into the next.
  std::complex<double> same(0.0, 0.0);
  std::array<std::complex<double>, 3> step{};
  for (long n = 0; n + n_per < total; ++n) {
    const std::complex<double> denom = frame.samples[static_cast<std::size_t>(n)];
    if (std::norm(denom) == 0.0) throw std::domain_error("zero IQ sample");
    const std::complex<double> ratio =
        frame.samples[static_cast<std::size_t>(n + n_per)] / denom;
    const int a = port_at(n, per_dwell);
    const int b = port_at(n + n_per, per_dwell);
    if (a == b) {
      same += ratio;
    } else if (b == a + 1) {
      step[static_cast<std::size_t>(a)] += ratio;
    }
    // dwell > T guarantees b - a is 0 or 1
  }
  if (std::abs(same) == 0.0)
    throw ScheduleError("no same-antenna chirp pair available for CFO estimation");
  for (int k = 0; k < 3; ++k)
    if (std::abs(step[static_cast<std::size_t>(k)]) == 0.0)
      throw ScheduleError("missing port transition in the frame");

  // Cumulative phase of each dwell position relative to the first dwell,
  // then re-expressed relative to the origin antenna (port 1).
  const double theta_same = std::arg(same);
  std::array<double, 4> cum{};
  for (int k = 0; k < 3; ++k)
    cum[static_cast<std::size_t>(k + 1)] =
        cum[static_cast<std::size_t>(k)] + std::arg(step[static_cast<std::size_t>(k)]) - theta_same;

  std::array<double, 4> by_port{};
  for (int pos = 0; pos < 4; ++pos)
    by_port[static_cast<std::size_t>(sched.port_order[static_cast<std::size_t>(pos)] - 1)] =
        cum[static_cast<std::size_t>(pos)];

  PhaseTriple out;
  out.wrapped = true;
  for (int k = 0; k < 3; ++k)
    out.phi[static_cast<std::size_t>(k)] = wrap_angle(by_port[static_cast<std::size_t>(k + 1)] - by_port[0]);
  return out;
}

void save_iq(const IqFrame& frame, const ChirpConfig& cfg, const std::string& path) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw ConfigError("cannot open " + path + " for writing");
  // Interleaved little-endian float64 I/Q (native layout on this target).
  for (const auto& s : frame.samples) {
    const double iq[2] = {s.real(), s.imag()};
    bin.write(reinterpret_cast<const char*>(iq), sizeof(iq));
  }
  if (!bin) throw ConfigError("short write to " + path);

  std::ofstream hdr(path + ".hdr");
  if (!hdr) throw ConfigError("cannot open " + path + ".hdr for writing");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", frame.sample_rate);
  hdr << "fs=" << buf << "\n";
  hdr << "sf=" << cfg.sf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.bw);
  hdr << "bw=" << buf << "\n";
  hdr << "n_chirps=" << cfg.n_chirps << "\n";
}

IqFrame load_iq(const std::string& path, ChirpConfig* cfg_out) {
  std::ifstream hdr(path + ".hdr");
  if (!hdr) throw ConfigError("cannot open " + path + ".hdr");
  ChirpConfig cfg;
  double fs = 0.0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(hdr, line)) {
    ++line_no;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("malformed header line", line_no);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    try {
      if (key == "fs")
        fs = std::stod(val);
      else if (key == "sf")
        cfg.sf = std::stoi(val);
      else if (key == "bw")
        cfg.bw = std::stod(val);
      else if (key == "n_chirps")
        cfg.n_chirps = std::stoi(val);
      else
        throw ParseError("unknown header key '" + key + "'", line_no);
    } catch (const std::invalid_argument&) {
      throw ParseError("unparseable header value", line_no);
    }
  }
  cfg.fs = fs;
  if (cfg_out) *cfg_out = cfg;

  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw ConfigError("cannot open " + path);
  IqFrame frame;
  frame.sample_rate = fs;
  double iq[2];
  while (bin.read(reinterpret_cast<char*>(iq), sizeof(iq)))
    frame.samples.emplace_back(iq[0], iq[1]);
  return frame;
}

} // namespace soilsim
