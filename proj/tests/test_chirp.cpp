#include "soilsim/antenna_array.hpp"
#include "soilsim/chirp.hpp"
#include "soilsim/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

using namespace soilsim;

namespace {
constexpr double kPi = std::numbers::pi;

double wrap_err(double a, double b) { return std::abs(wrap_angle(a - b)); }
} // namespace

TEST_CASE("chirp timing") {
  ChirpConfig cfg; // SF 9, BW 125 kHz, 8 chirps
  CHECK(cfg.chirp_duration() == 0.004096);
  CHECK(cfg.samples_per_chirp() == 512);
  const IqFrame frame = gen_preamble(cfg);
  CHECK(frame.samples.size() == 4096);
  CHECK(static_cast<double>(frame.samples.size()) / frame.sample_rate == 0.032768);

  ChirpConfig sf7 = cfg;
  sf7.sf = 7;
  CHECK(sf7.chirp_duration() == doctest::Approx(128.0 / 125000.0).epsilon(1e-15));
}

TEST_CASE("preamble is unit magnitude and chirp periodic") {
  ChirpConfig cfg;
  const IqFrame frame = gen_preamble(cfg);
  for (const auto& s : frame.samples) CHECK(std::abs(std::abs(s) - 1.0) < 1e-12);
  const long n = cfg.samples_per_chirp();
  for (int c = 1; c < cfg.n_chirps; ++c) {
    CHECK(frame.samples[static_cast<std::size_t>(c * n)] == frame.samples[0]);
    CHECK(frame.samples[static_cast<std::size_t>(c * n + 17)] == frame.samples[17]);
  }
}

TEST_CASE("channel application") {
  ChirpConfig cfg;
  const SwitchSchedule sched = SwitchSchedule::spft_default(cfg);
  const IqFrame tx = gen_preamble(cfg);

  SUBCASE("identity impairments leave the frame unchanged") {
    const IqFrame rx = apply_channel(tx, Impairments{}, sched);
    CHECK(rx.samples == tx.samples);
  }

  SUBCASE("magnitudes are preserved under any impairment") {
    Impairments imp;
    imp.cfo = 731.0;
    imp.phase0 = 2.2;
    imp.antenna_phases = {0.0, 1.1, -2.3, 0.4};
    const IqFrame rx = apply_channel(tx, imp, sched);
    for (std::size_t i = 0; i < rx.samples.size(); ++i)
      CHECK(std::abs(std::abs(rx.samples[i]) - std::abs(tx.samples[i])) < 1e-12);
  }

  SUBCASE("phase steps at the switch instants") {
    Impairments imp;
    imp.antenna_phases = {0.0, kPi / 2.0, kPi / 2.0, kPi / 2.0};
    const IqFrame rx = apply_channel(tx, imp, sched);
    const long first_switch = std::lround(sched.dwell * cfg.fs); // 768
    CHECK(first_switch == 768);
    for (long i = 0; i < first_switch; ++i)
      CHECK(std::abs(rx.samples[static_cast<std::size_t>(i)] -
                     tx.samples[static_cast<std::size_t>(i)]) < 1e-12);
    for (long i = first_switch; i < 2 * first_switch; ++i) {
      const auto expected =
          tx.samples[static_cast<std::size_t>(i)] * std::polar(1.0, kPi / 2.0);
      CHECK(std::abs(rx.samples[static_cast<std::size_t>(i)] - expected) < 1e-12);
    }
  }

  SUBCASE("cfo advances consecutive chirps by 2*pi*cfo*T") {
    Impairments imp;
    imp.cfo = 100.0;
    const IqFrame rx = apply_channel(tx, imp, sched);
    const long n = cfg.samples_per_chirp();
    const auto ratio = rx.samples[static_cast<std::size_t>(n) + 10] /
                       rx.samples[10]; // both inside the first dwell
    CHECK(wrap_err(std::arg(ratio), 2.0 * kPi * 100.0 * cfg.chirp_duration()) < 1e-9);
  }

  SUBCASE("schedule must fit the frame") {
    ChirpConfig short_cfg = cfg;
    short_cfg.n_chirps = 4;
    const IqFrame short_tx = gen_preamble(short_cfg);
    CHECK_THROWS_AS(apply_channel(short_tx, Impairments{}, sched), ScheduleError);
  }

  SUBCASE("origin antenna phase must stay zero") {
    Impairments imp;
    imp.antenna_phases = {0.5, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(apply_channel(tx, imp, sched), ConfigError);
  }
}

TEST_CASE("schedule validation") {
  ChirpConfig cfg;
  SwitchSchedule sched = SwitchSchedule::spft_default(cfg);
  CHECK(sched.dwell == doctest::Approx(1.5 * cfg.chirp_duration()).epsilon(1e-15));
  CHECK_NOTHROW(sched.validate(cfg));
  // switching through all four antennas takes 6 chirp periods, within the
  // 8-chirp preamble
  CHECK(4.0 * sched.dwell <= cfg.n_chirps * cfg.chirp_duration());

  sched.dwell = cfg.chirp_duration(); // not strictly greater than T
  CHECK_THROWS_AS(sched.validate(cfg), ScheduleError);
  sched.dwell = 2.5 * cfg.chirp_duration();
  CHECK_THROWS_AS(sched.validate(cfg), ScheduleError);
  sched = SwitchSchedule::spft_default(cfg);
  sched.port_order = {1, 2, 2, 4};
  CHECK_THROWS_AS(sched.validate(cfg), ScheduleError);
}

TEST_CASE("chirp-ratio extraction recovers the antenna phases") {
  ChirpConfig cfg;
  const SwitchSchedule sched = SwitchSchedule::spft_default(cfg);
  const IqFrame tx = gen_preamble(cfg);

  SUBCASE("phase offset cancels in every ratio") {
    Impairments imp;
    imp.phase0 = 5.1;
    imp.antenna_phases = {0.0, 0.7, -1.1, 2.3};
    const PhaseTriple got = extract_phase_triple(apply_channel(tx, imp, sched), cfg, sched);
    CHECK(wrap_err(got.phi[0], 0.7) < 1e-9);
    CHECK(wrap_err(got.phi[1], -1.1) < 1e-9);
    CHECK(wrap_err(got.phi[2], 2.3) < 1e-9);
  }

  SUBCASE("cfo term is estimated from same-antenna pairs and removed") {
    Impairments imp;
    imp.cfo = 500.0;
    const PhaseTriple got = extract_phase_triple(apply_channel(tx, imp, sched), cfg, sched);
    for (double phi : got.phi) CHECK(std::abs(phi) < 1e-9);
  }

  SUBCASE("output is independent of phase0") {
    Impairments a, b;
    a.antenna_phases = b.antenna_phases = {0.0, 1.0, 2.0, 3.0};
    a.cfo = b.cfo = 250.0;
    a.phase0 = 0.0;
    b.phase0 = 4.7;
    const PhaseTriple pa = extract_phase_triple(apply_channel(tx, a, sched), cfg, sched);
    const PhaseTriple pb = extract_phase_triple(apply_channel(tx, b, sched), cfg, sched);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(pa.phi[k] - pb.phi[k]) < 1e-12);
  }

  SUBCASE("random impairments, wrapped recovery to 1e-6") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> cfo_draw(-1000.0, 1000.0);
    std::uniform_real_distribution<double> phase_draw(-kPi, kPi);
    std::uniform_real_distribution<double> off_draw(0.0, 2.0 * kPi);
    for (int i = 0; i < 30; ++i) {
      Impairments imp;
      imp.cfo = cfo_draw(rng);
      imp.phase0 = off_draw(rng);
      imp.antenna_phases = {0.0, phase_draw(rng), phase_draw(rng), phase_draw(rng)};
      const PhaseTriple got = extract_phase_triple(apply_channel(tx, imp, sched), cfg, sched);
      for (int k = 0; k < 3; ++k)
        CHECK(wrap_err(got.phi[static_cast<std::size_t>(k)],
                       imp.antenna_phases[static_cast<std::size_t>(k + 1)]) < 1e-6);
    }
  }

  SUBCASE("permuted port order is mapped back to antenna indices") {
    SwitchSchedule perm = sched;
    perm.port_order = {2, 4, 1, 3};
    Impairments imp;
    imp.antenna_phases = {0.0, 0.9, -0.4, 1.7};
    const PhaseTriple got = extract_phase_triple(apply_channel(tx, imp, perm), cfg, perm);
    CHECK(wrap_err(got.phi[0], 0.9) < 1e-9);
    CHECK(wrap_err(got.phi[1], -0.4) < 1e-9);
    CHECK(wrap_err(got.phi[2], 1.7) < 1e-9);
  }

  SUBCASE("end-to-end with the tetrahedral forward model") {
    RfConfig rf;
    const PhaseTriple truth =
        forward_phases(16.0, Eigen::Vector3d::UnitZ(), Orientation::identity(), rf);
    Impairments imp;
    imp.cfo = 300.0;
    imp.phase0 = 1.9;
    imp.antenna_phases = {0.0, truth.phi[0], truth.phi[1], truth.phi[2]};
    const PhaseTriple got = extract_phase_triple(apply_channel(tx, imp, sched), cfg, sched);
    const PhaseTriple expected = wrap_phases(truth);
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(got.phi[static_cast<std::size_t>(k)] -
                     expected.phi[static_cast<std::size_t>(k)]) < 1e-6);
  }

  SUBCASE("noisy frame at high SNR still recovers") {
    Impairments imp;
    imp.cfo = 444.0;
    imp.antenna_phases = {0.0, 1.2, -0.8, 0.3};
    IqFrame rx = add_awgn(apply_channel(tx, imp, sched), 60.0, 9);
    const PhaseTriple got = extract_phase_triple(rx, cfg, sched);
    for (int k = 0; k < 3; ++k)
      CHECK(wrap_err(got.phi[static_cast<std::size_t>(k)],
                     imp.antenna_phases[static_cast<std::size_t>(k + 1)]) < 1e-2);
    // seeded determinism
    IqFrame rx2 = add_awgn(apply_channel(tx, imp, sched), 60.0, 9);
    CHECK(rx.samples == rx2.samples);
  }

  SUBCASE("degenerate frames are rejected") {
    IqFrame empty;
    empty.sample_rate = cfg.fs;
    CHECK_THROWS_AS(extract_phase_triple(empty, cfg, sched), std::domain_error);
    IqFrame zeros = tx;
    zeros.samples.assign(zeros.samples.size(), {0.0, 0.0});
    CHECK_THROWS_AS(extract_phase_triple(zeros, cfg, sched), std::domain_error);
  }
}

TEST_CASE("iq dump round trip") {
  ChirpConfig cfg;
  const SwitchSchedule sched = SwitchSchedule::spft_default(cfg);
  Impairments imp;
  imp.cfo = 123.0;
  imp.antenna_phases = {0.0, 0.4, 0.9, -1.3};
  const IqFrame rx = apply_channel(gen_preamble(cfg), imp, sched);

  const std::string path = (std::filesystem::temp_directory_path() / "soilsim_test.iq").string();
  save_iq(rx, cfg, path);
  ChirpConfig loaded_cfg;
  const IqFrame loaded = load_iq(path, &loaded_cfg);
  CHECK(loaded.samples == rx.samples);
  CHECK(loaded.sample_rate == rx.sample_rate);
  CHECK(loaded_cfg.sf == cfg.sf);
  CHECK(loaded_cfg.bw == cfg.bw);
  CHECK(loaded_cfg.n_chirps == cfg.n_chirps);
  CHECK(std::filesystem::exists(path + ".hdr"));
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".hdr");
}

TEST_CASE("chirp config validation") {
  ChirpConfig cfg;
  cfg.sf = 6;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ChirpConfig{};
  cfg.fs = cfg.bw / 2.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
