#include "soilsim/chirp.hpp"
#include "soilsim/contrastive.hpp"
#include "soilsim/dataset.hpp"

#include <benchmark/benchmark.h>

using namespace soilsim;

namespace {

const Dataset& training_set() {
  static const Dataset ds = gen_training_set();
  return ds;
}

EncoderParams bench_params() {
  EncoderParams p = EncoderParams::init(1);
  const Dataset& ds = training_set();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.samples.size()), kInputDim);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = ds.samples[static_cast<std::size_t>(i)].sensing.as_array8();
    for (int j = 0; j < kInputDim; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
  }
  p.feat_mean = x.colwise().mean().transpose();
  p.feat_std = ((x.rowwise() - p.feat_mean.transpose()).array().square().colwise().mean())
                   .sqrt()
                   .transpose()
                   .matrix();
  return p;
}

} // namespace

static void BM_SoilForward(benchmark::State& state) {
  const SoilSample ref = reference_sample();
  for (auto _ : state) {
    SensingVector x = sense(ref);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_SoilForward);

static void BM_EncodeForward(benchmark::State& state) {
  const EncoderParams p = bench_params();
  const SensingVector x = sense(reference_sample());
  for (auto _ : state) {
    Eigen::VectorXd z = encode(p, x);
    benchmark::DoNotOptimize(z);
  }
}
BENCHMARK(BM_EncodeForward);

static void BM_CompoundLoss(benchmark::State& state) {
  const EncoderParams p = bench_params();
  const TrainConfig cfg;
  for (auto _ : state) {
    double loss = compound_loss(p, training_set(), cfg);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_CompoundLoss);

static void BM_GradCompound(benchmark::State& state) {
  const EncoderParams p = bench_params();
  const TrainConfig cfg;
  for (auto _ : state) {
    EncoderGradients g = grad_compound(p, training_set(), cfg);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_GradCompound);

static void BM_GenPreamble(benchmark::State& state) {
  const ChirpConfig cfg;
  for (auto _ : state) {
    IqFrame f = gen_preamble(cfg);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_GenPreamble);

static void BM_ExtractPhaseTriple(benchmark::State& state) {
  const ChirpConfig cfg;
  const SwitchSchedule sched = SwitchSchedule::spft_default(cfg);
  Impairments imp;
  imp.cfo = 300.0;
  imp.antenna_phases = {0.0, 0.7, -1.1, 2.3};
  const IqFrame rx = apply_channel(gen_preamble(cfg), imp, sched);
  for (auto _ : state) {
    PhaseTriple p = extract_phase_triple(rx, cfg, sched);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_ExtractPhaseTriple);

static void BM_InvertPhases(benchmark::State& state) {
  const RfConfig rf;
  const PhaseTriple p =
      forward_phases(16.0, Eigen::Vector3d::UnitZ(), Orientation::identity(), rf);
  for (auto _ : state) {
    InversionResult inv = invert_phases(p, rf);
    benchmark::DoNotOptimize(inv);
  }
}
BENCHMARK(BM_InvertPhases);

static void BM_InvertWrapped(benchmark::State& state) {
  const RfConfig rf;
  const PhaseTriple p = wrap_phases(
      forward_phases(16.0, Eigen::Vector3d::UnitZ(), Orientation::identity(), rf));
  for (auto _ : state) {
    WrappedInversion inv = invert_wrapped(p, rf, EpsilonRange{});
    benchmark::DoNotOptimize(inv);
  }
}
BENCHMARK(BM_InvertWrapped);

BENCHMARK_MAIN();
