#include "soilsim/harness.hpp"

#include "soilsim/chirp.hpp"
#include "soilsim/errors.hpp"
#include "soilsim/version.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace soilsim {

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

const char* kMaeUnits[kNumComponents] = {"%", "pml", "pml", "pml", "%", "%"};

} // namespace

double MaeReport::average() const {
  double s = 0.0;
  for (double v : mae) s += v;
  return s / kNumComponents;
}

MaeReport mae(const std::vector<SoilSample>& preds, const std::vector<SoilSample>& truth) {
  if (preds.size() != truth.size()) throw std::domain_error("prediction/truth length mismatch");
  if (preds.empty()) throw std::domain_error("cannot compute MAE of an empty set");
  MaeReport r;
  r.count = preds.size();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = label_vector(preds[i]);
    const auto t = label_vector(truth[i]);
    for (int g = 0; g < kNumComponents; ++g)
      r.mae[static_cast<std::size_t>(g)] +=
          std::abs(p[static_cast<std::size_t>(g)] - t[static_cast<std::size_t>(g)]);
  }
  for (double& v : r.mae) v /= static_cast<double>(preds.size());
  return r;
}

SoilSample mean_predictor(const Dataset& training) {
  if (training.samples.empty()) throw std::domain_error("empty training set");
  std::array<double, 6> sum{};
  for (const auto& s : training.samples) {
    const auto y = label_vector(s.composition);
    for (std::size_t g = 0; g < 6; ++g) sum[g] += y[g];
  }
  for (double& v : sum) v /= static_cast<double>(training.samples.size());
  return sample_from_label_vector(sum);
}

const char* to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::Full: return "FULL";
    case AblationMode::NoSep: return "NO_SEP";
    case AblationMode::NoOrt: return "NO_ORT";
    case AblationMode::DualAntenna: return "DUAL_ANTENNA";
  }
  return "FULL";
}

AblationMode ablation_mode_from_string(const std::string& s) {
  for (AblationMode m : {AblationMode::Full, AblationMode::NoSep, AblationMode::NoOrt,
                         AblationMode::DualAntenna})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown ablation mode '" + s + "' (FULL, NO_SEP, NO_ORT, DUAL_ANTENNA)");
}

EvalResult evaluate_bundle(const ModelBundle& bundle, const Dataset& training, const Dataset& test,
                           const EvalOptions& opt) {
  EvalResult res;
  res.bundle = bundle;

  double gamma = 0.0;
  if (opt.mode == AblationMode::DualAntenna) {
    if (opt.gamma_rad) {
      gamma = *opt.gamma_rad;
    } else {
      std::mt19937_64 rng(opt.test_seed ^ 0x9e3779b97f4a7c15ULL);
      std::uniform_real_distribution<double> deg(15.0, 45.0);
      gamma = deg(rng) * std::numbers::pi / 180.0;
    }
  }
  res.gamma_rad = gamma;

  const RfConfig rf;
  for (const auto& s : test.samples) {
    SensingVector x = s.sensing;
    if (opt.mode == AblationMode::DualAntenna) {
      // The dual-antenna system reads the phase under its perpendicular
      // assumption while the array is actually rotated by gamma.
      const double phase = dual_phase(x.epsilon, 0.0, gamma, rf);
      x.epsilon = dual_epsilon_estimate(phase, rf);
    }
    res.predictions.push_back(infer(bundle, x, opt.infer_mode));
    res.truths.push_back(s.composition);
  }

  std::ostringstream fp;
  fp << "train_seed=" << opt.train_seed << " test_seed=" << opt.test_seed
     << " noise_eps=" << fmt(opt.noise.sigma_epsilon_rel)
     << " noise_vnir=" << fmt(opt.noise.sigma_vnir) << " noise_seed=" << opt.noise.seed
     << " mode=" << to_string(opt.mode);
  if (opt.mode == AblationMode::DualAntenna)
    fp << " gamma_deg=" << fmt(gamma * 180.0 / std::numbers::pi);
  fp << " infer=" << (opt.infer_mode == InferMode::Calibrated ? "calibrated" : "paper-literal")
     << " count=" << test.samples.size();

  res.model = mae(res.predictions, res.truths);
  res.model.fingerprint = fp.str();

  const SoilSample mean_pred = mean_predictor(training);
  std::vector<SoilSample> const_preds(test.samples.size(), mean_pred);
  res.baseline = mae(const_preds, res.truths);
  res.baseline.fingerprint = fp.str() + " predictor=training-mean";
  return res;
}

EvalResult run_eval(const EvalOptions& opt) {
  TrainConfig cfg = opt.train_cfg;
  cfg.seed = opt.train_seed;
  if (opt.mode == AblationMode::NoSep) cfg.lambda_sep = 0.0;
  if (opt.mode == AblationMode::NoOrt) cfg.lambda_ort = 0.0;

  // The run's noise config covers the whole pipeline: training sensing
  // vectors get an independent stream derived from the training seed.
  NoiseConfig train_noise = opt.noise;
  train_noise.seed = opt.train_seed ^ 0xa5a5a5a5a5a5a5a5ULL;
  Dataset training = gen_training_set(train_noise);

  if (opt.mode == AblationMode::DualAntenna) {
    // The dual-antenna variant also measures its training set with the
    // two-antenna array under randomized placements, so every training
    // permittivity carries its own rotation error.
    const RfConfig rf;
    std::mt19937_64 rng(opt.train_seed ^ 0xc3c3c3c3c3c3c3c3ULL);
    std::uniform_real_distribution<double> gamma_deg(0.0, 45.0);
    for (auto& s : training.samples) {
      const double g = gamma_deg(rng) * std::numbers::pi / 180.0;
      s.sensing.epsilon = dual_epsilon_estimate(dual_phase(s.sensing.epsilon, 0.0, g, rf), rf);
    }
  }

  const ModelBundle bundle = train(training, cfg);
  const Dataset test = gen_test_set(opt.test_count, opt.test_seed, opt.noise);
  return evaluate_bundle(bundle, training, test, opt);
}

std::vector<OrientationCase> standard_orientations(int n_random, std::uint64_t seed) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  std::vector<OrientationCase> cases;
  cases.push_back({"identity", Orientation::identity()});
  cases.push_back({"yaw90", Orientation::yaw(kHalfPi)});
  cases.push_back({"pitch90", Orientation::pitch(kHalfPi)});
  cases.push_back({"roll90", Orientation::roll(kHalfPi)});
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_random; ++i)
    cases.push_back({"random" + std::to_string(i + 1), Orientation::random(rng)});
  return cases;
}

std::vector<OrientSweepRow> run_orient_sweep(const std::vector<OrientationCase>& cases,
                                             const OrientSweepOptions& opt) {
  if (!(opt.epsilon_true >= 1.0)) throw ConfigError("epsilon_true must be >= 1");
  const EpsilonRange range; // [3, 40] prior for the wrapped search
  std::vector<OrientSweepRow> rows;
  std::mt19937_64 noise_seed_gen(opt.seed);

  for (const auto& oc : cases) {
    OrientSweepRow row;
    row.name = oc.name;
    const PhaseTriple truth =
        forward_phases(opt.epsilon_true, opt.r_tx_world, oc.orientation, opt.rf);

    if (opt.through_chirp) {
      const ChirpConfig ccfg;
      const SwitchSchedule sched = SwitchSchedule::spft_default(ccfg);
      Impairments imp;
      imp.antenna_phases = {0.0, truth.phi[0], truth.phi[1], truth.phi[2]};
      const IqFrame rx = apply_channel(gen_preamble(ccfg), imp, sched);
      const PhaseTriple extracted = extract_phase_triple(rx, ccfg, sched);
      const WrappedInversion inv = invert_wrapped(extracted, opt.rf, range);
      row.eps_hat = inv.best().epsilon;
      row.ambiguous = inv.ambiguous;
      row.n_candidates = inv.candidates.size();
    } else if (opt.wrapped) {
      const WrappedInversion inv = invert_wrapped(wrap_phases(truth), opt.rf, range);
      row.eps_hat = inv.best().epsilon;
      row.ambiguous = inv.ambiguous;
      row.n_candidates = inv.candidates.size();
    } else {
      row.eps_hat = invert_phases(truth, opt.rf).epsilon;
    }

    if (opt.phase_noise_sigma > 0.0) {
      if (opt.noise_draws < 2) throw ConfigError("need at least 2 noise draws");
      std::vector<double> eps_hats;
      eps_hats.reserve(static_cast<std::size_t>(opt.noise_draws));
      for (int d = 0; d < opt.noise_draws; ++d) {
        const PhaseTriple noisy =
            add_phase_noise(truth, opt.phase_noise_sigma, noise_seed_gen());
        eps_hats.push_back(invert_phases(noisy, opt.rf).epsilon);
      }
      double mean = 0.0;
      for (double e : eps_hats) mean += e;
      mean /= static_cast<double>(eps_hats.size());
      double var = 0.0;
      for (double e : eps_hats) var += (e - mean) * (e - mean);
      var /= static_cast<double>(eps_hats.size() - 1);
      row.noisy_mean = mean;
      row.noisy_std = std::sqrt(var);
    }
    rows.push_back(row);
  }
  return rows;
}

Dataset resize_training_set(const Dataset& canonical, std::size_t size, std::uint64_t seed,
                            const NoiseConfig& noise) {
  validate_training_structure(canonical);
  if (size < 28) throw ConfigError("training-set sizes below 28 are not supported");
  Dataset ds = canonical;
  ds.seed = seed;
  std::mt19937_64 rng(seed);

  if (size < ds.samples.size()) {
    // Trim the currently largest group (label-order tie break), never
    // dropping REF or the last member of a group.
    while (ds.samples.size() > size) {
      std::array<std::vector<std::size_t>, kNumComponents> members;
      for (std::size_t i = 0; i < ds.samples.size(); ++i)
        for (int g = 0; g < kNumComponents; ++g)
          if (ds.samples[i].tag == component_group_tag(static_cast<Component>(g)))
            members[static_cast<std::size_t>(g)].push_back(i);
      int biggest = 0;
      for (int g = 1; g < kNumComponents; ++g)
        if (members[static_cast<std::size_t>(g)].size() >
            members[static_cast<std::size_t>(biggest)].size())
          biggest = g;
      const auto& pool = members[static_cast<std::size_t>(biggest)];
      if (pool.size() <= 1)
        throw StructureError("cannot subsample below one sample per group");
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      ds.samples.erase(ds.samples.begin() + static_cast<std::ptrdiff_t>(pool[pick(rng)]));
    }
  } else if (size > ds.samples.size()) {
    // Augment with random in-range compositions.
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const NormSpec ranges = NormSpec::canonical();
    while (ds.samples.size() < size) {
      std::array<double, 6> y{};
      for (int g = 0; g < kNumComponents; ++g) {
        const auto [lo, hi] = ranges.ranges[static_cast<std::size_t>(g)];
        y[static_cast<std::size_t>(g)] = lo + (hi - lo) * uni(rng);
      }
      const SoilSample comp = sample_from_label_vector(y);
      NoiseConfig per_sample = noise;
      per_sample.seed = noise.seed + ds.samples.size();
      ds.samples.push_back(LabeledSample{comp, sense(comp, per_sample), GroupTag::NONE});
    }
  }
  return ds;
}

std::vector<DataSweepRow> run_data_sweep(const std::vector<std::size_t>& sizes,
                                         const EvalOptions& opt) {
  if (sizes.empty()) throw ConfigError("data sweep needs at least one size");
  NoiseConfig train_noise = opt.noise;
  train_noise.seed = opt.train_seed ^ 0xa5a5a5a5a5a5a5a5ULL;
  const Dataset canonical = gen_training_set(train_noise);
  const Dataset test = gen_test_set(opt.test_count, opt.test_seed, opt.noise);

  std::vector<DataSweepRow> rows;
  for (std::size_t size : sizes) {
    const Dataset training = resize_training_set(canonical, size, opt.train_seed, train_noise);
    TrainConfig cfg = opt.train_cfg;
    cfg.seed = opt.train_seed;
    const ModelBundle bundle = train(training, cfg);
    EvalResult res = evaluate_bundle(bundle, training, test, opt);
    res.model.fingerprint += " train_size=" + std::to_string(size);
    rows.push_back(DataSweepRow{size, res.model});
  }
  return rows;
}

std::string format_mae_table(const std::vector<std::pair<std::string, MaeReport>>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %10s %10s %10s %10s %10s %10s %10s %6s\n", "run",
                "MAE_M[%]", "MAE_N[pml]", "MAE_P[pml]", "MAE_K[pml]", "MAE_C[%]", "MAE_Al[%]",
                "avg", "n");
  os << line;
  for (const auto& [label, r] : rows) {
    std::snprintf(line, sizeof(line),
                  "%-22s %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f %6zu\n", label.c_str(),
                  r.mae[0], r.mae[1], r.mae[2], r.mae[3], r.mae[4], r.mae[5], r.average(),
                  r.count);
    os << line;
  }
  return os.str();
}

void write_mae_csv(const std::vector<std::pair<std::string, MaeReport>>& rows,
                   const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "run,count";
  for (int g = 0; g < kNumComponents; ++g)
    os << ",mae_" << kComponentNames[g] << "_" << kMaeUnits[g];
  os << ",fingerprint\n";
  for (const auto& [label, r] : rows) {
    os << label << "," << r.count;
    for (int g = 0; g < kNumComponents; ++g) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", r.mae[static_cast<std::size_t>(g)]);
      os << "," << buf;
    }
    os << "," << r.fingerprint << "\n";
  }
}

void write_manifest(const std::string& path, const std::string& subcommand,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << "# soilsim run manifest\n";
  os << "version=" << kVersion << "\n";
  os << "subcommand=" << subcommand << "\n";
  for (const auto& [k, v] : entries) os << k << "=" << v << "\n";
}

} // namespace soilsim
