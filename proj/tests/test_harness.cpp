#include "soilsim/antenna_array.hpp"
#include "soilsim/errors.hpp"
#include "soilsim/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace soilsim;

namespace {

TrainConfig quick_train() {
  TrainConfig cfg;
  cfg.max_epochs = 150;
  cfg.patience = 150;
  return cfg;
}

} // namespace

TEST_CASE("mae computation") {
  std::vector<SoilSample> truth(1), preds(1);
  truth[0].m_pct = 30.0;
  preds[0] = truth[0];
  MaeReport r = mae(preds, truth);
  for (double v : r.mae) CHECK(v == 0.0);
  CHECK(r.count == 1);

  preds[0].m_pct = 34.0;
  r = mae(preds, truth);
  CHECK(r.mae[0] == 4.0);
  for (int g = 1; g < 6; ++g) CHECK(r.mae[static_cast<std::size_t>(g)] == 0.0);

  truth.assign(2, SoilSample{});
  preds.assign(2, SoilSample{});
  preds[0].n_pml = 2.0;
  preds[1].n_pml = 4.0;
  r = mae(preds, truth);
  CHECK(r.mae[1] == 3.0);

  CHECK_THROWS_AS(mae(preds, std::vector<SoilSample>(3)), std::domain_error);
  CHECK_THROWS_AS(mae({}, {}), std::domain_error);
}

TEST_CASE("mean predictor is the training-label mean") {
  const Dataset ds = gen_training_set();
  const SoilSample mean = mean_predictor(ds);
  // oracle: component sums over the structured grid
  CHECK(mean.m_pct == doctest::Approx((38.0 * 30.0 + 0 + 10 + 20 + 40 + 50) / 43.0).epsilon(1e-12));
  CHECK(mean.n_pml == doctest::Approx(32.0 / 43.0).epsilon(1e-12));
  CHECK(mean.c_pct == doctest::Approx(150.0 / 43.0).epsilon(1e-12));
  CHECK(mean.al_pct == doctest::Approx((38.0 * 4.0 + 0 + 2 + 6 + 8 + 10) / 43.0).epsilon(1e-12));
}

TEST_CASE("orientation sweep") {
  OrientSweepOptions opt;
  opt.epsilon_true = 16.69;
  const auto cases = standard_orientations(3, 7);
  REQUIRE(cases.size() == 7);
  CHECK(cases[0].name == "identity");

  SUBCASE("noiseless estimates are exact for every orientation") {
    const auto rows = run_orient_sweep(cases, opt);
    double lo = rows[0].eps_hat, hi = rows[0].eps_hat;
    for (const auto& r : rows) {
      CHECK(std::abs(r.eps_hat - 16.69) < 1e-9);
      lo = std::min(lo, r.eps_hat);
      hi = std::max(hi, r.eps_hat);
    }
    CHECK(hi - lo < 1e-9);
  }

  SUBCASE("phase noise spreads the estimate mildly") {
    opt.phase_noise_sigma = 0.01;
    opt.noise_draws = 100;
    const auto rows = run_orient_sweep(cases, opt);
    for (const auto& r : rows) {
      CHECK(r.noisy_std > 0.0);
      CHECK(r.noisy_std < 0.5);
      CHECK(std::abs(r.noisy_mean - 16.69) / 16.69 < 0.01);
    }
  }

  SUBCASE("chirp route recovers a candidate set containing the truth") {
    opt.through_chirp = true;
    const auto rows = run_orient_sweep({cases[0]}, opt);
    // the 2*pi ambiguity at this carrier is real; the sweep reports it
    CHECK(rows[0].ambiguous);
    CHECK(rows[0].n_candidates > 1);
    const RfConfig rf;
    const PhaseTriple truth =
        forward_phases(16.69, Eigen::Vector3d::UnitZ(), Orientation::identity(), rf);
    const WrappedInversion inv = invert_wrapped(wrap_phases(truth), rf, EpsilonRange{});
    bool found = false;
    for (const auto& c : inv.candidates)
      if (std::abs(c.epsilon - 16.69) < 1e-6) found = true;
    CHECK(found);
  }
}

TEST_CASE("training-set resizing") {
  const Dataset canonical = gen_training_set();

  SUBCASE("subsampling keeps the reference and all groups") {
    const Dataset small = resize_training_set(canonical, 28, 3);
    CHECK(small.samples.size() == 28);
    CHECK_NOTHROW(validate_training_structure(small));
    const auto counts = group_counts(small);
    CHECK(counts.at(GroupTag::REF) == 1);
    std::size_t total = 1;
    for (GroupTag t : {GroupTag::M, GroupTag::N, GroupTag::P, GroupTag::K, GroupTag::C,
                       GroupTag::AL}) {
      CHECK(counts.at(t) >= 4); // trimmed evenly, largest groups first
      total += counts.at(t);
    }
    CHECK(total == 28);
  }

  SUBCASE("augmentation adds in-range untagged samples") {
    const Dataset big = resize_training_set(canonical, 53, 3);
    CHECK(big.samples.size() == 53);
    const auto counts = group_counts(big);
    CHECK(counts.at(GroupTag::NONE) == 10);
    for (const auto& s : big.samples) CHECK(s.composition.is_valid());
    // deterministic per seed
    const Dataset big2 = resize_training_set(canonical, 53, 3);
    CHECK(big2.samples.back().composition.m_pct == big.samples.back().composition.m_pct);
    const Dataset big3 = resize_training_set(canonical, 53, 4);
    CHECK(big3.samples.back().composition.m_pct != big.samples.back().composition.m_pct);
  }

  SUBCASE("sizes below 28 are rejected") {
    CHECK_THROWS_AS(resize_training_set(canonical, 27, 3), ConfigError);
  }
}

TEST_CASE("evaluation pipeline") {
  EvalOptions opt;
  opt.train_seed = 5;
  opt.test_seed = 6;
  opt.test_count = 20;
  opt.train_cfg = quick_train();

  SUBCASE("reports carry fingerprints and counts") {
    const EvalResult res = run_eval(opt);
    CHECK(res.model.count == 20);
    CHECK(res.baseline.count == 20);
    CHECK(res.model.fingerprint.find("train_seed=5") != std::string::npos);
    CHECK(res.model.fingerprint.find("mode=FULL") != std::string::npos);
    for (double v : res.model.mae) CHECK(v >= 0.0);
  }

  SUBCASE("identical options reproduce the report bit for bit") {
    const EvalResult a = run_eval(opt);
    const EvalResult b = run_eval(opt);
    CHECK(a.model.mae == b.model.mae);
    CHECK(a.baseline.mae == b.baseline.mae);
  }

  SUBCASE("dual-antenna mode feeds the rotated-estimate permittivity") {
    opt.mode = AblationMode::DualAntenna;
    opt.gamma_rad = 30.0 * std::numbers::pi / 180.0;
    const Dataset training = gen_training_set();
    TrainConfig cfg = opt.train_cfg;
    cfg.seed = opt.train_seed;
    const ModelBundle bundle = train(training, cfg);
    const Dataset test = gen_test_set(opt.test_count, opt.test_seed);
    const EvalResult res = evaluate_bundle(bundle, training, test, opt);
    CHECK(res.gamma_rad == doctest::Approx(30.0 * std::numbers::pi / 180.0));

    // mirror the corruption by hand on the first sample
    SensingVector x = test.samples[0].sensing;
    x.epsilon *= dual_epsilon_error_ratio(res.gamma_rad);
    const auto expected = label_vector(infer(bundle, x));
    const auto got = label_vector(res.predictions[0]);
    for (std::size_t g = 0; g < 6; ++g) CHECK(got[g] == doctest::Approx(expected[g]).epsilon(1e-12));
  }

  SUBCASE("gamma is sampled from the run seed when unset") {
    opt.mode = AblationMode::DualAntenna;
    const EvalResult a = run_eval(opt);
    CHECK(a.gamma_rad >= 15.0 * std::numbers::pi / 180.0);
    CHECK(a.gamma_rad <= 45.0 * std::numbers::pi / 180.0);
    const EvalResult b = run_eval(opt);
    CHECK(a.gamma_rad == b.gamma_rad);
  }
}

TEST_CASE("data sweep") {
  EvalOptions opt;
  opt.train_seed = 5;
  opt.test_seed = 6;
  opt.test_count = 15;
  opt.train_cfg = quick_train();

  const auto rows = run_data_sweep({28, 43}, opt);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].size == 28);
  CHECK(rows[1].size == 43);
  CHECK(rows[1].report.fingerprint.find("train_size=43") != std::string::npos);

  // the canonical size reproduces the plain evaluation exactly
  const EvalResult full = run_eval(opt);
  CHECK(rows[1].report.mae == full.model.mae);

  CHECK_THROWS_AS(run_data_sweep({27}, opt), ConfigError);
  CHECK_THROWS_AS(run_data_sweep({}, opt), ConfigError);
}

TEST_CASE("report formatting and manifest") {
  MaeReport r;
  r.mae = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  r.count = 55;
  r.fingerprint = "train_seed=1";
  const std::string table = format_mae_table({{"model-FULL", r}});
  CHECK(table.find("model-FULL") != std::string::npos);
  CHECK(table.find("MAE_M") != std::string::npos);
  CHECK(r.average() == doctest::Approx(3.5).epsilon(1e-12));

  const auto dir = std::filesystem::temp_directory_path();
  const auto csv_path = dir / "soilsim_report.csv";
  write_mae_csv({{"model-FULL", r}}, csv_path.string());
  std::ifstream csv(csv_path);
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  CHECK(header.find("mae_M_%") != std::string::npos);
  CHECK(row.find("model-FULL,55,1,") != std::string::npos);
  std::filesystem::remove(csv_path);

  const auto mf_path = dir / "soilsim_manifest.txt";
  write_manifest(mf_path.string(), "eval", {{"train_seed", "1"}, {"mode", "FULL"}});
  std::ifstream mf(mf_path);
  std::string all((std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>());
  CHECK(all.find("subcommand=eval") != std::string::npos);
  CHECK(all.find("train_seed=1") != std::string::npos);
  CHECK(all.find("version=") != std::string::npos);
  std::filesystem::remove(mf_path);
}

TEST_CASE("ablation mode names") {
  for (AblationMode m : {AblationMode::Full, AblationMode::NoSep, AblationMode::NoOrt,
                         AblationMode::DualAntenna})
    CHECK(ablation_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(ablation_mode_from_string("BOGUS"), ConfigError);
}
