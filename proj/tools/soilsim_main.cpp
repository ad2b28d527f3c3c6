// Command-line harness wiring the simulator, dataset, learner and
// evaluation sweeps. Every subcommand writes its outputs plus a
// reproducibility manifest under --out.

#include "soilsim/checkpoint.hpp"
#include "soilsim/chirp.hpp"
#include "soilsim/errors.hpp"
#include "soilsim/harness.hpp"
#include "soilsim/version.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace soilsim;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonOut {
  std::string out_dir = "out";

  fs::path prepare() const {
    fs::path dir(out_dir);
    fs::create_directories(dir);
    return dir;
  }
};

void manifest(const fs::path& dir, const std::string& subcommand,
              std::vector<std::pair<std::string, std::string>> entries, int argc, char** argv) {
  std::ostringstream cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd << " ";
    cmd << argv[i];
  }
  entries.emplace_back("command", cmd.str());
  write_manifest((dir / "manifest.txt").string(), subcommand, entries);
}

void print_and_write(const fs::path& dir, const std::string& stem,
                     const std::vector<std::pair<std::string, MaeReport>>& rows) {
  const std::string table = format_mae_table(rows);
  std::cout << table;
  std::ofstream txt(dir / (stem + ".txt"), std::ios::binary);
  txt << table;
  write_mae_csv(rows, (dir / (stem + ".csv")).string());
}

struct TrainFlags {
  TrainConfig cfg;

  void attach(CLI::App* app) {
    app->add_option("--lambda-sep", cfg.lambda_sep, "separation loss weight");
    app->add_option("--lambda-ort", cfg.lambda_ort, "orthogonality loss weight");
    app->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    app->add_option("--max-epochs", cfg.max_epochs, "epoch cap");
    app->add_option("--patience", cfg.patience, "early-stopping patience, epochs");
  }

  std::vector<std::pair<std::string, std::string>> entries() const {
    return {{"lambda_sep", fmt_g(cfg.lambda_sep)},
            {"lambda_ort", fmt_g(cfg.lambda_ort)},
            {"learning_rate", fmt_g(cfg.learning_rate)},
            {"max_epochs", std::to_string(cfg.max_epochs)},
            {"patience", std::to_string(cfg.patience)}};
  }
};

void write_predictions(const fs::path& path, const Dataset& data,
                       const std::vector<SoilSample>& preds) {
  std::ofstream os(path, std::ios::binary);
  os << "idx,tag,m_pct,c_pct,al_pct,n_pml,p_pml,k_pml,"
        "pred_m_pct,pred_c_pct,pred_al_pct,pred_n_pml,pred_p_pml,pred_k_pml\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const SoilSample& t = data.samples[i].composition;
    const SoilSample& p = preds[i];
    os << i << "," << to_string(data.samples[i].tag);
    for (double v : {t.m_pct, t.c_pct, t.al_pct, t.n_pml, t.p_pml, t.k_pml, p.m_pct, p.c_pct,
                     p.al_pct, p.n_pml, p.p_pml, p.k_pml})
      os << "," << fmt_g(v);
    os << "\n";
  }
}

int run(int argc, char** argv) {
  CLI::App app{"soil sensing simulator and contrastive learning toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // gen-data ---------------------------------------------------------
  CommonOut gen_out;
  NoiseConfig gen_noise;
  std::uint64_t gen_test_seed = 2;
  std::size_t gen_test_count = 55;
  auto* gen = app.add_subcommand("gen-data", "generate the structured training set and a random test set");
  gen->add_option("--out", gen_out.out_dir, "output directory");
  gen->add_option("--seed", gen_noise.seed, "noise seed for the training sensing vectors");
  gen->add_option("--noise-eps", gen_noise.sigma_epsilon_rel, "relative permittivity noise std");
  gen->add_option("--noise-vnir", gen_noise.sigma_vnir, "voltage noise std, volts");
  gen->add_option("--test-seed", gen_test_seed, "test set RNG seed");
  gen->add_option("--test-count", gen_test_count, "number of random test samples");

  // train ------------------------------------------------------------
  CommonOut train_out;
  std::uint64_t train_seed = 1;
  std::string train_data_csv;
  TrainFlags train_flags;
  auto* tr = app.add_subcommand("train", "train the contrastive encoder on the structured set");
  tr->add_option("--out", train_out.out_dir, "output directory");
  tr->add_option("--seed", train_seed, "training seed");
  tr->add_option("--data", train_data_csv, "training CSV (defaults to the canonical generated set)");
  train_flags.attach(tr);

  // infer ------------------------------------------------------------
  CommonOut infer_out;
  std::string infer_model, infer_data;
  bool infer_paper_literal = false;
  auto* inf = app.add_subcommand("infer", "run inference on a dataset CSV");
  inf->add_option("--model", infer_model, "model checkpoint")->required();
  inf->add_option("--data", infer_data, "input dataset CSV")->required();
  inf->add_option("--out", infer_out.out_dir, "output directory");
  inf->add_flag("--paper-literal", infer_paper_literal, "uncalibrated raw-projection inference");

  // eval -------------------------------------------------------------
  CommonOut eval_out;
  EvalOptions eval_opt;
  TrainFlags eval_flags;
  std::string eval_mode = "FULL";
  double eval_gamma_deg = -1.0;
  std::optional<std::uint64_t> eval_seed;
  bool eval_paper_literal = false;
  auto* ev = app.add_subcommand("eval", "train + evaluate MAE against the mean-predictor baseline");
  ev->add_option("--out", eval_out.out_dir, "output directory");
  ev->add_option("--seed", eval_seed, "base seed (sets train/test seeds unless given)");
  ev->add_option("--train-seed", eval_opt.train_seed, "training seed");
  ev->add_option("--test-seed", eval_opt.test_seed, "test set seed");
  ev->add_option("--noise-eps", eval_opt.noise.sigma_epsilon_rel, "test permittivity noise std (relative)");
  ev->add_option("--noise-vnir", eval_opt.noise.sigma_vnir, "test voltage noise std, volts");
  ev->add_option("--noise-seed", eval_opt.noise.seed, "test noise seed");
  ev->add_option("--mode", eval_mode, "FULL | NO_SEP | NO_ORT | DUAL_ANTENNA");
  ev->add_option("--gamma-deg", eval_gamma_deg, "dual-antenna rotation, degrees (sampled when unset)");
  ev->add_option("--test-count", eval_opt.test_count, "number of test samples");
  ev->add_flag("--paper-literal", eval_paper_literal, "uncalibrated raw-projection inference");
  eval_flags.attach(ev);

  // ablate -----------------------------------------------------------
  CommonOut abl_out;
  EvalOptions abl_opt;
  TrainFlags abl_flags;
  double abl_gamma_deg = 30.0;
  auto* ab = app.add_subcommand("ablate", "run FULL, NO_SEP, NO_ORT and DUAL_ANTENNA under shared seeds");
  ab->add_option("--out", abl_out.out_dir, "output directory");
  ab->add_option("--train-seed", abl_opt.train_seed, "training seed");
  ab->add_option("--test-seed", abl_opt.test_seed, "test set seed");
  ab->add_option("--noise-eps", abl_opt.noise.sigma_epsilon_rel, "test permittivity noise std (relative)");
  ab->add_option("--noise-vnir", abl_opt.noise.sigma_vnir, "test voltage noise std, volts");
  ab->add_option("--gamma-deg", abl_gamma_deg, "dual-antenna rotation, degrees");
  abl_flags.attach(ab);

  // orient-sweep -----------------------------------------------------
  CommonOut orient_out;
  OrientSweepOptions orient_opt;
  int orient_random = 3;
  auto* os_cmd = app.add_subcommand("orient-sweep", "permittivity inversion under rotated array orientations");
  os_cmd->add_option("--out", orient_out.out_dir, "output directory");
  os_cmd->add_option("--epsilon", orient_opt.epsilon_true, "true permittivity");
  os_cmd->add_option("--seed", orient_opt.seed, "seed for random throws and noise");
  os_cmd->add_option("--random", orient_random, "number of random-throw orientations");
  os_cmd->add_option("--noise-phase", orient_opt.phase_noise_sigma, "phase noise std, radians");
  os_cmd->add_option("--draws", orient_opt.noise_draws, "Monte-Carlo draws per orientation");
  os_cmd->add_flag("--chirp", orient_opt.through_chirp, "route phases through the IQ pipeline");
  os_cmd->add_flag("--wrapped", orient_opt.wrapped, "wrap phases and invert via integer search");

  // data-sweep -------------------------------------------------------
  CommonOut sweep_out;
  EvalOptions sweep_opt;
  TrainFlags sweep_flags;
  std::vector<std::size_t> sweep_sizes = {28, 43, 53};
  auto* ds_cmd = app.add_subcommand("data-sweep", "MAE versus training-set size");
  ds_cmd->add_option("--out", sweep_out.out_dir, "output directory");
  ds_cmd->add_option("--sizes", sweep_sizes, "training sizes (>= 28)")->delimiter(',');
  ds_cmd->add_option("--train-seed", sweep_opt.train_seed, "training seed");
  ds_cmd->add_option("--test-seed", sweep_opt.test_seed, "test set seed");
  sweep_flags.attach(ds_cmd);

  // phase-sim --------------------------------------------------------
  CommonOut sim_out;
  double sim_epsilon = 16.0;
  double sim_cfo = 0.0, sim_phase0 = 0.0, sim_snr_db = -1.0;
  std::uint64_t sim_seed = 7;
  bool sim_dump_iq = false, sim_random_orient = false;
  auto* ps = app.add_subcommand("phase-sim", "chirp-ratio phase extraction and inversion demo");
  ps->add_option("--out", sim_out.out_dir, "output directory");
  ps->add_option("--epsilon", sim_epsilon, "true permittivity");
  ps->add_option("--cfo", sim_cfo, "carrier frequency offset, Hz");
  ps->add_option("--phase0", sim_phase0, "constant phase offset, radians");
  ps->add_option("--snr-db", sim_snr_db, "add complex AWGN at this SNR (off when negative)");
  ps->add_option("--seed", sim_seed, "seed for orientation/noise");
  ps->add_flag("--random-orient", sim_random_orient, "use a random array orientation");
  ps->add_flag("--dump-iq", sim_dump_iq, "write the received IQ frame + sidecar header");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const fs::path dir = gen_out.prepare();
    const Dataset training = gen_training_set(gen_noise);
    save_csv(training, (dir / "train.csv").string());
    const Dataset test = gen_test_set(gen_test_count, gen_test_seed, gen_noise);
    save_csv(test, (dir / "test.csv").string());
    const auto counts = group_counts(training);
    std::cout << "wrote " << training.samples.size() << " training samples ("
              << (dir / "train.csv").string() << "), groups:";
    for (const auto& [tag, n] : counts) std::cout << " " << to_string(tag) << "=" << n;
    std::cout << "\nwrote " << test.samples.size() << " test samples ("
              << (dir / "test.csv").string() << ")\n";
    manifest(dir, "gen-data",
             {{"seed", std::to_string(gen_noise.seed)},
              {"noise_eps", fmt_g(gen_noise.sigma_epsilon_rel)},
              {"noise_vnir", fmt_g(gen_noise.sigma_vnir)},
              {"test_seed", std::to_string(gen_test_seed)},
              {"test_count", std::to_string(gen_test_count)}},
             argc, argv);
    return 0;
  }

  if (tr->parsed()) {
    const fs::path dir = train_out.prepare();
    Dataset training;
    if (train_data_csv.empty()) {
      training = gen_training_set();
    } else {
      training = load_csv(train_data_csv);
      validate_training_structure(training);
    }
    TrainConfig cfg = train_flags.cfg;
    cfg.seed = train_seed;
    const ModelBundle bundle = train(training, cfg);
    save_checkpoint(bundle, (dir / "model.txt").string());

    std::vector<SoilSample> preds;
    preds.reserve(training.samples.size());
    for (const auto& s : training.samples) preds.push_back(infer(bundle, s.sensing));
    std::vector<SoilSample> truths;
    for (const auto& s : training.samples) truths.push_back(s.composition);
    MaeReport fit = mae(preds, truths);
    fit.fingerprint = "train_seed=" + std::to_string(train_seed) + " set=training";

    const auto gram = bundle.directions.gram();
    double off_max = 0.0;
    for (int i = 0; i < kNumComponents; ++i)
      for (int j = 0; j < kNumComponents; ++j)
        if (i != j) off_max = std::max(off_max, std::abs(gram(i, j)));

    std::cout << "model written to " << (dir / "model.txt").string() << "\n";
    std::cout << "gram off-diagonal max |.| = " << off_max << "\n";
    print_and_write(dir, "train_fit", {{"training-fit", fit}});
    auto entries = train_flags.entries();
    entries.emplace_back("seed", std::to_string(train_seed));
    entries.emplace_back("data", train_data_csv.empty() ? "<canonical>" : train_data_csv);
    manifest(dir, "train", entries, argc, argv);
    return 0;
  }

  if (inf->parsed()) {
    const fs::path dir = infer_out.prepare();
    const ModelBundle bundle = load_checkpoint(infer_model);
    const Dataset data = load_csv(infer_data);
    const InferMode mode = infer_paper_literal ? InferMode::PaperLiteral : InferMode::Calibrated;
    std::vector<SoilSample> preds, truths;
    for (const auto& s : data.samples) {
      preds.push_back(infer(bundle, s.sensing, mode));
      truths.push_back(s.composition);
    }
    write_predictions(dir / "predictions.csv", data, preds);
    MaeReport r = mae(preds, truths);
    r.fingerprint = std::string("model=") + infer_model + " data=" + infer_data +
                    (infer_paper_literal ? " infer=paper-literal" : " infer=calibrated");
    print_and_write(dir, "infer_mae", {{"infer", r}});
    manifest(dir, "infer",
             {{"model", infer_model},
              {"data", infer_data},
              {"paper_literal", infer_paper_literal ? "1" : "0"}},
             argc, argv);
    return 0;
  }

  if (ev->parsed()) {
    const fs::path dir = eval_out.prepare();
    eval_opt.mode = ablation_mode_from_string(eval_mode);
    eval_opt.train_cfg = eval_flags.cfg;
    eval_opt.infer_mode = eval_paper_literal ? InferMode::PaperLiteral : InferMode::Calibrated;
    if (eval_gamma_deg >= 0.0) eval_opt.gamma_rad = eval_gamma_deg * kDegToRad;
    if (eval_seed) {
      if (ev->count("--train-seed") == 0) eval_opt.train_seed = *eval_seed;
      if (ev->count("--test-seed") == 0) eval_opt.test_seed = *eval_seed + 1000;
    }
    const EvalResult res = run_eval(eval_opt);
    print_and_write(dir, "report",
                    {{std::string("model-") + to_string(eval_opt.mode), res.model},
                     {"mean-predictor", res.baseline}});
    auto entries = eval_flags.entries();
    entries.emplace_back("train_seed", std::to_string(eval_opt.train_seed));
    entries.emplace_back("test_seed", std::to_string(eval_opt.test_seed));
    entries.emplace_back("noise_eps", fmt_g(eval_opt.noise.sigma_epsilon_rel));
    entries.emplace_back("noise_vnir", fmt_g(eval_opt.noise.sigma_vnir));
    entries.emplace_back("noise_seed", std::to_string(eval_opt.noise.seed));
    entries.emplace_back("mode", to_string(eval_opt.mode));
    entries.emplace_back("gamma_deg", fmt_g(res.gamma_rad / kDegToRad));
    entries.emplace_back("test_count", std::to_string(eval_opt.test_count));
    entries.emplace_back("paper_literal", eval_paper_literal ? "1" : "0");
    manifest(dir, "eval", entries, argc, argv);
    return 0;
  }

  if (ab->parsed()) {
    const fs::path dir = abl_out.prepare();
    abl_opt.train_cfg = abl_flags.cfg;
    abl_opt.gamma_rad = abl_gamma_deg * kDegToRad;
    std::vector<std::pair<std::string, MaeReport>> rows;
    for (AblationMode mode : {AblationMode::Full, AblationMode::NoSep, AblationMode::NoOrt,
                              AblationMode::DualAntenna}) {
      EvalOptions opt = abl_opt;
      opt.mode = mode;
      const EvalResult res = run_eval(opt);
      rows.emplace_back(to_string(mode), res.model);
      if (mode == AblationMode::Full) rows.emplace_back("mean-predictor", res.baseline);
    }
    print_and_write(dir, "ablation", rows);
    auto entries = abl_flags.entries();
    entries.emplace_back("train_seed", std::to_string(abl_opt.train_seed));
    entries.emplace_back("test_seed", std::to_string(abl_opt.test_seed));
    entries.emplace_back("gamma_deg", fmt_g(abl_gamma_deg));
    manifest(dir, "ablate", entries, argc, argv);
    return 0;
  }

  if (os_cmd->parsed()) {
    const fs::path dir = orient_out.prepare();
    const auto cases = standard_orientations(orient_random, orient_opt.seed);
    const auto rows = run_orient_sweep(cases, orient_opt);

    std::ostringstream table;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %14s %14s %14s %14s %s\n", "orientation", "eps_hat",
                  "abs_err", "noisy_mean", "noisy_std", "flags");
    table << line;
    for (const auto& r : rows) {
      std::snprintf(line, sizeof(line), "%-12s %14.9f %14.3e %14.6f %14.6f %s\n", r.name.c_str(),
                    r.eps_hat, std::abs(r.eps_hat - orient_opt.epsilon_true), r.noisy_mean,
                    r.noisy_std, r.ambiguous ? "AMBIGUOUS" : "");
      table << line;
    }
    std::cout << table.str();
    std::ofstream txt(dir / "orient_sweep.txt", std::ios::binary);
    txt << table.str();
    std::ofstream csv(dir / "orient_sweep.csv", std::ios::binary);
    csv << "orientation,eps_hat,abs_err,noisy_mean,noisy_std\n";
    for (const auto& r : rows)
      csv << r.name << "," << fmt_g(r.eps_hat) << ","
          << fmt_g(std::abs(r.eps_hat - orient_opt.epsilon_true)) << "," << fmt_g(r.noisy_mean)
          << "," << fmt_g(r.noisy_std) << "\n";

    manifest(dir, "orient-sweep",
             {{"epsilon", fmt_g(orient_opt.epsilon_true)},
              {"seed", std::to_string(orient_opt.seed)},
              {"random", std::to_string(orient_random)},
              {"noise_phase", fmt_g(orient_opt.phase_noise_sigma)},
              {"draws", std::to_string(orient_opt.noise_draws)},
              {"chirp", orient_opt.through_chirp ? "1" : "0"},
              {"wrapped", orient_opt.wrapped ? "1" : "0"}},
             argc, argv);
    return 0;
  }

  if (ds_cmd->parsed()) {
    const fs::path dir = sweep_out.prepare();
    sweep_opt.train_cfg = sweep_flags.cfg;
    const auto rows = run_data_sweep(sweep_sizes, sweep_opt);
    std::vector<std::pair<std::string, MaeReport>> table_rows;
    for (const auto& r : rows)
      table_rows.emplace_back("size-" + std::to_string(r.size), r.report);
    print_and_write(dir, "data_sweep", table_rows);
    auto entries = sweep_flags.entries();
    std::ostringstream sizes_str;
    for (std::size_t i = 0; i < sweep_sizes.size(); ++i)
      sizes_str << (i ? "," : "") << sweep_sizes[i];
    entries.emplace_back("sizes", sizes_str.str());
    entries.emplace_back("train_seed", std::to_string(sweep_opt.train_seed));
    entries.emplace_back("test_seed", std::to_string(sweep_opt.test_seed));
    manifest(dir, "data-sweep", entries, argc, argv);
    return 0;
  }

  if (ps->parsed()) {
    const fs::path dir = sim_out.prepare();
    const RfConfig rf;
    const ChirpConfig ccfg;
    const SwitchSchedule sched = SwitchSchedule::spft_default(ccfg);

    std::mt19937_64 rng(sim_seed);
    const Orientation orient =
        sim_random_orient ? Orientation::random(rng) : Orientation::identity();
    const PhaseTriple truth =
        forward_phases(sim_epsilon, Eigen::Vector3d::UnitZ(), orient, rf);
    const PhaseTriple truth_wrapped = wrap_phases(truth);

    Impairments imp;
    imp.cfo = sim_cfo;
    imp.phase0 = sim_phase0;
    imp.antenna_phases = {0.0, truth.phi[0], truth.phi[1], truth.phi[2]};
    IqFrame rx = apply_channel(gen_preamble(ccfg), imp, sched);
    if (sim_snr_db >= 0.0) rx = add_awgn(rx, sim_snr_db, sim_seed + 1);
    if (sim_dump_iq) save_iq(rx, ccfg, (dir / "frame.iq").string());

    const PhaseTriple extracted = extract_phase_triple(rx, ccfg, sched);
    const double match_tol = sim_snr_db >= 0.0 ? 1e-2 : 1e-9;
    const WrappedInversion inv = invert_wrapped(extracted, rf, EpsilonRange{}, match_tol);

    std::ostringstream table;
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %16s %16s %12s\n", "baseline", "true_wrapped",
                  "extracted", "abs_err");
    table << line;
    for (int k = 0; k < 3; ++k) {
      std::snprintf(line, sizeof(line), "k=%-8d %16.9f %16.9f %12.3e\n", k + 1,
                    truth_wrapped.phi[static_cast<std::size_t>(k)],
                    extracted.phi[static_cast<std::size_t>(k)],
                    std::abs(extracted.phi[static_cast<std::size_t>(k)] -
                             truth_wrapped.phi[static_cast<std::size_t>(k)]));
      table << line;
    }
    std::snprintf(line, sizeof(line), "eps_true=%.6f eps_hat=%.6f candidates=%zu%s\n",
                  sim_epsilon, inv.best().epsilon, inv.candidates.size(),
                  inv.ambiguous ? " AMBIGUOUS" : "");
    table << line;
    std::cout << table.str();
    std::ofstream txt(dir / "phase_sim.txt", std::ios::binary);
    txt << table.str();

    manifest(dir, "phase-sim",
             {{"epsilon", fmt_g(sim_epsilon)},
              {"cfo", fmt_g(sim_cfo)},
              {"phase0", fmt_g(sim_phase0)},
              {"snr_db", fmt_g(sim_snr_db)},
              {"seed", std::to_string(sim_seed)},
              {"random_orient", sim_random_orient ? "1" : "0"},
              {"dump_iq", sim_dump_iq ? "1" : "0"}},
             argc, argv);
    return 0;
  }

  return 0;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
