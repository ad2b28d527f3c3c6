#include "soilsim/dataset.hpp"
#include "soilsim/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace soilsim;

namespace {

std::filesystem::path tmp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

bool sample_equal(const LabeledSample& a, const LabeledSample& b) {
  return a.tag == b.tag && a.composition.m_pct == b.composition.m_pct &&
         a.composition.c_pct == b.composition.c_pct &&
         a.composition.al_pct == b.composition.al_pct &&
         a.composition.n_pml == b.composition.n_pml &&
         a.composition.p_pml == b.composition.p_pml &&
         a.composition.k_pml == b.composition.k_pml && a.sensing.epsilon == b.sensing.epsilon &&
         a.sensing.vnir == b.sensing.vnir;
}

} // namespace

TEST_CASE("structured training set") {
  const Dataset ds = gen_training_set();
  CHECK(ds.samples.size() == 43);

  const auto counts = group_counts(ds);
  CHECK(counts.at(GroupTag::REF) == 1);
  CHECK(counts.at(GroupTag::M) == 5);
  CHECK(counts.at(GroupTag::AL) == 5);
  CHECK(counts.at(GroupTag::C) == 5);
  CHECK(counts.at(GroupTag::N) == 9);
  CHECK(counts.at(GroupTag::P) == 9);
  CHECK(counts.at(GroupTag::K) == 9);
  CHECK_NOTHROW(validate_training_structure(ds));

  const SoilSample ref = reference_sample();
  CHECK(ref.m_pct == 30.0);
  CHECK(ref.al_pct == 4.0);
  CHECK(ref.c_pct == 0.0);
  CHECK(ref.n_pml == 0.0);

  // the M1 row of the structured grid: moisture lowered to 10, the rest
  // at the reference values
  bool found_m1 = false;
  for (const auto& s : ds.samples)
    if (s.tag == GroupTag::M && s.composition.m_pct == 10.0) {
      found_m1 = true;
      CHECK(s.composition.al_pct == 4.0);
      CHECK(s.composition.c_pct == 0.0);
      CHECK(s.composition.n_pml == 0.0);
      CHECK(s.composition.p_pml == 0.0);
      CHECK(s.composition.k_pml == 0.0);
    }
  CHECK(found_m1);

  // every non-reference sample differs from the reference in exactly one
  // component
  const auto ref_label = label_vector(ref);
  for (const auto& s : ds.samples) {
    if (s.tag == GroupTag::REF) continue;
    const auto y = label_vector(s.composition);
    int n_diff = 0;
    for (int g = 0; g < 6; ++g)
      if (y[static_cast<std::size_t>(g)] != ref_label[static_cast<std::size_t>(g)]) ++n_diff;
    CHECK(n_diff == 1);
  }

  // sensing vectors are the noiseless forward model
  for (const auto& s : ds.samples) {
    CHECK(s.sensing.epsilon == permittivity_of(s.composition));
    CHECK(s.sensing.vnir == vnir_response(s.composition));
  }

  const std::size_t l = ds.samples.size();
  CHECK(l * (l - 1) / 2 == 903);
}

TEST_CASE("random test set") {
  const Dataset a = gen_test_set(55, 9);
  CHECK(a.samples.size() == 55);
  const Dataset b = gen_test_set(55, 9);
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(sample_equal(a.samples[i], b.samples[i]));

  const Dataset c = gen_test_set(55, 10);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    if (!sample_equal(a.samples[i], c.samples[i])) any_diff = true;
  CHECK(any_diff);

  for (const auto& s : a.samples) {
    CHECK(s.tag == GroupTag::NONE);
    CHECK(s.composition.is_valid());
  }
  CHECK_THROWS_AS(gen_test_set(0, 1), ConfigError);
}

TEST_CASE("label normalization") {
  const NormSpec norm = NormSpec::canonical();
  const auto ref = normalize_labels(reference_sample(), norm);
  CHECK(ref(0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(ref(1) == 0.0);
  CHECK(ref(2) == 0.0);
  CHECK(ref(3) == 0.0);
  CHECK(ref(4) == 0.0);
  CHECK(ref(5) == doctest::Approx(0.4).epsilon(1e-12));

  CHECK(normalize_labels(SoilSample{}, norm).norm() == 0.0);
  SoilSample maxed;
  maxed.m_pct = maxed.c_pct = 50.0;
  maxed.al_pct = maxed.n_pml = maxed.p_pml = maxed.k_pml = 10.0;
  CHECK((normalize_labels(maxed, norm) - Eigen::Matrix<double, 6, 1>::Ones()).norm() == 0.0);

  // exact inverse on random in-range samples
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    SoilSample s;
    s.m_pct = 50.0 * uni(rng);
    s.c_pct = 50.0 * uni(rng);
    s.al_pct = 10.0 * uni(rng);
    s.n_pml = 10.0 * uni(rng);
    s.p_pml = 10.0 * uni(rng);
    s.k_pml = 10.0 * uni(rng);
    const SoilSample back = denormalize_labels(normalize_labels(s, norm), norm);
    CHECK(std::abs(back.m_pct - s.m_pct) < 1e-12);
    CHECK(std::abs(back.c_pct - s.c_pct) < 1e-12);
    CHECK(std::abs(back.al_pct - s.al_pct) < 1e-12);
    CHECK(std::abs(back.n_pml - s.n_pml) < 1e-12);
    CHECK(std::abs(back.p_pml - s.p_pml) < 1e-12);
    CHECK(std::abs(back.k_pml - s.k_pml) < 1e-12);
  }

  SoilSample out_of_range;
  out_of_range.m_pct = 51.0;
  CHECK_THROWS_AS(normalize_labels(out_of_range, norm), std::domain_error);
}

TEST_CASE("csv round trip") {
  const Dataset ds = gen_training_set();
  const auto path = tmp_file("soilsim_train.csv");
  save_csv(ds, path.string());

  const Dataset loaded = load_csv(path.string());
  REQUIRE(loaded.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    CHECK(sample_equal(ds.samples[i], loaded.samples[i]));
  CHECK_NOTHROW(validate_training_structure(loaded));
  const auto counts = group_counts(loaded);
  CHECK(counts.at(GroupTag::REF) == 1);
  CHECK(counts.at(GroupTag::N) == 9);
  std::filesystem::remove(path);
}

TEST_CASE("csv error reporting") {
  const auto path = tmp_file("soilsim_bad.csv");

  SUBCASE("missing header") {
    std::ofstream(path) << "not,a,header\n";
    CHECK_THROWS_AS(load_csv(path.string()), ParseError);
  }

  SUBCASE("out-of-range component") {
    std::ofstream(path) << kCsvHeader << "\n"
                        << "REF,60,0,4,0,0,0,20.0,0.3,0.3,0.2,0.2,0.1,0.2,0.27\n";
    try {
      load_csv(path.string());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }

  SUBCASE("malformed row reports its line") {
    std::ofstream(path) << kCsvHeader << "\n"
                        << "REF,30,0,4,0,0,0,20.0,0.3,0.3,0.2,0.2,0.1,0.2,0.27\n"
                        << "M,10,0,4,0,0,bogus,20.0,0.3,0.3,0.2,0.2,0.1,0.2,0.27\n";
    try {
      load_csv(path.string());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }

  SUBCASE("wrong field count") {
    std::ofstream(path) << kCsvHeader << "\n" << "REF,30,0,4\n";
    CHECK_THROWS_AS(load_csv(path.string()), ParseError);
  }

  std::filesystem::remove(path);
}

TEST_CASE("training structure validation") {
  Dataset ds = gen_training_set();
  ds.samples.erase(ds.samples.begin()); // drop REF
  CHECK_THROWS_AS(validate_training_structure(ds), StructureError);

  Dataset doubled = gen_training_set();
  doubled.samples.push_back(doubled.samples.front());
  CHECK_THROWS_AS(validate_training_structure(doubled), StructureError);

  Dataset no_k = gen_training_set();
  std::erase_if(no_k.samples, [](const LabeledSample& s) { return s.tag == GroupTag::K; });
  CHECK_THROWS_AS(validate_training_structure(no_k), StructureError);
}

TEST_CASE("group tag names round trip") {
  for (GroupTag t : {GroupTag::REF, GroupTag::M, GroupTag::N, GroupTag::P, GroupTag::K,
                     GroupTag::C, GroupTag::AL, GroupTag::NONE})
    CHECK(group_tag_from_string(to_string(t)) == t);
  CHECK_THROWS_AS(group_tag_from_string("XYZ"), ConfigError);
}
