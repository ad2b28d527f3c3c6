#pragma once

#include "soilsim/soil_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace soilsim {

/// Which component a structured training sample varies relative to the
/// reference composition. NONE marks samples outside the structured
/// grid (test samples, random augmentation).
enum class GroupTag { REF, M, N, P, K, C, AL, NONE };

const char* to_string(GroupTag tag);
GroupTag group_tag_from_string(const std::string& s);

/// Group tag of a component, label order [M, N, P, K, C, Al].
GroupTag component_group_tag(Component g);

struct LabeledSample {
  SoilSample composition;
  SensingVector sensing;
  GroupTag tag = GroupTag::NONE;
};

/// Per-component (min, max) used for label normalization, label order
/// [M, N, P, K, C, Al].
struct NormSpec {
  std::array<std::pair<double, double>, kNumComponents> ranges;

  /// M,C in [0,50]%, Al in [0,10]%, N,P,K in [0,10] per-mille.
  static NormSpec canonical();
  void validate() const;
};

struct Dataset {
  std::vector<LabeledSample> samples;
  NormSpec norm = NormSpec::canonical();
  std::uint64_t seed = 0;
};

/// The fixed reference composition {M=30, Al=4, C=0, N=P=K=0}.
SoilSample reference_sample();

/// Structured 43-sample training set: the reference plus six
/// single-component groups,
///   M-group  : M in {0,10,20,40,50}
///   Al-group : Al in {0,2,6,8,10}
///   C-group  : C in {10,20,30,40,50}
///   N/P/K    : {0.2,0.4,0.6,0.8, 2,4,6,8,10} per-mille each
/// Sensing vectors come from the forward model with the given noise
/// (noiseless by default).
Dataset gen_training_set(const NoiseConfig& noise = {});

/// Random test set, components drawn uniformly from the canonical
/// ranges, reproducible per seed.
Dataset gen_test_set(std::size_t count, std::uint64_t seed, const NoiseConfig& noise = {});

/// Min-max label normalization to [0,1]^6 and its exact inverse.
/// Throws std::domain_error for out-of-range components.
Eigen::Matrix<double, 6, 1> normalize_labels(const SoilSample& y, const NormSpec& norm);
SoilSample denormalize_labels(const Eigen::Matrix<double, 6, 1>& y_norm, const NormSpec& norm);

/// Group histogram of a dataset.
std::map<GroupTag, std::size_t> group_counts(const Dataset& ds);

/// Requires exactly one REF sample and a non-empty group for each of
/// the six components; throws StructureError otherwise.
void validate_training_structure(const Dataset& ds);

/// CSV persistence. Fixed header
///   tag,m_pct,c_pct,al_pct,n_pml,p_pml,k_pml,epsilon,v460,v620,v1200,v1300,v1450,v1550,v1650
/// UTF-8, LF line endings, >= 15 significant digits per value.
/// load_csv throws ParseError with the offending line number and
/// validates component ranges.
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

inline constexpr const char* kCsvHeader =
    "tag,m_pct,c_pct,al_pct,n_pml,p_pml,k_pml,epsilon,v460,v620,v1200,v1300,v1450,v1550,v1650";

} // namespace soilsim
