#include "soilsim/dataset.hpp"

#include "soilsim/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace soilsim {

namespace {

constexpr GroupTag kComponentGroups[kNumComponents] = {GroupTag::M, GroupTag::N, GroupTag::P,
                                                       GroupTag::K, GroupTag::C, GroupTag::AL};

// Grid values per group; the reference value of the varied component is
// excluded (M=30 and Al=4 belong to the reference row itself).
const std::vector<double> kMoistureGrid = {0, 10, 20, 40, 50};
const std::vector<double> kAluminaGrid = {0, 2, 6, 8, 10};
const std::vector<double> kCarbonGrid = {10, 20, 30, 40, 50};
const std::vector<double> kNutrientGrid = {0.2, 0.4, 0.6, 0.8, 2, 4, 6, 8, 10};

LabeledSample make_labeled(const SoilSample& comp, GroupTag tag, const NoiseConfig& noise) {
  return LabeledSample{comp, sense(comp, noise), tag};
}

double parse_double(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError("unparseable number '" + std::string(field) + "'", line_no);
  return v;
}

void append_value(std::string& row, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  row += ',';
  row += buf;
}

} // namespace

const char* to_string(GroupTag tag) {
  switch (tag) {
    case GroupTag::REF: return "REF";
    case GroupTag::M: return "M";
    case GroupTag::N: return "N";
    case GroupTag::P: return "P";
    case GroupTag::K: return "K";
    case GroupTag::C: return "C";
    case GroupTag::AL: return "AL";
    case GroupTag::NONE: return "NONE";
  }
  return "NONE";
}

GroupTag group_tag_from_string(const std::string& s) {
  for (GroupTag t : {GroupTag::REF, GroupTag::M, GroupTag::N, GroupTag::P, GroupTag::K, GroupTag::C,
                     GroupTag::AL, GroupTag::NONE})
    if (s == to_string(t)) return t;
  throw ConfigError("unknown group tag '" + s + "'");
}

GroupTag component_group_tag(Component g) { return kComponentGroups[static_cast<int>(g)]; }

NormSpec NormSpec::canonical() {
  NormSpec n;
  n.ranges[static_cast<int>(Component::M)] = {0.0, 50.0};
  n.ranges[static_cast<int>(Component::N)] = {0.0, 10.0};
  n.ranges[static_cast<int>(Component::P)] = {0.0, 10.0};
  n.ranges[static_cast<int>(Component::K)] = {0.0, 10.0};
  n.ranges[static_cast<int>(Component::C)] = {0.0, 50.0};
  n.ranges[static_cast<int>(Component::Al)] = {0.0, 10.0};
  return n;
}

void NormSpec::validate() const {
  for (int g = 0; g < kNumComponents; ++g)
    if (!(ranges[g].second > ranges[g].first))
      throw ConfigError(std::string("normalization range for ") + kComponentNames[g] +
                        " must have max > min");
}

SoilSample reference_sample() {
  SoilSample ref;
  ref.m_pct = 30.0;
  ref.al_pct = 4.0;
  return ref;
}

Dataset gen_training_set(const NoiseConfig& noise) {
  Dataset ds;
  ds.seed = noise.seed;
  auto push = [&ds, &noise](const SoilSample& comp, GroupTag tag) {
    NoiseConfig per_sample = noise;
    per_sample.seed = noise.seed + ds.samples.size(); // independent draw per sample
    ds.samples.push_back(make_labeled(comp, tag, per_sample));
  };
  push(reference_sample(), GroupTag::REF);

  auto add_group = [&](GroupTag tag, const std::vector<double>& grid, double SoilSample::* field) {
    for (double v : grid) {
      SoilSample s = reference_sample();
      s.*field = v;
      push(s, tag);
    }
  };
  // Label order M, N, P, K, C, Al.
  add_group(GroupTag::M, kMoistureGrid, &SoilSample::m_pct);
  add_group(GroupTag::N, kNutrientGrid, &SoilSample::n_pml);
  add_group(GroupTag::P, kNutrientGrid, &SoilSample::p_pml);
  add_group(GroupTag::K, kNutrientGrid, &SoilSample::k_pml);
  add_group(GroupTag::C, kCarbonGrid, &SoilSample::c_pct);
  add_group(GroupTag::AL, kAluminaGrid, &SoilSample::al_pct);
  return ds;
}

Dataset gen_test_set(std::size_t count, std::uint64_t seed, const NoiseConfig& noise) {
  if (count < 1) throw ConfigError("test set needs at least one sample");
  Dataset ds;
  ds.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const NormSpec ranges = NormSpec::canonical();
  for (std::size_t i = 0; i < count; ++i) {
    std::array<double, 6> y{};
    for (int g = 0; g < kNumComponents; ++g) {
      const auto [lo, hi] = ranges.ranges[g];
      y[static_cast<std::size_t>(g)] = lo + (hi - lo) * uni(rng);
    }
    NoiseConfig per_sample = noise;
    per_sample.seed = noise.seed + i; // independent draw per sample
    ds.samples.push_back(make_labeled(sample_from_label_vector(y), GroupTag::NONE, per_sample));
  }
  return ds;
}

Eigen::Matrix<double, 6, 1> normalize_labels(const SoilSample& y, const NormSpec& norm) {
  norm.validate();
  const std::array<double, 6> label = label_vector(y);
  Eigen::Matrix<double, 6, 1> out;
  for (int g = 0; g < kNumComponents; ++g) {
    const auto [lo, hi] = norm.ranges[g];
    const double v = label[static_cast<std::size_t>(g)];
    if (!std::isfinite(v) || v < lo || v > hi) {
      std::ostringstream os;
      os << "component " << kComponentNames[g] << " = " << v << " outside [" << lo << ", " << hi
         << "]";
      throw std::domain_error(os.str());
    }
    out(g) = (v - lo) / (hi - lo);
  }
  return out;
}

SoilSample denormalize_labels(const Eigen::Matrix<double, 6, 1>& y_norm, const NormSpec& norm) {
  norm.validate();
  std::array<double, 6> label{};
  for (int g = 0; g < kNumComponents; ++g) {
    const auto [lo, hi] = norm.ranges[g];
    label[static_cast<std::size_t>(g)] = lo + (hi - lo) * y_norm(g);
  }
  return sample_from_label_vector(label);
}

std::map<GroupTag, std::size_t> group_counts(const Dataset& ds) {
  std::map<GroupTag, std::size_t> counts;
  for (const auto& s : ds.samples) ++counts[s.tag];
  return counts;
}

void validate_training_structure(const Dataset& ds) {
  const auto counts = group_counts(ds);
  const auto ref_it = counts.find(GroupTag::REF);
  const std::size_t n_ref = ref_it == counts.end() ? 0 : ref_it->second;
  if (n_ref != 1)
    throw StructureError("training set must contain exactly one REF sample, found " +
                         std::to_string(n_ref));
  for (int g = 0; g < kNumComponents; ++g) {
    const GroupTag tag = kComponentGroups[g];
    if (counts.find(tag) == counts.end())
      throw StructureError(std::string("training set is missing the ") + to_string(tag) +
                           " group");
  }
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary); // binary keeps LF endings everywhere
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << kCsvHeader << "\n";
  for (const auto& s : ds.samples) {
    std::string row = to_string(s.tag);
    append_value(row, s.composition.m_pct);
    append_value(row, s.composition.c_pct);
    append_value(row, s.composition.al_pct);
    append_value(row, s.composition.n_pml);
    append_value(row, s.composition.p_pml);
    append_value(row, s.composition.k_pml);
    append_value(row, s.sensing.epsilon);
    for (double v : s.sensing.vnir) append_value(row, v);
    out << row << "\n";
  }
  if (!out) throw ConfigError("short write to " + path);
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty file", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError("missing or malformed CSV header", 1);

  Dataset ds;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      if (comma == std::string_view::npos) {
        fields.push_back(rest);
        break;
      }
      fields.push_back(rest.substr(0, comma));
      rest = rest.substr(comma + 1);
    }
    if (fields.size() != 15)
      throw ParseError("expected 15 fields, found " + std::to_string(fields.size()), line_no);

    LabeledSample s;
    try {
      s.tag = group_tag_from_string(std::string(fields[0]));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
    s.composition.m_pct = parse_double(fields[1], line_no);
    s.composition.c_pct = parse_double(fields[2], line_no);
    s.composition.al_pct = parse_double(fields[3], line_no);
    s.composition.n_pml = parse_double(fields[4], line_no);
    s.composition.p_pml = parse_double(fields[5], line_no);
    s.composition.k_pml = parse_double(fields[6], line_no);
    s.sensing.epsilon = parse_double(fields[7], line_no);
    for (int b = 0; b < kNumBands; ++b)
      s.sensing.vnir[static_cast<std::size_t>(b)] =
          parse_double(fields[static_cast<std::size_t>(8 + b)], line_no);

    if (!s.composition.is_valid())
      throw ParseError("soil composition out of range", line_no);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

} // namespace soilsim
