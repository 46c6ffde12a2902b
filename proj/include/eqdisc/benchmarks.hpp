#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqdisc/dataset.hpp"

namespace eqdisc {

struct SplitCounts {
  std::size_t train = 0;
  std::size_t test_id = 0;
  std::size_t test_ood = 0;  // 0 when the problem has no OOD split
};

// Train intervals per input, OOD intervals per input, and the inputs whose
// OOD interval is disjoint from the train interval.
struct RangeSpec {
  std::vector<VarInterval> train;
  std::vector<VarInterval> ood;
  std::vector<std::string> designated;
  SplitCounts counts;

  // Throws RangeError when no designated variable has disjoint intervals,
  // or the train/OOD variable lists disagree.
  void validate() const;
  // True if `row` lies outside the train box along a designated variable.
  bool outside_train(std::span<const double> row) const;
};

struct SamplingPlan {
  Split split = Split::train;
  std::vector<VarInterval> intervals;
  std::size_t count = 0;
  std::uint64_t stream_seed = 0;

  std::vector<std::vector<double>> sample() const;
};

struct SplitPlans {
  SamplingPlan train;
  SamplingPlan test_id;
  SamplingPlan test_ood;
};

// Train and test_id share intervals but draw from disjoint substreams;
// test_ood draws from the OOD intervals.
SplitPlans split_id_ood(const RangeSpec& spec, std::uint64_t seed);

struct SplitSet {
  Dataset train;
  Dataset test_id;
  std::optional<Dataset> test_ood;
};

// ---------------------------------------------------------------------------
// Ground-truth equations. Each throws RangeError outside its domain.

double chi2pdf_value(double x, double k);
double ndo_value(double t, double x, double v);

struct NnnWeights {
  double w11 = 0, w12 = 0, b1 = 0;  // hidden unit 1
  double w21 = 0, w22 = 0, b2 = 0;  // hidden unit 2
  double w1 = 0, w2 = 0, b = 0;     // output layer

  // Uniform draws in [-2, 2].
  static NnnWeights draw(std::uint64_t weight_seed);
};
double nnn_value(const NnnWeights& w, double x1, double x2);

inline constexpr double kGasConstant = 8.314;
inline constexpr double kFhstTemperature = 300.0;
double fhst_value(double phi, double chain_length, double chi);

// Placeholder constants; the source problem defers them elsewhere.
struct EcbgConstants {
  double mu_max = 1.0;
  double k_s = 1.0;
  double k = 0.5;
  double x0 = 20.0;
  double c = 1e-4;
  double x_decay = 45.0;
  double ph_opt = 7.0;
  double ph_min = 4.0;
  double ph_max = 10.0;
};
double ecbg_value(const EcbgConstants& c, double b, double s, double temp, double ph);

// Classic squid-axon conductances and reversal potentials; C_m fixed to 1.
struct HhmConstants {
  double g_na = 120.0;
  double g_k = 36.0;
  double g_l = 0.3;
  double v_na = 50.0;
  double v_k = -77.0;
  double v_l = -54.4;
  double c_m = 1.0;
};
double hhm_value(const HhmConstants& c, double v, double m, double n, double h, double i_ext);

// ---------------------------------------------------------------------------
// Catalog

struct CatalogEntry {
  std::string name;
  std::vector<std::string> inputs;
  std::string target;
  std::string description;
  std::string domain;
  std::size_t agents = 50;      // default K
  std::size_t iterations = 100; // default M
  bool synthetic = false;
  SplitCounts counts;
  std::optional<RangeSpec> ranges;  // synthetic problems only
};

const std::vector<CatalogEntry>& catalog();
// Throws CatalogError listing the valid names.
const CatalogEntry& find_problem(const std::string& name);
std::string catalog_json();

struct GenOptions {
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> weight_seed;  // NNN; defaults to seed
  std::optional<RangeSpec> ranges;           // overrides catalog ranges
  EcbgConstants ecbg;
  HhmConstants hhm;
};

// Generates train/test_id/test_ood for a synthetic problem.
SplitSet generate(const std::string& problem, const GenOptions& options);

SplitSet gen_chi2pdf(std::uint64_t seed, const std::optional<RangeSpec>& ranges = {});
SplitSet gen_ndo(std::uint64_t seed, const std::optional<RangeSpec>& ranges = {});
SplitSet gen_nnn(std::uint64_t seed, std::uint64_t weight_seed, const std::optional<RangeSpec>& ranges = {});
SplitSet gen_fhst(std::uint64_t seed, const std::optional<RangeSpec>& ranges = {});
SplitSet gen_ecbg(std::uint64_t seed, const EcbgConstants& constants = {},
                  const std::optional<RangeSpec>& ranges = {});
SplitSet gen_hhm(std::uint64_t seed, const HhmConstants& constants = {},
                 const std::optional<RangeSpec>& ranges = {});

// Ground truth written in the expression grammar, using the constants
// recorded in a generated dataset's provenance.
std::string ground_truth_expression(const std::string& problem, const Provenance& provenance);

// ---------------------------------------------------------------------------
// File ingestion

struct TabularSchema {
  std::vector<std::string> inputs;
  std::string target;
};

struct LoadResult {
  Dataset data;
  std::vector<std::string> warnings;
};

// Reads comma-separated values whose header must equal the schema. When
// `problem` names a cataloged problem, the row count is compared with the
// catalog count for `split` (mismatch is a warning).
LoadResult load_tabular(const std::string& path, const TabularSchema& schema,
                        const std::optional<std::string>& problem = {}, Split split = Split::train);

// Header-driven variant: all columns but the last are inputs.
LoadResult load_csv(const std::string& path, Split split = Split::train);

}  // namespace eqdisc
