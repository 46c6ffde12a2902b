#include "eqdisc/benchmarks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "eqdisc/error.hpp"
#include "eqdisc/parser.hpp"
#include "eqdisc/rng.hpp"
#include "eqdisc/special.hpp"

namespace eqdisc {

namespace {

VarInterval cont(std::string name, double lo, double hi) { return {std::move(name), lo, hi, false}; }
VarInterval ints(std::string name, double lo, double hi) { return {std::move(name), lo, hi, true}; }

bool disjoint(const VarInterval& a, const VarInterval& b) {
  // Continuous draws come from open intervals, so shared endpoints are fine.
  if (a.integer || b.integer) return b.lo > a.hi || b.hi < a.lo;
  return b.lo >= a.hi || b.hi <= a.lo;
}

std::vector<CatalogEntry> build_catalog() {
  std::vector<CatalogEntry> c;

  auto synthetic = [&](std::string name, std::vector<std::string> inputs, std::string target,
                       std::string description, std::string domain, std::size_t k, std::size_t m,
                       SplitCounts counts, std::vector<VarInterval> train, std::vector<VarInterval> ood,
                       std::vector<std::string> designated) {
    CatalogEntry e;
    e.name = std::move(name);
    e.inputs = std::move(inputs);
    e.target = std::move(target);
    e.description = std::move(description);
    e.domain = std::move(domain);
    e.agents = k;
    e.iterations = m;
    e.synthetic = true;
    e.counts = counts;
    e.ranges = RangeSpec{std::move(train), std::move(ood), std::move(designated), counts};
    c.push_back(std::move(e));
  };
  auto tabular = [&](std::string name, std::vector<std::string> inputs, std::string target,
                     std::string description, std::string domain, std::size_t k, std::size_t m,
                     SplitCounts counts) {
    CatalogEntry e;
    e.name = std::move(name);
    e.inputs = std::move(inputs);
    e.target = std::move(target);
    e.description = std::move(description);
    e.domain = std::move(domain);
    e.agents = k;
    e.iterations = m;
    e.counts = counts;
    c.push_back(std::move(e));
  };

  synthetic("chi2pdf", {"x", "k"}, "density",
            "Probability density of the chi-squared distribution at point x for k degrees of freedom.",
            "statistics", 50, 100, {1000, 200, 200},
            {cont("x", 0.0, 10.0), ints("k", 1, 10)},
            {cont("x", 10.0, 20.0), ints("k", 1, 10)}, {"x"});
  synthetic("ndo", {"t", "x", "v"}, "a",
            "Acceleration a of a nonlinear damped, periodically forced oscillator given time t, "
            "position x and velocity v.",
            "physics", 50, 100, {10000, 10000, 10000},
            {cont("t", 0.0, 10.0), cont("x", -2.0, 2.0), cont("v", -2.0, 2.0)},
            {cont("t", 0.0, 10.0), cont("x", 2.0, 3.0), cont("v", -2.0, 2.0)}, {"x"});
  synthetic("nnn", {"x1", "x2"}, "y",
            "Output of an unknown small fully-connected network with two inputs x1 and x2.",
            "machine learning", 50, 200, {10000, 2000, 2000},
            {cont("x1", -3.0, 3.0), cont("x2", -3.0, 3.0)},
            {cont("x1", 3.0, 6.0), cont("x2", -3.0, 3.0)}, {"x1"});
  tabular("msb", {"strain", "temp"}, "stress",
          "Stress of aluminium 6061-T651 as a function of strain and temperature (measured data).",
          "materials science", 50, 100, {0, 0, 0});
  synthetic("fhst", {"phi", "N", "chi"}, "dG",
            "Gibbs free energy of mixing per lattice site of a polymer solution given polymer volume "
            "fraction phi, chain length N and interaction parameter chi.",
            "polymer science", 100, 50, {10000, 2000, 2000},
            {cont("phi", 0.05, 0.95), ints("N", 1, 100), cont("chi", 0.0, 2.0)},
            {cont("phi", 0.95, 0.999), ints("N", 1, 100), cont("chi", 0.0, 2.0)}, {"phi"});
  tabular("bdc", {"cycle", "voltage_measured", "current_measured", "temperature_measured", "current_load",
                  "voltage_load"},
          "capacity", "Discharge capacity of an 18650 lithium-ion cell from six measurements.",
          "materials science", 50, 100, {334, 83, 0});
  tabular("sfl", {"C", "Si", "Mn", "P", "S", "Ni", "Cr", "Cu", "Mo", "tempering_temp"}, "fatigue",
          "Fatigue limit of steel from the weight percents of nine elements and the final heat "
          "treatment temperature.",
          "materials science", 50, 100, {350, 87, 0});
  tabular("nomc", {"pressure", "temperature", "flow_rate", "h2_feed", "reactor_length", "reactor_diameter"},
          "c2_yield", "C2 yield of non-oxidative methane conversion from six reactor parameters.",
          "organic chemistry", 50, 200, {200, 51, 0});
  synthetic("ecbg", {"B", "S", "T", "pH"}, "dB_dt",
            "Growth rate of an E. coli population given population density B, substrate "
            "concentration S, temperature T and pH.",
            "mathematical biology", 50, 200, {7500, 2500, 2500},
            {cont("B", 0.0, 10.0), cont("S", 0.0, 5.0), cont("T", 15.0, 45.0), cont("pH", 4.0, 10.0)},
            {cont("B", 0.0, 10.0), cont("S", 0.0, 5.0), cont("T", 45.0, 55.0), cont("pH", 4.0, 10.0)},
            {"T"});
  synthetic("hhm", {"V", "m", "n", "h", "I_ext"}, "dV_dt",
            "Rate of change of the membrane potential V given gating probabilities m, n, h and "
            "external current I_ext.",
            "mathematical biology", 50, 100, {10000, 2000, 2000},
            {cont("V", -75.0, 35.0), cont("m", 0.0, 1.0), cont("n", 0.0, 1.0), cont("h", 0.0, 1.0),
             cont("I_ext", 0.0, 35.0)},
            {cont("V", -100.0, -75.0), cont("m", 0.0, 1.0), cont("n", 0.0, 1.0), cont("h", 0.0, 1.0),
             cont("I_ext", 35.0, 50.0)},
            {"V", "I_ext"});
  return c;
}

Dataset make_dataset(const CatalogEntry& entry, Split split) {
  return Dataset(entry.inputs, entry.target, split);
}

using RowFn = std::function<double(std::span<const double>)>;

SplitSet synthesize(const CatalogEntry& entry, const RangeSpec& ranges, std::uint64_t seed,
                    const std::map<std::string, double>& constants, const RowFn& fn) {
  ranges.validate();
  const auto plans = split_id_ood(ranges, seed);
  auto fill = [&](const SamplingPlan& plan) {
    Dataset d = make_dataset(entry, plan.split);
    d.reserve(plan.count);
    for (const auto& row : plan.sample()) {
      const double y = fn(row);
      if (!std::isfinite(y)) throw RangeError(entry.name + ": generator produced a non-finite target");
      d.add_row(row, y);
    }
    auto& p = d.provenance();
    p.kind = Provenance::Kind::synthetic;
    p.generator = entry.name;
    p.seed = seed;
    p.ranges = plan.intervals;
    p.constants = constants;
    p.checksum = sha256_hex(to_csv(d));
    return d;
  };
  SplitSet out{fill(plans.train), fill(plans.test_id), std::nullopt};
  if (plans.test_ood.count > 0) out.test_ood = fill(plans.test_ood);
  return out;
}

const RangeSpec& default_ranges(const std::string& name) { return *find_problem(name).ranges; }

std::map<std::string, double> ecbg_constants_map(const EcbgConstants& c) {
  return {{"mu_max", c.mu_max}, {"k_s", c.k_s},         {"k", c.k},
          {"x0", c.x0},         {"c", c.c},             {"x_decay", c.x_decay},
          {"ph_opt", c.ph_opt}, {"ph_min", c.ph_min},   {"ph_max", c.ph_max}};
}

std::map<std::string, double> hhm_constants_map(const HhmConstants& c) {
  return {{"g_na", c.g_na}, {"g_k", c.g_k}, {"g_l", c.g_l}, {"v_na", c.v_na},
          {"v_k", c.v_k},   {"v_l", c.v_l}, {"c_m", c.c_m}};
}

std::map<std::string, double> nnn_weights_map(const NnnWeights& w) {
  return {{"w11", w.w11}, {"w12", w.w12}, {"b1", w.b1}, {"w21", w.w21}, {"w22", w.w22},
          {"b2", w.b2},   {"w1", w.w1},   {"w2", w.w2}, {"b", w.b}};
}

double constant_of(const Provenance& p, const std::string& key) {
  auto it = p.constants.find(key);
  if (it == p.constants.end()) throw CatalogError("provenance lacks constant '" + key + "'");
  return it->second;
}

// Literal text for a possibly negative constant.
std::string lit(double v) {
  if (std::signbit(v)) return "(-" + format_number(-v) + ")";
  return format_number(v);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front()))) cell.remove_prefix(1);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back()))) cell.remove_suffix(1);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::size_t expected_rows(const CatalogEntry& e, Split split) {
  switch (split) {
    case Split::train: return e.counts.train;
    case Split::test_id: return e.counts.test_id;
    case Split::test_ood: return e.counts.test_ood;
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

void RangeSpec::validate() const {
  if (train.size() != ood.size()) throw RangeError("train and OOD ranges cover different variables");
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].name != ood[i].name) throw RangeError("train and OOD ranges list variables in different order");
    if (!(train[i].lo <= train[i].hi) || !(ood[i].lo <= ood[i].hi))
      throw RangeError("empty interval for '" + train[i].name + "'");
  }
  if (designated.empty()) throw RangeError("no designated OOD variable");
  for (const auto& name : designated) {
    auto it = std::find_if(train.begin(), train.end(), [&](const VarInterval& v) { return v.name == name; });
    if (it == train.end()) throw RangeError("designated variable '" + name + "' has no range");
    const auto idx = static_cast<std::size_t>(it - train.begin());
    if (!disjoint(train[idx], ood[idx]))
      throw RangeError("OOD interval of '" + name + "' overlaps its train interval");
  }
}

bool RangeSpec::outside_train(std::span<const double> row) const {
  for (const auto& name : designated) {
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train[i].name != name) continue;
      const double v = row[i];
      if (v < train[i].lo || v > train[i].hi) return true;
      // Open sampling: a draw on the shared endpoint is impossible, but an
      // OOD interval that starts where the train one ends is still outside.
      if (!train[i].integer && (v == train[i].hi || v == train[i].lo) && !ood[i].contains(v)) return true;
    }
  }
  return false;
}

std::vector<std::vector<double>> SamplingPlan::sample() const {
  RandomStream rng(stream_seed);
  std::vector<std::vector<double>> rows(count, std::vector<double>(intervals.size()));
  for (auto& row : rows) {
    for (std::size_t j = 0; j < intervals.size(); ++j) {
      const auto& iv = intervals[j];
      if (iv.integer) {
        const auto lo = static_cast<std::int64_t>(std::ceil(iv.lo));
        const auto hi = static_cast<std::int64_t>(std::floor(iv.hi));
        row[j] = static_cast<double>(lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
      } else {
        row[j] = rng.uniform(iv.lo, iv.hi);
      }
    }
  }
  return rows;
}

SplitPlans split_id_ood(const RangeSpec& spec, std::uint64_t seed) {
  spec.validate();
  SplitPlans plans;
  plans.train = {Split::train, spec.train, spec.counts.train, derive_seed(seed, {0})};
  plans.test_id = {Split::test_id, spec.train, spec.counts.test_id, derive_seed(seed, {1})};
  plans.test_ood = {Split::test_ood, spec.ood, spec.counts.test_ood, derive_seed(seed, {2})};
  return plans;
}

// ---------------------------------------------------------------------------

double chi2pdf_value(double x, double k) {
  if (!(x > 0.0)) throw RangeError("chi2pdf needs x > 0");
  if (!(k > 0.0)) throw RangeError("chi2pdf needs k > 0");
  return std::pow(x, k / 2.0 - 1.0) * std::exp(-x / 2.0) / (std::pow(2.0, k / 2.0) * gamma_fn(k / 2.0));
}

double ndo_value(double t, double x, double v) {
  constexpr double kF = 0.3, kOmega = 1.0, kAlpha = 0.5, kBeta = 1.0, kDelta = 5.0, kGamma = 0.5;
  return kF * std::sin(kOmega * t) - kAlpha * std::pow(v, 3.0) - kBeta * x * v - kDelta * x * std::exp(kGamma * x);
}

NnnWeights NnnWeights::draw(std::uint64_t weight_seed) {
  RandomStream rng(derive_seed(weight_seed, {0x6e6e6eULL}));
  NnnWeights w;
  for (double* p : {&w.w11, &w.w12, &w.b1, &w.w21, &w.w22, &w.b2, &w.w1, &w.w2, &w.b}) *p = rng.uniform(-2.0, 2.0);
  return w;
}

double nnn_value(const NnnWeights& w, double x1, double x2) {
  const double z1 = sigmoid(w.w11 * x1 + w.w12 * x2 + w.b1);
  const double z2 = sigmoid(w.w21 * x1 + w.w22 * x2 + w.b2);
  return w.w1 * z1 + w.w2 * z2 + w.b;
}

double fhst_value(double phi, double chain_length, double chi) {
  if (!(phi > 0.0 && phi < 1.0)) throw RangeError("fhst needs 0 < phi < 1");
  if (!(chain_length >= 1.0)) throw RangeError("fhst needs N >= 1");
  const double psi = 1.0 - phi;
  return kGasConstant * kFhstTemperature *
         (phi / chain_length * std::log(phi) + psi * std::log(psi) + chi * phi * psi);
}

double ecbg_value(const EcbgConstants& c, double b, double s, double temp, double ph) {
  if (b < 0.0 || s < 0.0) throw RangeError("ecbg needs B >= 0 and S >= 0");
  const double f_ph = std::exp(-std::fabs(ph - c.ph_opt)) *
                      std::pow(std::sin((ph - c.ph_min) * std::numbers::pi / (c.ph_max - c.ph_min)), 2.0);
  return c.mu_max * b * (s / (c.k_s + s)) * std::tanh(c.k * (temp - c.x0)) /
         (1.0 + c.c * std::pow(temp - c.x_decay, 4.0)) * f_ph;
}

double hhm_value(const HhmConstants& c, double v, double m, double n, double h, double i_ext) {
  for (double g : {m, n, h})
    if (!(g >= 0.0 && g <= 1.0)) throw RangeError("hhm gating variables must lie in [0, 1]");
  return (c.g_na * std::pow(m, 3.0) * h * (c.v_na - v) + c.g_k * std::pow(n, 4.0) * (c.v_k - v) +
          c.g_l * (c.v_l - v) + i_ext) /
         c.c_m;
}

// ---------------------------------------------------------------------------

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = build_catalog();
  return entries;
}

const CatalogEntry& find_problem(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return e;
  std::string names;
  for (const auto& e : catalog()) names += (names.empty() ? "" : ", ") + e.name;
  throw CatalogError("unknown problem '" + name + "'; valid problems: " + names);
}

std::string catalog_json() {
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  for (const auto& e : catalog()) {
    nlohmann::ordered_json j;
    j["name"] = e.name;
    j["inputs"] = e.inputs;
    j["target"] = e.target;
    j["description"] = e.description;
    j["domain"] = e.domain;
    j["K"] = e.agents;
    j["M"] = e.iterations;
    j["synthetic"] = e.synthetic;
    j["counts"] = {{"train", e.counts.train}, {"test_id", e.counts.test_id}, {"test_ood", e.counts.test_ood}};
    if (e.ranges) {
      auto iv = [](const std::vector<VarInterval>& v) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : v) arr.push_back({{"name", r.name}, {"lo", r.lo}, {"hi", r.hi}, {"integer", r.integer}});
        return arr;
      };
      j["ranges"] = {{"train", iv(e.ranges->train)}, {"ood", iv(e.ranges->ood)}, {"designated", e.ranges->designated}};
    }
    all.push_back(j);
  }
  return all.dump(2) + "\n";
}

SplitSet gen_chi2pdf(std::uint64_t seed, const std::optional<RangeSpec>& ranges) {
  const auto& entry = find_problem("chi2pdf");
  return synthesize(entry, ranges.value_or(default_ranges("chi2pdf")), seed, {},
                    [](std::span<const double> r) { return chi2pdf_value(r[0], r[1]); });
}

SplitSet gen_ndo(std::uint64_t seed, const std::optional<RangeSpec>& ranges) {
  const auto& entry = find_problem("ndo");
  return synthesize(entry, ranges.value_or(default_ranges("ndo")), seed,
                    {{"F", 0.3}, {"omega", 1.0}, {"alpha", 0.5}, {"beta", 1.0}, {"delta", 5.0}, {"gamma", 0.5}},
                    [](std::span<const double> r) { return ndo_value(r[0], r[1], r[2]); });
}

SplitSet gen_nnn(std::uint64_t seed, std::uint64_t weight_seed, const std::optional<RangeSpec>& ranges) {
  const auto& entry = find_problem("nnn");
  const auto w = NnnWeights::draw(weight_seed);
  auto constants = nnn_weights_map(w);
  constants["weight_seed"] = static_cast<double>(weight_seed);
  return synthesize(entry, ranges.value_or(default_ranges("nnn")), seed, constants,
                    [w](std::span<const double> r) { return nnn_value(w, r[0], r[1]); });
}

SplitSet gen_fhst(std::uint64_t seed, const std::optional<RangeSpec>& ranges) {
  const auto& entry = find_problem("fhst");
  return synthesize(entry, ranges.value_or(default_ranges("fhst")), seed,
                    {{"R", kGasConstant}, {"T", kFhstTemperature}},
                    [](std::span<const double> r) { return fhst_value(r[0], r[1], r[2]); });
}

SplitSet gen_ecbg(std::uint64_t seed, const EcbgConstants& constants, const std::optional<RangeSpec>& ranges) {
  const auto& entry = find_problem("ecbg");
  return synthesize(entry, ranges.value_or(default_ranges("ecbg")), seed, ecbg_constants_map(constants),
                    [constants](std::span<const double> r) { return ecbg_value(constants, r[0], r[1], r[2], r[3]); });
}

SplitSet gen_hhm(std::uint64_t seed, const HhmConstants& constants, const std::optional<RangeSpec>& ranges) {
  const auto& entry = find_problem("hhm");
  return synthesize(entry, ranges.value_or(default_ranges("hhm")), seed, hhm_constants_map(constants),
                    [constants](std::span<const double> r) {
                      return hhm_value(constants, r[0], r[1], r[2], r[3], r[4]);
                    });
}

SplitSet generate(const std::string& problem, const GenOptions& o) {
  const auto& entry = find_problem(problem);
  if (!entry.synthetic)
    throw CatalogError("problem '" + problem + "' is file-based; use load_tabular on its data files");
  if (problem == "chi2pdf") return gen_chi2pdf(o.seed, o.ranges);
  if (problem == "ndo") return gen_ndo(o.seed, o.ranges);
  if (problem == "nnn") return gen_nnn(o.seed, o.weight_seed.value_or(o.seed), o.ranges);
  if (problem == "fhst") return gen_fhst(o.seed, o.ranges);
  if (problem == "ecbg") return gen_ecbg(o.seed, o.ecbg, o.ranges);
  return gen_hhm(o.seed, o.hhm, o.ranges);
}

std::string ground_truth_expression(const std::string& problem, const Provenance& p) {
  find_problem(problem);
  if (problem == "chi2pdf") return "x^(k/2 - 1)*exp(-x/2)/(2^(k/2)*gamma(k/2))";
  if (problem == "ndo") return "0.3*sin(1*t) - 0.5*v^3 - 1*x*v - 5*x*exp(0.5*x)";
  if (problem == "fhst") return "8.314*300*(phi/N*log(phi) + (1 - phi)*log(1 - phi) + chi*phi*(1 - phi))";
  if (problem == "nnn") {
    auto c = [&](const char* k) { return lit(constant_of(p, k)); };
    return c("w1") + "*sigmoid(" + c("w11") + "*x1 + " + c("w12") + "*x2 + " + c("b1") + ") + " + c("w2") +
           "*sigmoid(" + c("w21") + "*x1 + " + c("w22") + "*x2 + " + c("b2") + ") + " + c("b");
  }
  if (problem == "ecbg") {
    auto c = [&](const char* k) { return lit(constant_of(p, k)); };
    return c("mu_max") + "*B*(S/(" + c("k_s") + " + S))*tanh(" + c("k") + "*(T - " + c("x0") + "))/(1 + " + c("c") +
           "*(T - " + c("x_decay") + ")^4)*(exp(-abs(pH - " + c("ph_opt") + "))*sin((pH - " + c("ph_min") + ")*" +
           format_number(std::numbers::pi) + "/(" + c("ph_max") + " - " + c("ph_min") + "))^2)";
  }
  if (problem == "hhm") {
    auto c = [&](const char* k) { return lit(constant_of(p, k)); };
    return "(" + c("g_na") + "*m^3*h*(" + c("v_na") + " - V) + " + c("g_k") + "*n^4*(" + c("v_k") + " - V) + " +
           c("g_l") + "*(" + c("v_l") + " - V) + I_ext)/" + c("c_m");
  }
  throw CatalogError("problem '" + problem + "' has no analytic ground truth");
}

// ---------------------------------------------------------------------------

LoadResult load_tabular(const std::string& path, const TabularSchema& schema,
                        const std::optional<std::string>& problem, Split split) {
  const std::string bytes = read_file(path);
  std::istringstream in(bytes);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  std::vector<std::string> expected = schema.inputs;
  expected.push_back(schema.target);
  if (header != expected) {
    std::string want, got;
    for (const auto& s : expected) want += (want.empty() ? "" : ",") + s;
    for (const auto& s : header) got += (got.empty() ? "" : ",") + s;
    throw SchemaError("'" + path + "' header '" + got + "' does not match schema '" + want + "'");
  }

  LoadResult out{Dataset(schema.inputs, schema.target, split), {}};
  std::vector<double> values(expected.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != expected.size())
      throw SchemaError("'" + path + "' row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(expected.size()));
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto& cell = cells[j];
      const char* first = cell.data();
      if (!cell.empty() && cell.front() == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), values[j]);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(values[j]))
        throw NonNumericCell(row, j + 1, cell);
    }
    out.data.add_row(std::span<const double>(values.data(), schema.inputs.size()), values.back());
  }

  auto& p = out.data.provenance();
  p.kind = Provenance::Kind::file;
  p.path = path;
  p.checksum = sha256_hex(bytes);

  if (problem) {
    const auto& entry = find_problem(*problem);
    const std::size_t want = expected_rows(entry, split);
    if (want > 0 && want != out.data.rows())
      out.warnings.push_back("row count mismatch for " + entry.name + " " + std::string(split_name(split)) +
                             ": expected " + std::to_string(want) + ", found " + std::to_string(out.data.rows()));
  }
  return out;
}

LoadResult load_csv(const std::string& path, Split split) {
  const std::string bytes = read_file(path);
  const auto eol = bytes.find('\n');
  std::string first = bytes.substr(0, eol);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (first.size() >= 3 && first.compare(0, 3, "\xEF\xBB\xBF") == 0) first.erase(0, 3);
  auto header = split_csv_line(first);
  if (header.size() < 2) throw SchemaError("'" + path + "' needs at least one input column and a target column");
  TabularSchema schema;
  schema.target = header.back();
  header.pop_back();
  schema.inputs = std::move(header);
  return load_tabular(path, schema, std::nullopt, split);
}

}  // namespace eqdisc
