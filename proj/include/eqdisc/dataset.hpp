#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eqdisc {

enum class Split { train, test_id, test_ood };

std::string_view split_name(Split s) noexcept;
// Accepts "train", "test_id", "test_ood" (and "test" for test_id).
std::optional<Split> parse_split(std::string_view s) noexcept;

// Sampling interval of one input variable. Integer variables draw uniformly
// from {lo, ..., hi}; continuous ones from the open interval (lo, hi).
struct VarInterval {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool integer = false;

  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

struct Provenance {
  enum class Kind { synthetic, file };
  Kind kind = Kind::synthetic;
  std::string generator;                 // synthetic: problem name
  std::uint64_t seed = 0;                // synthetic
  std::vector<VarInterval> ranges;       // synthetic
  std::map<std::string, double> constants;  // synthetic: fixed equation constants
  std::string path;                      // file
  std::string checksum;                  // sha256 of the file bytes (file) or CSV text (synthetic)
};

// Observations for one split: a row-major input matrix plus a target column.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> var_names, std::string target_name, Split split = Split::train);

  // Throws LengthMismatch if inputs.size() != var_count().
  void add_row(std::span<const double> inputs, double target);
  void reserve(std::size_t rows);

  std::size_t rows() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }
  std::size_t var_count() const noexcept { return var_names_.size(); }

  std::span<const double> row(std::size_t i) const noexcept {
    return {inputs_.data() + i * var_names_.size(), var_names_.size()};
  }
  double target(std::size_t i) const noexcept { return targets_[i]; }
  const std::vector<double>& targets() const noexcept { return targets_; }
  std::vector<double> column(std::size_t j) const;
  std::optional<std::size_t> column_index(std::string_view name) const noexcept;

  const std::vector<std::string>& var_names() const noexcept { return var_names_; }
  const std::string& target_name() const noexcept { return target_name_; }

  Split split() const noexcept { return split_; }
  void set_split(Split s) noexcept { split_ = s; }
  const Provenance& provenance() const noexcept { return provenance_; }
  Provenance& provenance() noexcept { return provenance_; }

 private:
  std::vector<std::string> var_names_;
  std::string target_name_;
  std::vector<double> inputs_;
  std::vector<double> targets_;
  Split split_ = Split::train;
  Provenance provenance_;
};

// CSV text: header = input names then target name; shortest round-trip
// decimal for every value, '\n' line endings.
std::string to_csv(const Dataset& d);
// Writes the CSV file plus a "<path>.meta.json" sidecar. Throws IoError.
void write_dataset(const Dataset& d, const std::string& path);

std::string sha256_hex(std::string_view bytes);
// Throws IoError.
std::string read_file(const std::string& path);
// Writes to a temporary sibling then renames over `path`. Throws IoError.
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace eqdisc
