#include "eqdisc/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

#include "eqdisc/error.hpp"
#include "eqdisc/parser.hpp"

namespace eqdisc {

using nlohmann::json;

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::test_id: return "test_id";
    case Split::test_ood: return "test_ood";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view s) noexcept {
  if (s == "train") return Split::train;
  if (s == "test_id" || s == "test") return Split::test_id;
  if (s == "test_ood" || s == "ood") return Split::test_ood;
  return std::nullopt;
}

Dataset::Dataset(std::vector<std::string> var_names, std::string target_name, Split split)
    : var_names_(std::move(var_names)), target_name_(std::move(target_name)), split_(split) {}

void Dataset::add_row(std::span<const double> inputs, double target) {
  if (inputs.size() != var_names_.size())
    throw LengthMismatch("row has " + std::to_string(inputs.size()) + " inputs, dataset has " +
                         std::to_string(var_names_.size()) + " columns");
  inputs_.insert(inputs_.end(), inputs.begin(), inputs.end());
  targets_.push_back(target);
}

void Dataset::reserve(std::size_t rows) {
  inputs_.reserve(rows * var_names_.size());
  targets_.reserve(rows);
}

std::vector<double> Dataset::column(std::size_t j) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = inputs_[i * var_names_.size() + j];
  return out;
}

std::optional<std::size_t> Dataset::column_index(std::string_view name) const noexcept {
  auto it = std::find(var_names_.begin(), var_names_.end(), name);
  if (it == var_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - var_names_.begin());
}

std::string to_csv(const Dataset& d) {
  std::string out;
  out.reserve(d.rows() * (d.var_count() + 1) * 12);
  for (const auto& n : d.var_names()) {
    out += n;
    out += ',';
  }
  out += d.target_name();
  out += '\n';
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (double v : d.row(i)) {
      out += format_number(v);
      out += ',';
    }
    out += format_number(d.target(i));
    out += '\n';
  }
  return out;
}

namespace {

json provenance_json(const Dataset& d, const std::string& checksum) {
  const auto& p = d.provenance();
  json j;
  j["split"] = std::string(split_name(d.split()));
  j["rows"] = d.rows();
  j["columns"] = d.var_names();
  j["target"] = d.target_name();
  j["checksum"] = checksum;
  if (p.kind == Provenance::Kind::synthetic) {
    j["provenance"] = "synthetic";
    j["generator"] = p.generator;
    j["seed"] = p.seed;
    json ranges = json::array();
    for (const auto& r : p.ranges)
      ranges.push_back({{"name", r.name}, {"lo", r.lo}, {"hi", r.hi}, {"integer", r.integer}});
    j["ranges"] = ranges;
    j["constants"] = p.constants;
  } else {
    j["provenance"] = "file";
    j["source"] = p.path;
    j["source_checksum"] = p.checksum;
  }
  return j;
}

}  // namespace

void write_dataset(const Dataset& d, const std::string& path) {
  const std::string text = to_csv(d);
  const std::string checksum = sha256_hex(text);
  write_file_atomic(path, text);
  write_file_atomic(path + ".meta.json", provenance_json(d, checksum).dump(2) + "\n");
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
}

}  // namespace eqdisc
