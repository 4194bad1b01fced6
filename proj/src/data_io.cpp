#include "tinder/data_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "tinder/errors.hpp"
#include "tinder/json_io.hpp"

namespace tinder {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_number(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc{} && ptr == cell.data() + cell.size();
}

bool parse_int(std::string_view cell, int& out) {
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc{} && ptr == cell.data() + cell.size();
}

std::vector<int> encode_labels(const std::vector<std::string>& raw) {
  std::vector<int> out(raw.size());
  bool integral = true;
  for (std::size_t i = 0; i < raw.size() && integral; ++i)
    integral = parse_int(raw[i], out[i]) && out[i] >= 0;
  if (integral) return out;
  std::unordered_map<std::string, int> codes;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto [it, inserted] = codes.emplace(raw[i], static_cast<int>(codes.size()));
    out[i] = it->second;
  }
  return out;
}

}  // namespace

DataMatrix parse_csv(std::string_view text, const CsvOptions& options) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  // Line numbers (1-based) of non-blank lines.
  std::vector<std::size_t> line_no;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (!trim(lines[i]).empty()) line_no.push_back(i + 1);
  if (line_no.empty()) throw FormatError("CSV input is empty");

  const auto first = split_fields(lines[line_no.front() - 1]);
  bool has_header = options.header == HeaderMode::present;
  if (options.header == HeaderMode::detect) {
    double ignored;
    has_header = std::any_of(first.begin(), first.end(),
                             [&](std::string_view c) { return !parse_number(c, ignored); });
    // A label column may legitimately be non-numeric; only call it a header
    // when some cell outside it fails to parse as well.
    if (has_header && options.label_column) {
      int idx;
      if (parse_int(*options.label_column, idx) && idx >= 0 &&
          static_cast<std::size_t>(idx) < first.size()) {
        has_header = false;
        for (std::size_t c = 0; c < first.size(); ++c)
          if (c != static_cast<std::size_t>(idx) && !parse_number(first[c], ignored))
            has_header = true;
      }
    }
  }
  const std::size_t width = first.size();

  std::optional<std::size_t> label_idx;
  if (options.label_column) {
    const auto& name = *options.label_column;
    if (has_header) {
      const auto it = std::find(first.begin(), first.end(), std::string_view(name));
      if (it != first.end()) label_idx = static_cast<std::size_t>(it - first.begin());
    }
    int idx;
    if (!label_idx && parse_int(name, idx) && idx >= 0) label_idx = static_cast<std::size_t>(idx);
    if (!label_idx || *label_idx >= width)
      throw FormatError("label column '" + name + "' not found");
  }
  if (label_idx && width < 2) throw FormatError("CSV needs at least one feature column besides labels");

  const std::size_t start = has_header ? 1 : 0;
  const std::size_t n = line_no.size() - start;
  if (n == 0) throw FormatError("CSV has no data rows");
  const std::size_t d = width - (label_idx ? 1 : 0);

  Matrix values(n, d);
  std::vector<std::string> raw_labels;
  if (label_idx) raw_labels.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t ln = line_no[start + r];
    const auto fields = split_fields(lines[ln - 1]);
    if (fields.size() != width)
      throw FormatError("ragged CSV: row " + std::to_string(ln) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(width));
    std::size_t out_col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (label_idx && c == *label_idx) {
        raw_labels.emplace_back(fields[c]);
        continue;
      }
      double v;
      if (!parse_number(fields[c], v) || !std::isfinite(v))
        throw ParseError(ln, c + 1, "not a finite number: '" + std::string(fields[c]) + "'");
      values(r, out_col++) = v;
    }
  }
  std::optional<std::vector<int>> labels;
  if (label_idx) labels = encode_labels(raw_labels);
  return make_data(std::move(values), std::move(labels));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace '" + path.string() + "': " + ec.message());
}

DataMatrix load_csv(const fs::path& path, const CsvOptions& options) {
  return parse_csv(read_file(path), options);
}

std::string content_hash(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

DataMatrix generate_blobs(const SyntheticSpec& spec) {
  if (spec.centers.empty()) throw InvalidConfig("synthetic spec needs at least one center");
  if (!(spec.sigma > 0.0)) throw InvalidConfig("synthetic sigma must be positive");
  if (spec.points_per_center == 0) throw InvalidConfig("points_per_center must be positive");
  const std::size_t d = spec.centers.front().size();
  if (d == 0) throw InvalidConfig("centers must have at least one dimension");
  for (const auto& c : spec.centers)
    if (c.size() != d) throw InvalidConfig("all centers must have the same dimension");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.sigma);
  const std::size_t n = spec.centers.size() * spec.points_per_center;
  Matrix values(n, d);
  std::vector<int> labels(n);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.centers.size(); ++c)
    for (std::size_t p = 0; p < spec.points_per_center; ++p, ++row) {
      for (std::size_t j = 0; j < d; ++j) values(row, j) = spec.centers[c][j] + noise(rng);
      labels[row] = static_cast<int>(c);
    }
  return make_data(std::move(values), std::move(labels));
}

SyntheticSpec four_blob_scenario(std::uint64_t seed) {
  return SyntheticSpec{{{-3.0, 3.0}, {3.0, 3.0}, {-3.0, -3.0}, {3.0, -3.0}}, 0.7, 200, seed};
}

SyntheticSpec ten_blob_scenario(std::uint64_t seed, double separation) {
  SyntheticSpec spec;
  spec.sigma = 1.0;
  spec.points_per_center = 200;
  spec.seed = seed;
  for (std::size_t c = 0; c < 10; ++c) {
    std::vector<double> center(10, 0.0);
    center[c] = separation;
    spec.centers.push_back(std::move(center));
  }
  return spec;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string data_to_csv(const DataMatrix& data) {
  std::string out;
  for (std::size_t j = 0; j < data.d(); ++j) out += (j ? ",x" : "x") + std::to_string(j);
  if (data.labels) out += ",label";
  out += '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.d(); ++j) {
      if (j) out += ',';
      out += format_double(data.values(i, j));
    }
    if (data.labels) out += ',' + std::to_string((*data.labels)[i]);
    out += '\n';
  }
  return out;
}

std::string data_fingerprint(const DataMatrix& data) { return content_hash(data_to_csv(data)); }

ExportFormat export_format_from_string(std::string_view name) {
  if (name == "csv") return ExportFormat::csv;
  if (name == "json") return ExportFormat::json;
  throw InvalidConfig("unknown export format '" + std::string(name) + "'");
}

std::string clustering_csv(const ClusteringExport& entry, bool soft) {
  const auto hard = harden(entry.assignment);
  std::string out = "id,label";
  if (soft)
    for (std::size_t c = 0; c < entry.assignment.k(); ++c) out += ",p_" + std::to_string(c);
  out += '\n';
  for (std::size_t i = 0; i < hard.n(); ++i) {
    out += std::to_string(entry.ids[i]) + ',' + std::to_string(hard.labels[i]);
    if (soft)
      for (double p : entry.assignment.resp.row(i)) out += ',' + format_double(p);
    out += '\n';
  }
  return out;
}

std::string clustering_json(const ClusteringExport& entry, bool soft) {
  json j;
  j["iteration"] = entry.iteration;
  j["params"] = entry.params;
  json assignment;
  assignment["ids"] = entry.ids;
  assignment["labels"] = harden(entry.assignment).labels;
  if (soft) assignment["responsibilities"] = entry.assignment.resp;
  j["assignment"] = std::move(assignment);
  j["metrics"] = entry.metrics;
  return j.dump(2) + "\n";
}

void export_clustering(const ClusteringExport& entry, const fs::path& path, ExportFormat format,
                       bool soft) {
  if (entry.ids.size() != entry.assignment.n())
    throw ContractViolation("export: ids and assignment disagree on N");
  write_file(path, format == ExportFormat::csv ? clustering_csv(entry, soft)
                                               : clustering_json(entry, soft));
}

LoadedClustering load_clustering_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    LoadedClustering out;
    out.iteration = j.at("iteration").get<std::size_t>();
    const auto& a = j.at("assignment");
    out.labels.labels = a.at("labels").get<std::vector<int>>();
    if (a.contains("responsibilities"))
      out.assignment = SoftAssignment{a.at("responsibilities").get<Matrix>()};
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid clustering JSON: ") + e.what());
  }
}

}  // namespace tinder
