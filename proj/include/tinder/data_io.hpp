#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tinder/metrics.hpp"
#include "tinder/mixture.hpp"

namespace tinder {

enum class HeaderMode { absent, present, detect };

struct CsvOptions {
  HeaderMode header = HeaderMode::detect;
  // Column holding ground-truth labels: a header name, or a 0-based index.
  std::optional<std::string> label_column;
};

// Comma separated, '.' decimal, optional single header line. Integer labels
// are kept as-is when all are non-negative; any other label values are
// mapped to 0, 1, ... in order of first appearance.
DataMatrix parse_csv(std::string_view text, const CsvOptions& options = {});
DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

std::string read_file(const std::filesystem::path& path);
// Writes atomically via a temporary file in the same directory.
void write_file(const std::filesystem::path& path, std::string_view contents);

// Lower-case hex SHA-256.
std::string content_hash(std::string_view bytes);

struct SyntheticSpec {
  std::vector<std::vector<double>> centers;
  double sigma = 1.0;
  std::size_t points_per_center = 100;
  std::uint64_t seed = 0;
};

// Rows are grouped by center (all of center 0 first); label = center index.
DataMatrix generate_blobs(const SyntheticSpec& spec);

// Four isotropic blobs at (+-3, +-3), sigma 0.7, 200 points each.
SyntheticSpec four_blob_scenario(std::uint64_t seed);

// Ten blobs in 10 dimensions, center c at `separation` * e_c, 200 points each.
SyntheticSpec ten_blob_scenario(std::uint64_t seed, double separation = 8.0);

// Serialises a data matrix as CSV (header x0..x{D-1}[,label]).
std::string data_to_csv(const DataMatrix& data);

// content_hash of data_to_csv(data): identifies parsed values independently
// of the source file's formatting.
std::string data_fingerprint(const DataMatrix& data);

enum class ExportFormat { csv, json };

ExportFormat export_format_from_string(std::string_view name);

// Everything needed to export one clustering.
struct ClusteringExport {
  std::size_t iteration = 0;
  std::vector<std::int64_t> ids;
  MixtureParams params;
  SoftAssignment assignment;
  std::map<std::string, double> metrics;
};

// CSV rows `id,label[,p_0..p_{K-1}]` under a header line.
std::string clustering_csv(const ClusteringExport& entry, bool soft);
std::string clustering_json(const ClusteringExport& entry, bool soft);

void export_clustering(const ClusteringExport& entry, const std::filesystem::path& path,
                       ExportFormat format, bool soft = false);

struct LoadedClustering {
  std::size_t iteration = 0;
  HardClustering labels;
  std::optional<SoftAssignment> assignment;
};

LoadedClustering load_clustering_json(std::string_view text);

// %.17g, so doubles survive a text round trip.
std::string format_double(double v);

}  // namespace tinder
