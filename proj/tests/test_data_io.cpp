#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "tinder/data_io.hpp"
#include "tinder/errors.hpp"

using namespace tinder;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "tinder_test_data_io";
  fs::create_directories(dir);
  return dir / name;
}

ClusteringExport two_points() {
  ClusteringExport e;
  e.iteration = 3;
  e.ids = {0, 1};
  e.params.weight_logits = {0, 0};
  e.params.means = Matrix(2, 1);
  e.params.log_variances = Matrix(2, 1);
  e.assignment = oracle::one_hot({0, 1}, 2);
  e.metrics = {{"purity", 1.0}};
  return e;
}

}  // namespace

TEST_CASE("parse_csv: plain numeric") {
  const auto d = parse_csv("1,2\n3.5,-4e1\n");
  CHECK(d.n() == 2);
  CHECK(d.d() == 2);
  CHECK(d.values(1, 1) == -40.0);
  CHECK(!d.labels);
  CHECK(d.ids == std::vector<std::int64_t>{0, 1});
}

TEST_CASE("parse_csv: header and named label column") {
  const auto d = parse_csv("x,class,y\n1,cat,2\n3,dog,4\n5,cat,6\n", {HeaderMode::detect, "class"});
  CHECK(d.n() == 3);
  CHECK(d.d() == 2);
  CHECK(*d.labels == std::vector<int>{0, 1, 0});
  CHECK(d.values(2, 1) == 6.0);

  const auto idx = parse_csv("1,7\n2,3\n", {HeaderMode::absent, "1"});
  CHECK(*idx.labels == std::vector<int>{7, 3});
  CHECK(idx.d() == 1);

  // A string label in the first row is not mistaken for a header.
  const auto no_header = parse_csv("1,a\n2,b\n", {HeaderMode::detect, "1"});
  CHECK(no_header.n() == 2);
}

TEST_CASE("parse_csv: errors name their location") {
  try {
    parse_csv("1,2\n3,abc\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.column() == 2);
  }
  CHECK_THROWS_AS(parse_csv("1,2\n3\n"), FormatError);
  CHECK_THROWS_AS(parse_csv(""), FormatError);
  CHECK_THROWS_AS(parse_csv("a,b\n"), FormatError);
  CHECK_THROWS_AS(parse_csv("1,2\n", {HeaderMode::absent, "label"}), FormatError);
  CHECK_THROWS_AS(parse_csv("1,nan\n"), ParseError);
}

TEST_CASE("load_csv reads from disk") {
  const auto path = scratch("in.csv");
  write_file(path, "a,b\n1,2\n3,4\n");
  const auto d = load_csv(path);
  CHECK(d.n() == 2);
  CHECK_THROWS_AS(load_csv(scratch("missing.csv")), IoError);
}

TEST_CASE("content_hash is SHA-256") {
  CHECK(content_hash("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(content_hash("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("generate_blobs") {
  const auto spec = four_blob_scenario(7);
  const auto d = generate_blobs(spec);
  CHECK(d.n() == 800);
  CHECK(d.d() == 2);
  std::vector<int> counts(4, 0);
  for (int l : *d.labels) ++counts[static_cast<std::size_t>(l)];
  CHECK(counts == std::vector<int>{200, 200, 200, 200});
  CHECK(generate_blobs(spec).values == d.values);
  CHECK(generate_blobs(four_blob_scenario(8)).values != d.values);

  const auto one = generate_blobs(SyntheticSpec{{{1.0, 2.0, 3.0}}, 0.5, 10, 1});
  for (int l : *one.labels) CHECK(l == 0);

  const auto ten = generate_blobs(ten_blob_scenario(1));
  CHECK(ten.n() == 2000);
  CHECK(ten.d() == 10);

  CHECK_THROWS_AS(generate_blobs(SyntheticSpec{{}, 1.0, 10, 0}), InvalidConfig);
  CHECK_THROWS_AS(generate_blobs(SyntheticSpec{{{0.0}}, 0.0, 10, 0}), InvalidConfig);
}

TEST_CASE("data_to_csv round trips through parse_csv") {
  const auto d = generate_blobs(four_blob_scenario(2));
  const auto back = parse_csv(data_to_csv(d), {HeaderMode::detect, "label"});
  CHECK(back.values == d.values);
  CHECK(back.labels == d.labels);
}

TEST_CASE("clustering export: CSV") {
  const auto e = two_points();
  CHECK(clustering_csv(e, false) == "id,label\n0,0\n1,1\n");
  CHECK(clustering_csv(e, true) == "id,label,p_0,p_1\n0,0,1,0\n1,1,0,1\n");

  const auto path = scratch("c.csv");
  export_clustering(e, path, ExportFormat::csv);
  const auto first = read_file(path);
  export_clustering(e, path, ExportFormat::csv);
  CHECK(read_file(path) == first);
  const auto loaded = load_csv(path, {HeaderMode::present, "label"});
  CHECK(*loaded.labels == std::vector<int>{0, 1});
}

TEST_CASE("clustering export: JSON") {
  auto e = two_points();
  e.assignment.resp(0, 0) = 0.75;
  e.assignment.resp(0, 1) = 0.25;
  const auto path = scratch("c.json");
  export_clustering(e, path, ExportFormat::json, true);
  const auto back = load_clustering_json(read_file(path));
  CHECK(back.iteration == 3);
  CHECK(back.labels.labels == std::vector<int>{0, 1});
  REQUIRE(back.assignment);
  CHECK(back.assignment->resp == e.assignment.resp);

  const auto hard = load_clustering_json(clustering_json(e, false));
  CHECK(!hard.assignment);
  CHECK(hard.labels.labels == std::vector<int>{0, 1});
  CHECK_THROWS_AS(load_clustering_json("{}"), FormatError);

  e.ids = {0};
  CHECK_THROWS_AS(export_clustering(e, path, ExportFormat::json), ContractViolation);
  CHECK_THROWS_AS(export_format_from_string("xml"), InvalidConfig);
}

TEST_CASE("format_double survives a round trip") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
}
