#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cosal/bench.hpp"
#include "cosal/image_io.hpp"
#include "oracles.hpp"

using namespace cosal;
using namespace cosal::bench;
namespace fs = std::filesystem;

namespace {

const fs::path kData = COSAL_TEST_DATA;

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("cosal_bench_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Writes one prediction per GT image; `make` builds it from the GT mask.
template <class F>
void write_predictions(const fs::path& root, const dataset::Dataset& ds, F make) {
  for (const auto& g : ds.groups) {
    for (const auto& img : g.images) write_scalar_map(root / g.group_id / (img.name + ".png"), make(img.object));
  }
}

EvalRecord record(std::string group, std::size_t n, double e_max) {
  EvalRecord r;
  r.dataset = "synthetic";
  r.model = "m";
  r.group = std::move(group);
  r.n_images = n;
  r.scores.e_max = e_max;
  r.e_curve.fill(e_max);
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

double parse_double(std::string_view s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

}  // namespace

TEST_CASE("ground truth scored against itself is perfect") {
  const auto ds = dataset::load_dataset(kData / "mini");
  TempDir tmp;
  write_predictions(tmp.path, ds, [](const LabelMask& m) { return gen::map_from_mask(m); });
  const Evaluation ev = evaluate_model(tmp.path, ds, "oracle");
  CHECK(ev.warnings.empty());
  CHECK(ev.predictions_found == 12);
  for (const auto& r : ev.records) {
    CHECK(r.scores.f_max == 1.0);
    CHECK(r.scores.s_measure == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.scores.e_max == 1.0);
    CHECK(r.scores.mae == 0.0);
    CHECK(r.n_missing == 0);
  }
}

TEST_CASE("all-zero predictions give a MAE equal to the mean foreground ratio") {
  const auto ds = dataset::load_dataset(kData / "mini");
  TempDir tmp;
  write_predictions(tmp.path, ds, [](const LabelMask& m) { return ScalarMap(m.height(), m.width(), 0.0); });
  const Report r = aggregate(evaluate_model(tmp.path, ds, "zero").records, ds.taxonomy);
  double ratio = 0.0, f = 0.0;
  for (const auto& g : ds.groups) {
    for (const auto& img : g.images) {
      const double p = static_cast<double>(img.object.foreground_count()) / static_cast<double>(img.object.size());
      ratio += p;
      // Only the zero threshold selects anything: every pixel.
      f += 1.3 * p / (0.3 * p + 1.0);
    }
  }
  CHECK(r.overall.scores.mae == doctest::Approx(ratio / 12.0).epsilon(1e-12));
  CHECK(r.overall.scores.f_max == doctest::Approx(f / 12.0).epsilon(1e-12));
}

TEST_CASE("missing predictions are scored as zero maps with a coverage warning") {
  const auto ds = dataset::load_dataset(kData / "mini");
  TempDir tmp;
  write_predictions(tmp.path, ds, [](const LabelMask& m) { return gen::map_from_mask(m); });
  const Evaluation full = evaluate_model(tmp.path, ds, "m");
  CHECK(full.warnings.empty());

  fs::remove(tmp.path / "banana" / "0002.png");
  const Evaluation partial = evaluate_model(tmp.path, ds, "m");
  REQUIRE(partial.warnings.size() == 1);
  CHECK(partial.warnings[0] == "coverage: 11 of 12 predictions found; missing ones scored as all-zero maps");
  CHECK(partial.records[1].n_missing == 1);
  CHECK(partial.records[1].scores.mae > 0.0);
  CHECK(partial.records[0] == full.records[0]);

  TempDir empty;
  CHECK_THROWS_AS(evaluate_model(empty.path, ds, "m"), Error);
}

TEST_CASE("aggregation examples") {
  SUBCASE("one group passes through") {
    EvalRecord r = record("g", 3, 0.9);
    r.scores.mae = 0.125;
    const Report rep = aggregate({r}, {{"g", "s"}});
    CHECK(rep.overall.scores == r.scores);
    CHECK(rep.overall.n_images == 3);
    CHECK(rep.super_classes.size() == 1);
    CHECK(rep.overall.e_fixed == 0.9);
  }
  SUBCASE("equal-size groups average") {
    const Report rep = aggregate({record("b", 4, 0.6), record("a", 4, 0.8)}, {{"a", "s"}, {"b", "s"}});
    CHECK(rep.groups[0].record.group == "a");
    CHECK(rep.overall.scores.e_max == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(rep.super_classes[0].summary.scores.e_max == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("groups are weighted by image count") {
    const Report rep = aggregate({record("a", 1, 0.2), record("b", 3, 0.6)}, {{"a", "s"}, {"b", "t"}});
    CHECK(rep.overall.scores.e_max == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rep.super_classes.size() == 2);
  }
  SUBCASE("unknown groups are named") {
    CHECK_THROWS_WITH_AS(aggregate({record("x", 1, 0.5), record("y", 1, 0.5)}, {{"x", "s"}}),
                         "groups missing from taxonomy: y", Error);
  }
  SUBCASE("empty input gives a header-only CSV") {
    const Report rep = aggregate({}, {});
    CHECK(emit(rep, Format::kCsv) == csv_header());
    CHECK_THROWS_AS(summarize(std::vector<EvalRecord>{}), Error);
  }
}

TEST_CASE("markdown has one column per super-class plus All") {
  std::vector<EvalRecord> records;
  std::map<std::string, std::string> taxonomy;
  for (int i = 0; i < 13; ++i) {
    const std::string g = "g" + std::to_string(100 + i);
    records.push_back(record(g, 1 + static_cast<std::size_t>(i), 0.5));
    taxonomy[g] = "s" + std::to_string(100 + i);
  }
  const auto md = lines(emit(aggregate(records, taxonomy), Format::kMarkdown));
  const auto header = std::find_if(md.begin(), md.end(), [](const std::string& l) { return l.rfind("| Metric", 0) == 0; });
  REQUIRE(header != md.end());
  CHECK(std::count(header->begin(), header->end(), '|') == 16);
  CHECK(header->find("| All |") != std::string::npos);
  for (const char* row : {"| E_max |", "| S |", "| F_fixed |", "| MAE |", "| Images |"}) {
    CHECK(std::any_of(md.begin(), md.end(), [&](const std::string& l) { return l.rfind(row, 0) == 0; }));
  }
  CHECK(parse_format("md") == Format::kMarkdown);
  CHECK(parse_format("markdown") == Format::kMarkdown);
  CHECK_THROWS_AS(parse_format("xml"), Error);
}

TEST_CASE("the mini dataset reproduces the frozen CSV") {
  const auto ds = dataset::load_dataset(kData / "mini");
  auto ev = evaluate_model(kData / "mini_pred" / "noisy", ds, "noisy");
  const Report rep = aggregate(std::move(ev.records), ds.taxonomy, ev.warnings);
  CHECK(emit(rep, Format::kCsv) == slurp(kData / "golden" / "mini_noisy.csv"));
  const auto csv = lines(emit(rep, Format::kCsv));
  REQUIRE(csv.size() == 1 + 3 + 2 + 1);
  CHECK(csv.back().rfind("mini,noisy,,All,12,", 0) == 0);
}

TEST_CASE("JSON reports round-trip bit for bit") {
  const auto ds = dataset::load_dataset(kData / "mini");
  auto ev = evaluate_model(kData / "mini_pred" / "noisy", ds, "noisy");
  const Report rep = aggregate(std::move(ev.records), ds.taxonomy, {"note, with a comma"});
  const std::string json = emit(rep, Format::kJson);
  const Report back = report_from_json(json);
  CHECK(back == rep);
  CHECK(emit(back, Format::kJson) == json);
  CHECK_THROWS_AS(report_from_json("{\"format\":\"other\"}"), FormatError);
  CHECK_THROWS_AS(report_from_json("not json"), FormatError);
}

TEST_CASE("PR data rows follow the averaged curves") {
  const auto ds = dataset::load_dataset(kData / "mini");
  TempDir tmp;
  write_predictions(tmp.path, ds, [](const LabelMask& m) { return gen::map_from_mask(m); });
  const Report perfect = aggregate(evaluate_model(tmp.path, ds, "perfect").records, ds.taxonomy);
  const Report noisy = aggregate(evaluate_model(kData / "mini_pred" / "noisy", ds, "noisy").records, ds.taxonomy);
  const std::vector<Report> reports = {perfect, noisy};
  const auto rows = lines(emit_pr_data(reports));
  REQUIRE(rows.size() == 1 + 2 * metrics::kThresholdCount);
  CHECK(rows[0] == "model,threshold,precision,recall");
  for (std::size_t i = 0; i < 2 * metrics::kThresholdCount; ++i) {
    const Report& r = reports[i / metrics::kThresholdCount];
    const std::size_t k = i % metrics::kThresholdCount;
    std::vector<std::string> fields;
    std::istringstream in(rows[1 + i]);
    for (std::string f; std::getline(in, f, ',');) fields.push_back(f);
    REQUIRE(fields.size() == 4);
    CHECK(fields[0] == r.model);
    CHECK(parse_double(fields[1]) == metrics::threshold_value(k));
    CHECK(parse_double(fields[2]) == r.overall.precision[k]);
    CHECK(parse_double(fields[3]) == r.overall.recall[k]);
  }
  for (std::size_t k = 1; k < metrics::kThresholdCount; ++k) {
    CHECK(perfect.overall.precision[k] == 1.0);
    CHECK(perfect.overall.recall[k] == 1.0);
  }
  CHECK(perfect.overall.recall[0] == 1.0);
}

TEST_CASE("image-weighted means agree with a flat average over images") {
  const auto ds = dataset::load_dataset(kData / "mini");
  auto ev = evaluate_model(kData / "mini_pred" / "noisy", ds, "noisy");
  const Report rep = aggregate(ev.records, ds.taxonomy);
  double mae = 0.0, s = 0.0;
  for (const auto& g : ds.groups) {
    for (const auto& img : g.images) {
      ScalarMap pred = read_scalar_map(kData / "mini_pred" / "noisy" / g.group_id / (img.name + ".png"));
      pred = resize_bilinear(pred, img.object.height(), img.object.width());
      mae += oracle::mae(pred, img.object);
      s += oracle::s_measure(pred, img.object);
    }
  }
  CHECK(std::abs(rep.overall.scores.mae - mae / 12.0) < 1e-12);
  CHECK(std::abs(rep.overall.scores.s_measure - s / 12.0) < 1e-12);

  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto& r : ev.records) {
    weighted += static_cast<double>(r.n_images) * r.scores.e_max;
    n += r.n_images;
  }
  CHECK(std::abs(rep.overall.scores.e_max - weighted / static_cast<double>(n)) < 1e-12);
}

TEST_CASE("evaluation is identical for any worker count") {
  const auto ds1 = dataset::load_dataset(kData / "mini", 1);
  const auto ref = evaluate_model(kData / "mini_pred" / "noisy", ds1, "noisy", 1).records;
  for (unsigned workers : {4u, 8u}) {
    const auto ds = dataset::load_dataset(kData / "mini", workers);
    CHECK(evaluate_model(kData / "mini_pred" / "noisy", ds, "noisy", workers).records == ref);
  }
}

TEST_CASE("format_double is the shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}
