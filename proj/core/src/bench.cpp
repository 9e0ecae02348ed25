#include "cosal/bench.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "cosal/image_io.hpp"
#include "cosal/parallel.hpp"
#include "json.hpp"

#ifndef COSAL_VERSION
#define COSAL_VERSION "unknown"
#endif

namespace cosal::bench {
namespace fs = std::filesystem;
using metrics::Curve;
using metrics::MetricScores;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kScoreCount = 7;

std::array<double MetricScores::*, kScoreCount> score_fields() {
  return {&MetricScores::f_max,     &MetricScores::f_adaptive, &MetricScores::mae,
          &MetricScores::s_measure, &MetricScores::e_max,      &MetricScores::e_mean,
          &MetricScores::e_adaptive};
}

struct ImageTask {
  std::size_t group = 0;
  const dataset::ImageRecord* image = nullptr;
  fs::path pred;
  bool present = false;
};

double curve_max(const Curve& c) { return *std::max_element(c.begin(), c.end()); }

RunMetadata default_metadata(std::vector<std::string> warnings) {
  RunMetadata m;
  m.version = COSAL_VERSION;
  m.threshold_strategy = "256 levels k/255, foreground where value >= threshold; adaptive min(1, 2 mean)";
  m.e_mode = "max";
  m.aggregation = "image-weighted mean";
  m.f_comparison = "dataset-best fixed threshold over the averaged F curve";
  m.warnings = std::move(warnings);
  return m;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Evaluation evaluate_model(const fs::path& pred_root, const dataset::Dataset& ds,
                          std::string_view model, unsigned workers) {
  std::vector<ImageTask> tasks;
  for (std::size_t g = 0; g < ds.groups.size(); ++g) {
    const auto& group = ds.groups[g];
    for (const auto& img : group.images) {
      ImageTask t;
      t.group = g;
      t.image = &img;
      t.pred = pred_root / group.group_id / (img.name + ".png");
      t.present = fs::is_regular_file(t.pred);
      tasks.push_back(std::move(t));
    }
  }
  Evaluation out;
  out.gt_images = tasks.size();
  out.predictions_found = static_cast<std::size_t>(
      std::count_if(tasks.begin(), tasks.end(), [](const ImageTask& t) { return t.present; }));
  if (out.predictions_found == 0) {
    throw Error("no prediction under " + pred_root.string() + " matches a GT image");
  }
  if (out.predictions_found < out.gt_images) {
    out.warnings.push_back("coverage: " + std::to_string(out.predictions_found) + " of " +
                           std::to_string(out.gt_images) +
                           " predictions found; missing ones scored as all-zero maps");
  }

  std::vector<metrics::PairEvaluation> evals(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const ImageTask& t = tasks[i];
    const LabelMask& gt = t.image->object;
    ScalarMap pred;
    if (t.present) {
      pred = read_scalar_map(t.pred);
      if (pred.height() != gt.height() || pred.width() != gt.width()) {
        pred = resize_bilinear(pred, gt.height(), gt.width());
      }
    } else {
      pred = ScalarMap(gt.height(), gt.width(), std::vector<double>(gt.size(), 0.0));
    }
    evals[i] = metrics::evaluate_pair(pred, gt);
  });

  const std::string dataset_name = ds.root.filename().string();
  std::size_t i = 0;
  for (std::size_t g = 0; g < ds.groups.size(); ++g) {
    const auto& group = ds.groups[g];
    if (group.images.empty()) continue;
    EvalRecord rec;
    rec.dataset = dataset_name;
    rec.group = group.group_id;
    rec.model = std::string(model);
    rec.n_images = group.images.size();
    MetricScores sum;
    for (std::size_t n = 0; n < group.images.size(); ++n, ++i) {
      const auto& e = evals[i];
      if (!tasks[i].present) ++rec.n_missing;
      for (auto f : score_fields()) sum.*f += e.scores.*f;
      for (std::size_t k = 0; k < metrics::kThresholdCount; ++k) {
        rec.precision[k] += e.pr.precision[k];
        rec.recall[k] += e.pr.recall[k];
        rec.f_curve[k] += e.f_curve[k];
        rec.e_curve[k] += e.e_curve[k];
      }
    }
    const auto n = static_cast<double>(rec.n_images);
    for (auto f : score_fields()) rec.scores.*f = sum.*f / n;
    for (std::size_t k = 0; k < metrics::kThresholdCount; ++k) {
      rec.precision[k] /= n;
      rec.recall[k] /= n;
      rec.f_curve[k] /= n;
      rec.e_curve[k] /= n;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

Summary summarize(std::span<const EvalRecord> records) {
  if (records.empty()) throw Error("cannot summarise an empty record list");
  Summary s;
  s.n_groups = records.size();
  for (const auto& r : records) {
    s.n_images += r.n_images;
    const auto w = static_cast<double>(r.n_images);
    for (auto f : score_fields()) s.scores.*f += w * r.scores.*f;
    for (std::size_t k = 0; k < metrics::kThresholdCount; ++k) {
      s.precision[k] += w * r.precision[k];
      s.recall[k] += w * r.recall[k];
      s.f_curve[k] += w * r.f_curve[k];
      s.e_curve[k] += w * r.e_curve[k];
    }
  }
  const auto n = static_cast<double>(s.n_images);
  for (auto f : score_fields()) s.scores.*f /= n;
  for (std::size_t k = 0; k < metrics::kThresholdCount; ++k) {
    s.precision[k] /= n;
    s.recall[k] /= n;
    s.f_curve[k] /= n;
    s.e_curve[k] /= n;
  }
  s.f_fixed = curve_max(s.f_curve);
  s.e_fixed = curve_max(s.e_curve);
  return s;
}

Report aggregate(std::vector<EvalRecord> records, const std::map<std::string, std::string>& taxonomy,
                 std::vector<std::string> warnings) {
  std::vector<std::string> unknown;
  for (const auto& r : records) {
    if (!taxonomy.contains(r.group)) unknown.push_back(r.group);
  }
  if (!unknown.empty()) {
    std::string msg = "groups missing from taxonomy:";
    for (const auto& g : unknown) msg += " " + g;
    throw Error(msg);
  }
  std::sort(records.begin(), records.end(),
            [](const EvalRecord& a, const EvalRecord& b) { return a.group < b.group; });

  Report report;
  if (!records.empty()) {
    report.dataset = records.front().dataset;
    report.model = records.front().model;
  }
  report.metadata = default_metadata(std::move(warnings));
  std::map<std::string, std::vector<EvalRecord>> by_super;
  for (const auto& r : records) {
    GroupRow row;
    row.record = r;
    row.super_class = taxonomy.at(r.group);
    row.f_fixed = curve_max(r.f_curve);
    row.e_fixed = curve_max(r.e_curve);
    by_super[row.super_class].push_back(r);
    report.groups.push_back(std::move(row));
  }
  for (const auto& [name, members] : by_super) {
    report.super_classes.push_back({name, summarize(members)});
  }
  if (!records.empty()) report.overall = summarize(records);
  return report;
}

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  if (name == "md" || name == "markdown") return Format::kMarkdown;
  throw Error("unknown report format: " + std::string(name));
}

std::string csv_header() {
  return "dataset,model,group,super_class,n_images,f_max,f_adaptive,mae,s_measure,e_max,e_mean\n";
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void csv_row(std::ostringstream& os, const Report& r, std::string_view group, std::string_view super,
             std::size_t n, const MetricScores& s) {
  os << csv_field(r.dataset) << ',' << csv_field(r.model) << ',' << csv_field(group) << ','
     << csv_field(super) << ',' << n << ',' << format_double(s.f_max) << ','
     << format_double(s.f_adaptive) << ',' << format_double(s.mae) << ','
     << format_double(s.s_measure) << ',' << format_double(s.e_max) << ','
     << format_double(s.e_mean) << '\n';
}

std::string emit_csv(const Report& r) {
  std::ostringstream os;
  os << csv_header();
  for (const auto& g : r.groups) {
    csv_row(os, r, g.record.group, g.super_class, g.record.n_images, g.record.scores);
  }
  for (const auto& sc : r.super_classes) {
    csv_row(os, r, "", sc.name, sc.summary.n_images, sc.summary.scores);
  }
  if (!r.groups.empty()) csv_row(os, r, "", "All", r.overall.n_images, r.overall.scores);
  return os.str();
}

ordered_json scores_json(const MetricScores& s) {
  ordered_json j;
  j["f_max"] = s.f_max;
  j["f_adaptive"] = s.f_adaptive;
  j["mae"] = s.mae;
  j["s_measure"] = s.s_measure;
  j["e_max"] = s.e_max;
  j["e_mean"] = s.e_mean;
  j["e_adaptive"] = s.e_adaptive;
  return j;
}

MetricScores scores_from(const ordered_json& j) {
  MetricScores s;
  s.f_max = j.at("f_max").get<double>();
  s.f_adaptive = j.at("f_adaptive").get<double>();
  s.mae = j.at("mae").get<double>();
  s.s_measure = j.at("s_measure").get<double>();
  s.e_max = j.at("e_max").get<double>();
  s.e_mean = j.at("e_mean").get<double>();
  s.e_adaptive = j.at("e_adaptive").get<double>();
  return s;
}

Curve curve_from(const ordered_json& j) {
  Curve c{};
  const auto& arr = j;
  if (!arr.is_array() || arr.size() != c.size()) throw FormatError("curve must hold 256 values");
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = arr[k].get<double>();
  return c;
}

ordered_json summary_json(const Summary& s) {
  ordered_json j;
  j["n_images"] = s.n_images;
  j["n_groups"] = s.n_groups;
  j["scores"] = scores_json(s.scores);
  j["f_fixed"] = s.f_fixed;
  j["e_fixed"] = s.e_fixed;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f_curve"] = s.f_curve;
  j["e_curve"] = s.e_curve;
  return j;
}

Summary summary_from(const ordered_json& j) {
  Summary s;
  s.n_images = j.at("n_images").get<std::size_t>();
  s.n_groups = j.at("n_groups").get<std::size_t>();
  s.scores = scores_from(j.at("scores"));
  s.f_fixed = j.at("f_fixed").get<double>();
  s.e_fixed = j.at("e_fixed").get<double>();
  s.precision = curve_from(j.at("precision"));
  s.recall = curve_from(j.at("recall"));
  s.f_curve = curve_from(j.at("f_curve"));
  s.e_curve = curve_from(j.at("e_curve"));
  return s;
}

std::string emit_json(const Report& r) {
  ordered_json j;
  j["format"] = "cosal-report";
  j["dataset"] = r.dataset;
  j["model"] = r.model;
  const RunMetadata& m = r.metadata;
  j["metadata"] = {{"version", m.version},
                   {"beta_sq", m.beta_sq},
                   {"threshold_count", m.threshold_count},
                   {"threshold_strategy", m.threshold_strategy},
                   {"e_mode", m.e_mode},
                   {"aggregation", m.aggregation},
                   {"f_comparison", m.f_comparison},
                   {"warnings", m.warnings}};
  ordered_json groups = ordered_json::array();
  for (const auto& g : r.groups) {
    const EvalRecord& e = g.record;
    ordered_json row;
    row["dataset"] = e.dataset;
    row["group"] = e.group;
    row["model"] = e.model;
    row["super_class"] = g.super_class;
    row["n_images"] = e.n_images;
    row["n_missing"] = e.n_missing;
    row["scores"] = scores_json(e.scores);
    row["f_fixed"] = g.f_fixed;
    row["e_fixed"] = g.e_fixed;
    row["precision"] = e.precision;
    row["recall"] = e.recall;
    row["f_curve"] = e.f_curve;
    row["e_curve"] = e.e_curve;
    groups.push_back(std::move(row));
  }
  j["groups"] = std::move(groups);
  ordered_json supers = ordered_json::array();
  for (const auto& sc : r.super_classes) {
    ordered_json row = summary_json(sc.summary);
    row["name"] = sc.name;
    supers.push_back(std::move(row));
  }
  j["super_classes"] = std::move(supers);
  j["overall"] = summary_json(r.overall);
  return j.dump(2) + "\n";
}

std::string fixed3(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
  return std::string(buf, res.ptr);
}

std::string emit_markdown(const Report& r) {
  std::ostringstream os;
  os << "# " << r.model << " on " << r.dataset << "\n\n";
  std::vector<std::pair<std::string, const Summary*>> cols;
  for (const auto& sc : r.super_classes) cols.emplace_back(sc.name, &sc.summary);
  if (!r.groups.empty()) cols.emplace_back("All", &r.overall);

  os << "| Metric |";
  for (const auto& [name, _] : cols) os << ' ' << name << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) os << "---:|";
  os << '\n';
  auto metric_row = [&](std::string_view label, auto get) {
    os << "| " << label << " |";
    for (const auto& [_, s] : cols) os << ' ' << get(*s) << " |";
    os << '\n';
  };
  metric_row("E_max", [](const Summary& s) { return fixed3(s.scores.e_max); });
  metric_row("S", [](const Summary& s) { return fixed3(s.scores.s_measure); });
  metric_row("F_fixed", [](const Summary& s) { return fixed3(s.f_fixed); });
  metric_row("MAE", [](const Summary& s) { return fixed3(s.scores.mae); });
  metric_row("Images", [](const Summary& s) { return std::to_string(s.n_images); });

  os << "\n| Group | Super-class | Images | E_max | S | F_max | MAE |\n"
        "|---|---|---:|---:|---:|---:|---:|\n";
  for (const auto& g : r.groups) {
    const auto& s = g.record.scores;
    os << "| " << g.record.group << " | " << g.super_class << " | " << g.record.n_images << " | "
       << fixed3(s.e_max) << " | " << fixed3(s.s_measure) << " | " << fixed3(s.f_max) << " | "
       << fixed3(s.mae) << " |\n";
  }
  os << "\nbeta^2 = " << format_double(r.metadata.beta_sq) << ", "
     << r.metadata.threshold_count << " thresholds, " << r.metadata.aggregation << ".\n";
  for (const auto& w : r.metadata.warnings) os << "\n> warning: " << w << '\n';
  return os.str();
}

}  // namespace

std::string emit(const Report& report, Format format) {
  switch (format) {
    case Format::kCsv: return emit_csv(report);
    case Format::kJson: return emit_json(report);
    case Format::kMarkdown: return emit_markdown(report);
  }
  return {};
}

Report report_from_json(std::string_view text) {
  try {
    const ordered_json j = ordered_json::parse(text);
    if (j.value("format", "") != "cosal-report") throw FormatError("not a cosal report");
    Report r;
    r.dataset = j.at("dataset").get<std::string>();
    r.model = j.at("model").get<std::string>();
    const auto& m = j.at("metadata");
    r.metadata.version = m.at("version").get<std::string>();
    r.metadata.beta_sq = m.at("beta_sq").get<double>();
    r.metadata.threshold_count = m.at("threshold_count").get<std::size_t>();
    r.metadata.threshold_strategy = m.at("threshold_strategy").get<std::string>();
    r.metadata.e_mode = m.at("e_mode").get<std::string>();
    r.metadata.aggregation = m.at("aggregation").get<std::string>();
    r.metadata.f_comparison = m.at("f_comparison").get<std::string>();
    r.metadata.warnings = m.at("warnings").get<std::vector<std::string>>();
    for (const auto& row : j.at("groups")) {
      GroupRow g;
      g.record.dataset = row.at("dataset").get<std::string>();
      g.record.group = row.at("group").get<std::string>();
      g.record.model = row.at("model").get<std::string>();
      g.super_class = row.at("super_class").get<std::string>();
      g.record.n_images = row.at("n_images").get<std::size_t>();
      g.record.n_missing = row.at("n_missing").get<std::size_t>();
      g.record.scores = scores_from(row.at("scores"));
      g.f_fixed = row.at("f_fixed").get<double>();
      g.e_fixed = row.at("e_fixed").get<double>();
      g.record.precision = curve_from(row.at("precision"));
      g.record.recall = curve_from(row.at("recall"));
      g.record.f_curve = curve_from(row.at("f_curve"));
      g.record.e_curve = curve_from(row.at("e_curve"));
      r.groups.push_back(std::move(g));
    }
    for (const auto& row : j.at("super_classes")) {
      r.super_classes.push_back({row.at("name").get<std::string>(), summary_from(row)});
    }
    r.overall = summary_from(j.at("overall"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what());
  }
}

std::string emit_pr_data(std::span<const Report> reports) {
  std::ostringstream os;
  os << "model,threshold,precision,recall\n";
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < metrics::kThresholdCount; ++k) {
      os << csv_field(r.model) << ',' << format_double(metrics::threshold_value(k)) << ','
         << format_double(r.overall.precision[k]) << ',' << format_double(r.overall.recall[k])
         << '\n';
    }
  }
  return os.str();
}

}  // namespace cosal::bench
