// cosal: co-salient detection and benchmark command-line tool.
//
// Exit status: 0 success, 1 completed with validation problems, 2 hard error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cosal/bench.hpp"
#include "cosal/coattention.hpp"
#include "cosal/coft.hpp"
#include "cosal/dataset.hpp"
#include "cosal/image_io.hpp"
#include "cosal/parallel.hpp"
#include "cosal/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kHardError = 2;

void write_text(const fs::path& path, const std::string& text) {
  cosal::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void print_validation(const std::vector<cosal::dataset::ValidationEntry>& entries) {
  for (const auto& v : entries) {
    std::cerr << "validation: " << v.group;
    if (!v.image.empty()) std::cerr << '/' << v.image;
    std::cerr << ": " << v.message << '\n';
  }
}

std::vector<std::string> sorted_dirs(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> sorted_files(const fs::path& dir, std::string_view ext) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

cosal::bench::Report score_model(const cosal::dataset::Dataset& ds, const fs::path& pred,
                                 const std::string& model, unsigned workers, bool& degraded) {
  auto evaluation = cosal::bench::evaluate_model(pred, ds, model, workers);
  for (const auto& w : evaluation.warnings) std::cerr << "warning: " << w << '\n';
  degraded = degraded || !evaluation.warnings.empty();
  return cosal::bench::aggregate(std::move(evaluation.records), ds.taxonomy,
                                 std::move(evaluation.warnings));
}

struct EvalArgs {
  std::string gt, pred, model, out, format = "csv";
};

int run_eval(const EvalArgs& a) {
  const unsigned workers = cosal::default_workers();
  const auto ds = cosal::dataset::load_dataset(a.gt, workers);
  print_validation(ds.validation);
  bool degraded = !ds.validation.empty();
  const auto format = cosal::bench::parse_format(a.format);
  const auto report = score_model(ds, a.pred, a.model, workers, degraded);
  write_text(a.out, cosal::bench::emit(report, format));
  return degraded ? kValidation : kOk;
}

struct PrArgs {
  std::string gt, out;
  std::vector<std::string> preds;
};

int run_prdata(const PrArgs& a) {
  const unsigned workers = cosal::default_workers();
  const auto ds = cosal::dataset::load_dataset(a.gt, workers);
  print_validation(ds.validation);
  bool degraded = !ds.validation.empty();
  std::vector<cosal::bench::Report> reports;
  for (const auto& spec : a.preds) {
    // "name=path" or a bare path named after its directory.
    std::string model;
    fs::path path;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
      model = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    } else {
      path = spec;
      model = fs::path(spec).lexically_normal().filename().string();
      if (model.empty()) model = fs::path(spec).lexically_normal().parent_path().filename().string();
    }
    reports.push_back(score_model(ds, path, model, workers, degraded));
  }
  write_text(a.out, cosal::bench::emit_pr_data(reports));
  return degraded ? kValidation : kOk;
}

struct StatsArgs {
  std::string dataset, out, masks;
};

int run_stats(const StatsArgs& a) {
  const auto ds = cosal::dataset::load_dataset(a.dataset, cosal::default_workers());
  print_validation(ds.validation);
  const auto stats = cosal::dataset::compute_stats(ds);
  write_text(a.out, cosal::dataset::stats_to_json(stats, ds.validation));
  if (!a.masks.empty()) {
    cosal::write_scalar_map(fs::path(a.masks) / "all.png", stats.mean_mask);
    for (const auto& [group, mask] : stats.group_mean_masks) {
      cosal::write_scalar_map(fs::path(a.masks) / (group + ".png"), mask);
    }
  }
  return ds.validation.empty() ? kOk : kValidation;
}

// Reads <root>/<group>/<name>.coft for one group.
cosal::pipeline::GroupJob load_features(const fs::path& root, const std::string& group) {
  cosal::pipeline::GroupJob job;
  job.name = group;
  try {
    std::vector<cosal::coattention::GroupMember> members;
    for (const auto& file : sorted_files(root / group, ".coft")) {
      members.push_back({file.stem().string(), cosal::read_coft(file)});
    }
    job.features.emplace(std::move(members));
  } catch (const std::exception& e) {
    job.load_error = e.what();
  }
  return job;
}

struct CoattnArgs {
  std::string features, out;
  std::size_t eigvecs = 1;
};

int run_coattn(const CoattnArgs& a) {
  const unsigned workers = cosal::default_workers();
  const auto groups = sorted_dirs(a.features);
  if (groups.empty()) throw cosal::Error("no group directories under " + a.features);
  std::vector<std::string> errors(groups.size());
  cosal::parallel_for(groups.size(), workers, [&](std::size_t g) {
    auto job = load_features(a.features, groups[g]);
    if (!job.load_error.empty()) {
      errors[g] = job.load_error;
      return;
    }
    try {
      cosal::coattention::CoattentionOptions opts;
      opts.eigvecs = a.eigvecs;
      const auto result = cosal::coattention::coattention_maps(*job.features, opts);
      for (std::size_t n = 0; n < result.ids.size(); ++n) {
        for (std::size_t e = 0; e < result.maps[n].size(); ++e) {
          const std::string suffix = e == 0 ? "" : "_pc" + std::to_string(e + 1);
          cosal::write_scalar_map(fs::path(a.out) / groups[g] / (result.ids[n] + suffix + ".png"),
                                  result.maps[n][e]);
        }
      }
      if (result.degenerate) errors[g] = "degenerate covariance; maps are all-zero";
    } catch (const std::exception& e) {
      errors[g] = e.what();
    }
  });
  int status = kOk;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (errors[g].empty()) continue;
    std::cerr << "group " << groups[g] << ": " << errors[g] << '\n';
    status = kValidation;
  }
  return status;
}

struct PipelineArgs {
  std::string features, priors, out, images;
};

int run_pipeline(const PipelineArgs& a) {
  const unsigned workers = cosal::default_workers();
  const auto groups = sorted_dirs(a.features);
  if (groups.empty()) throw cosal::Error("no group directories under " + a.features);
  std::vector<cosal::pipeline::GroupJob> jobs;
  for (const auto& group : groups) {
    auto job = load_features(a.features, group);
    if (job.features) {
      try {
        for (const auto& m : job.features->members()) {
          job.priors.emplace(m.id, cosal::read_scalar_map(fs::path(a.priors) / group / (m.id + ".png")));
          const fs::path img = fs::path(a.images) / group / (m.id + ".png");
          if (!a.images.empty() && fs::is_regular_file(img)) {
            const auto rgb = cosal::read_rgb(img);
            job.colors.emplace(m.id, cosal::rgb_to_lab(rgb.height, rgb.width, rgb.pixels));
          }
        }
      } catch (const std::exception& e) {
        job.load_error = e.what();
      }
    }
    jobs.push_back(std::move(job));
  }
  cosal::pipeline::PipelineOptions opts;
  opts.workers = workers;
  const auto outcomes = cosal::pipeline::run_groups(jobs, opts);
  int status = kOk;
  for (const auto& o : outcomes) {
    if (!o.prediction) {
      std::cerr << "group " << o.name << ": " << o.error << '\n';
      status = kValidation;
      continue;
    }
    for (const auto& img : o.prediction->images) {
      cosal::write_scalar_map(fs::path(a.out) / o.name / (img.id + ".png"), img.final_map);
    }
    if (o.prediction->degenerate) std::cerr << "group " << o.name << ": degenerate covariance\n";
  }
  write_text(fs::path(a.out) / "report.json", cosal::pipeline::run_report_json(outcomes));
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-salient object detection and benchmark toolbox"};
  app.require_subcommand(1);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a prediction tree against a dataset");
  eval_cmd->add_option("--gt", eval.gt, "Dataset root")->required();
  eval_cmd->add_option("--pred", eval.pred, "Prediction root (<group>/<name>.png)")->required();
  eval_cmd->add_option("--model", eval.model, "Model name")->required();
  eval_cmd->add_option("--out", eval.out, "Report file")->required();
  eval_cmd->add_option("--format", eval.format, "csv, json or md")
      ->check(CLI::IsMember({"csv", "json", "md", "markdown"}));

  CoattnArgs coattn;
  auto* coattn_cmd = app.add_subcommand("coattn", "Co-attention maps from COFT feature groups");
  coattn_cmd->add_option("--features", coattn.features, "Feature root (<group>/<name>.coft)")->required();
  coattn_cmd->add_option("--out", coattn.out, "Output root")->required();
  coattn_cmd->add_option("--eigvecs", coattn.eigvecs, "Principal directions per group")
      ->check(CLI::PositiveNumber);

  PipelineArgs pipe;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Co-attention, refinement and prior fusion");
  pipe_cmd->add_option("--features", pipe.features, "Feature root (<group>/<name>.coft)")->required();
  pipe_cmd->add_option("--priors", pipe.priors, "Saliency prior root (<group>/<name>.png)")->required();
  pipe_cmd->add_option("--out", pipe.out, "Output root")->required();
  pipe_cmd->add_option("--images", pipe.images, "Optional PNG image root for colour affinities");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics and validation");
  stats_cmd->add_option("--dataset", stats.dataset, "Dataset root")->required();
  stats_cmd->add_option("--out", stats.out, "JSON output file")->required();
  stats_cmd->add_option("--masks", stats.masks, "Directory for mean-mask PNGs");

  PrArgs pr;
  auto* pr_cmd = app.add_subcommand("prdata", "Averaged precision/recall curves as CSV");
  pr_cmd->add_option("--gt", pr.gt, "Dataset root")->required();
  pr_cmd->add_option("--pred", pr.preds, "Prediction root, optionally name=path; repeatable")
      ->required();
  pr_cmd->add_option("--out", pr.out, "CSV output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kHardError;
  }

  try {
    if (*eval_cmd) return run_eval(eval);
    if (*coattn_cmd) return run_coattn(coattn);
    if (*pipe_cmd) return run_pipeline(pipe);
    if (*stats_cmd) return run_stats(stats);
    if (*pr_cmd) return run_prdata(pr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kHardError;
  }
  return kHardError;
}
