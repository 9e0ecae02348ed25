#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "cosal/bench.hpp"
#include "cosal/coft.hpp"
#include "cosal/dataset.hpp"
#include "cosal/image_io.hpp"
#include "cosal/pipeline.hpp"

namespace fixtures {
namespace fs = std::filesystem;
using cosal::LabelMask;
using Engine = std::mt19937_64;

namespace {

std::size_t below(Engine& e, std::size_t n) { return static_cast<std::size_t>(e() % n); }

void write_text(const fs::path& path, const std::string& text) {
  cosal::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

struct Rect {
  std::size_t r0, c0, r1, c1;  // inclusive
};

bool overlaps(const Rect& a, const Rect& b) {
  return !(a.r1 < b.r0 || b.r1 < a.r0 || a.c1 < b.c0 || b.c1 < a.c0);
}

cosal::RgbImage flat_image(std::size_t h, std::size_t w, std::uint8_t r, std::uint8_t g,
                           std::uint8_t b) {
  cosal::RgbImage img{h, w, std::vector<std::uint8_t>(3 * h * w)};
  for (std::size_t i = 0; i < h * w; ++i) {
    img.pixels[3 * i] = r;
    img.pixels[3 * i + 1] = g;
    img.pixels[3 * i + 2] = b;
  }
  return img;
}

void write_bboxes(const fs::path& path, const std::vector<std::pair<std::uint32_t, Rect>>& boxes) {
  std::ostringstream os;
  for (const auto& [label, r] : boxes) {
    os << label << ' ' << r.c0 << ' ' << r.r0 << ' ' << r.c1 << ' ' << r.r1 << '\n';
  }
  write_text(path, os.str());
}

// Object GT as 0/255, instance GT with the given raw labels.
void write_annotations(const fs::path& root, const std::string& group, const std::string& name,
                       std::size_t h, std::size_t w,
                       const std::vector<std::pair<std::uint32_t, Rect>>& instances) {
  cosal::Grid<LabelMask::Label> object(h, w, 0);
  cosal::Grid<LabelMask::Label> inst(h, w, 0);
  for (const auto& [label, r] : instances) {
    for (std::size_t i = r.r0; i <= r.r1; ++i) {
      for (std::size_t j = r.c0; j <= r.c1; ++j) {
        object(i, j) = 255;
        inst(i, j) = label;
      }
    }
  }
  cosal::write_label_mask(root / "gt_object" / group / (name + ".png"), LabelMask(object));
  cosal::write_label_mask(root / "gt_instance" / group / (name + ".png"), LabelMask(inst));
  write_bboxes(root / "bboxes" / group / (name + ".txt"), instances);
}

}  // namespace

void write_mini_dataset(const fs::path& root) {
  constexpr std::size_t h = 24, w = 32;
  const std::vector<std::pair<std::string, std::string>> groups = {
      {"apple", "fruit"}, {"banana", "fruit"}, {"car", "vehicle"}};
  Engine e(20240601);
  std::string taxonomy;
  for (const auto& [group, super] : groups) {
    taxonomy += group + "\t" + super + "\n";
    const std::uint8_t tint = static_cast<std::uint8_t>(60 + 60 * below(e, 3));
    for (int n = 1; n <= 4; ++n) {
      const std::string name = "000" + std::to_string(n);
      const std::size_t count = 1 + below(e, 3);
      std::vector<std::pair<std::uint32_t, Rect>> instances;
      while (instances.size() < count) {
        const std::size_t rh = 4 + below(e, 6);
        const std::size_t rw = 4 + below(e, 8);
        const std::size_t r0 = below(e, h - rh + 1);
        const std::size_t c0 = below(e, w - rw + 1);
        const Rect r{r0, c0, r0 + rh - 1, c0 + rw - 1};
        const bool clash = std::any_of(instances.begin(), instances.end(),
                                       [&](const auto& other) { return overlaps(r, other.second); });
        if (!clash) instances.emplace_back(static_cast<std::uint32_t>(10 * (instances.size() + 1)), r);
      }
      write_annotations(root, group, name, h, w, instances);

      cosal::RgbImage img = flat_image(h, w, 30, 40, 50);
      std::vector<double> pred(h * w);
      for (std::size_t i = 0; i < h * w; ++i) {
        img.pixels[3 * i] = static_cast<std::uint8_t>(img.pixels[3 * i] + below(e, 16));
        pred[i] = static_cast<double>(below(e, 100)) / 400.0;
      }
      for (const auto& [_, r] : instances) {
        for (std::size_t i = r.r0; i <= r.r1; ++i) {
          for (std::size_t j = r.c0; j <= r.c1; ++j) {
            const std::size_t p = i * w + j;
            img.pixels[3 * p] = tint;
            img.pixels[3 * p + 1] = static_cast<std::uint8_t>(200 - tint / 2);
            pred[p] = 0.55 + static_cast<double>(below(e, 100)) / 250.0;
          }
        }
      }
      cosal::write_rgb(root / "images" / group / (name + ".png"), img);
      cosal::ScalarMap map(h, w, std::move(pred));
      if (group == "car") map = cosal::resize_bilinear(map, h / 2, w / 2);
      cosal::write_scalar_map(root.parent_path() / "mini_pred" / "noisy" / group / (name + ".png"), map);
    }
  }
  write_text(root / "taxonomy.tsv", taxonomy);
}

void write_stats_dataset(const fs::path& root) {
  constexpr std::size_t side = 256;
  const std::size_t squares[4] = {32, 64, 96, 128};
  const std::size_t parts[4] = {1, 2, 3, 1};
  for (int s = 0; s < 4; ++s) {
    const std::string name = "s" + std::to_string(s + 1);
    const std::size_t lo = (side - squares[s]) / 2;
    const std::size_t strip = squares[s] / parts[s];
    std::vector<std::pair<std::uint32_t, Rect>> instances;
    for (std::size_t k = 0; k < parts[s]; ++k) {
      instances.emplace_back(static_cast<std::uint32_t>(k + 1),
                             Rect{lo, lo + k * strip, lo + squares[s] - 1, lo + (k + 1) * strip - 1});
    }
    write_annotations(root, "squares", name, side, side, instances);
    cosal::write_rgb(root / "images" / "squares" / (name + ".png"), flat_image(side, side, 128, 128, 128));
  }
  write_text(root / "taxonomy.tsv", "squares\tshapes\n");
}

void write_invalid_dataset(const fs::path& root) {
  constexpr std::size_t h = 16, w = 16;
  const std::string g = "faults";
  auto strips = [&](std::size_t n) {
    std::vector<std::pair<std::uint32_t, Rect>> out;
    for (std::size_t k = 0; k < n; ++k) {
      out.emplace_back(static_cast<std::uint32_t>(k + 1), Rect{4, 2 * k + 1, 11, 2 * k + 1});
    }
    return out;
  };
  write_annotations(root, g, "ok", h, w, {{1, Rect{3, 3, 8, 9}}});
  write_annotations(root, g, "six", h, w, strips(6));
  write_annotations(root, g, "seven", h, w, strips(7));

  write_annotations(root, g, "support", h, w, {{1, Rect{3, 3, 8, 9}}});
  cosal::Grid<LabelMask::Label> inst(h, w, 0);
  for (std::size_t i = 3; i <= 8; ++i) {
    for (std::size_t j = 3; j <= 9; ++j) inst(i, j) = 1;
  }
  inst(12, 12) = 1;
  cosal::write_label_mask(root / "gt_instance" / g / "support.png", LabelMask(inst));

  write_annotations(root, g, "loosebox", h, w, {{1, Rect{3, 3, 8, 9}}});
  write_bboxes(root / "bboxes" / g / "loosebox.txt", {{1, Rect{2, 3, 8, 9}}});

  const std::string garbage = "not a png";
  write_text(root / "gt_object" / g / "broken.png", garbage);

  for (const char* name : {"ok", "six", "seven", "support", "loosebox", "broken"}) {
    cosal::write_rgb(root / "images" / g / (std::string(name) + ".png"), flat_image(h, w, 90, 90, 90));
  }
  write_text(root / "taxonomy.tsv", g + "\tdiagnostics\n");
}

void write_pipeline_inputs(const fs::path& root) {
  constexpr std::size_t fh = 12, fw = 12, k = 8, ph = 24, pw = 24;
  Engine e(77);
  const char* ids[3] = {"a", "b", "c"};
  for (std::size_t n = 0; n < 3; ++n) {
    const std::size_t r0 = 2 + below(e, 4);
    const std::size_t c0 = 2 + below(e, 4);
    std::vector<double> v(fh * fw * k);
    for (double& x : v) {
      // Noise on the float32 grid, so the COFT round trip is exact.
      x = static_cast<double>(static_cast<float>((static_cast<double>(below(e, 1001)) - 500.0) / 10000.0));
    }
    for (std::size_t i = 0; i < fh; ++i) {
      for (std::size_t j = 0; j < fw; ++j) {
        const std::size_t base = (i * fw + j) * k;
        if (i >= r0 && i < r0 + 5 && j >= c0 && j < c0 + 5) v[base] += 1.0;
        if (i >= 9 && j + n * 3 < fw && j >= n * 3 && j < n * 3 + 3) v[base + 1 + n] += 0.75;
      }
    }
    cosal::write_coft(root / "features" / "planted" / (std::string(ids[n]) + ".coft"),
                      cosal::FeatureStack(fh, fw, k, std::move(v)));

    std::vector<double> prior(ph * pw);
    const double cy = 11.5 + static_cast<double>(n) - 1.0;
    for (std::size_t i = 0; i < ph; ++i) {
      for (std::size_t j = 0; j < pw; ++j) {
        const double dy = static_cast<double>(i) - cy;
        const double dx = static_cast<double>(j) - 11.5;
        prior[i * pw + j] = std::round(255.0 * std::exp(-(dx * dx + dy * dy) / 72.0)) / 255.0;
      }
    }
    cosal::write_scalar_map(root / "priors" / "planted" / (std::string(ids[n]) + ".png"),
                            cosal::ScalarMap(ph, pw, std::move(prior)));
  }
}

void write_goldens(const fs::path& data) {
  const auto ds = cosal::dataset::load_dataset(data / "mini");
  auto eval = cosal::bench::evaluate_model(data / "mini_pred" / "noisy", ds, "noisy");
  const auto report = cosal::bench::aggregate(std::move(eval.records), ds.taxonomy, eval.warnings);
  write_text(data / "golden" / "mini_noisy.csv", cosal::bench::emit(report, cosal::bench::Format::kCsv));

  std::vector<cosal::coattention::GroupMember> members;
  std::map<std::string, cosal::ScalarMap> priors;
  for (const char* id : {"a", "b", "c"}) {
    members.push_back({id, cosal::read_coft(data / "pipeline" / "features" / "planted" / (std::string(id) + ".coft"))});
    priors.emplace(id, cosal::read_scalar_map(data / "pipeline" / "priors" / "planted" / (std::string(id) + ".png")));
  }
  const auto prediction = cosal::pipeline::run_group(cosal::coattention::GroupFeatureSet(std::move(members)), priors);
  for (const auto& img : prediction.images) {
    cosal::write_scalar_map(data / "golden" / "pipeline" / "planted" / (img.id + ".png"), img.final_map);
  }
}

std::vector<fs::path> list_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) out.push_back(fs::relative(entry.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fixtures
