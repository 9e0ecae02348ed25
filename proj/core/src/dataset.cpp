#include "cosal/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "cosal/image_io.hpp"
#include "cosal/parallel.hpp"
#include "json.hpp"

namespace cosal::dataset {
namespace fs = std::filesystem;

namespace {

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) out.push_back(entry.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// stem -> path for regular files with one of the given extensions.
std::map<std::string, fs::path> files_by_stem(const fs::path& dir,
                                              std::initializer_list<std::string_view> exts) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
    out.emplace(p.stem().string(), p);  // first in sorted order wins
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct GroupLoad {
  GroupRecord record;
  std::vector<ValidationEntry> validation;
};

// Validates one image; returns nullopt (with entries appended) when it must be skipped.
std::optional<ImageRecord> load_image(const fs::path& root, const std::string& group,
                                      const std::string& name, const fs::path& object_path,
                                      const std::map<std::string, fs::path>& image_files,
                                      std::vector<ValidationEntry>& issues) {
  auto report = [&](std::string message) { issues.push_back({group, name, std::move(message)}); };
  ImageRecord rec;
  rec.name = name;
  try {
    rec.object = read_label_mask(object_path).binary();
  } catch (const std::exception& e) {
    report(std::string("object GT unreadable: ") + e.what());
    return std::nullopt;
  }

  if (auto it = image_files.find(name); it != image_files.end()) {
    rec.image_path = it->second;
  } else {
    report("image file missing");
  }

  std::vector<LabelMask::Label> raw_labels;
  const fs::path instance_path = root / "gt_instance" / group / (name + ".png");
  if (fs::exists(instance_path)) {
    LabelMask raw;
    try {
      raw = read_label_mask(instance_path);
    } catch (const std::exception& e) {
      report(std::string("instance GT unreadable: ") + e.what());
      return std::nullopt;
    }
    if (!raw.grid().same_shape(rec.object.grid())) {
      report("instance/object shape mismatch");
      return std::nullopt;
    }
    if (raw.binary() != rec.object) {
      report("instance/object mismatch");
      return std::nullopt;
    }
    LabelMask compact = raw.compacted(&raw_labels);
    if (raw_labels.size() > kMaxInstancesPerImage) {
      report("more than six instances (" + std::to_string(raw_labels.size()) + ")");
      return std::nullopt;
    }
    rec.instances = std::move(compact);
  }

  const fs::path bbox_path = root / "bboxes" / group / (name + ".txt");
  if (fs::exists(bbox_path)) {
    try {
      rec.bboxes = parse_bboxes(read_text(bbox_path));
    } catch (const std::exception& e) {
      report(std::string("bbox file malformed: ") + e.what());
      return std::nullopt;
    }
    std::set<std::uint32_t> seen;
    for (const BoundingBox& box : rec.bboxes) {
      if (!seen.insert(box.label).second) {
        report("duplicate bbox label " + std::to_string(box.label));
        return std::nullopt;
      }
      if (box.x1 >= rec.object.width() || box.y1 >= rec.object.height()) {
        report("bbox outside image for label " + std::to_string(box.label));
        return std::nullopt;
      }
      if (!rec.instances) continue;
      const auto pos = std::lower_bound(raw_labels.begin(), raw_labels.end(), box.label);
      if (pos == raw_labels.end() || *pos != box.label) {
        report("bbox label " + std::to_string(box.label) + " has no instance");
        return std::nullopt;
      }
      const auto compact_label = static_cast<std::uint32_t>(pos - raw_labels.begin()) + 1;
      auto hull = label_hull(*rec.instances, compact_label);
      if (!hull || hull->x0 != box.x0 || hull->y0 != box.y0 || hull->x1 != box.x1 ||
          hull->y1 != box.y1) {
        report("bbox is not the tight hull of instance " + std::to_string(box.label));
        return std::nullopt;
      }
    }
  }
  return rec;
}

GroupLoad load_group(const fs::path& root, const std::string& group,
                     const std::map<std::string, std::string>& taxonomy) {
  GroupLoad out;
  out.record.group_id = group;
  if (auto it = taxonomy.find(group); it != taxonomy.end()) {
    out.record.super_class = it->second;
  } else {
    out.validation.push_back({group, "", "group missing from taxonomy"});
  }
  const auto objects = files_by_stem(root / "gt_object" / group, {".png"});
  const auto images = files_by_stem(root / "images" / group, {".jpg", ".jpeg", ".png"});
  for (const auto& [name, _] : images) {
    if (!objects.contains(name)) out.validation.push_back({group, name, "missing object GT"});
  }
  for (const auto& [name, path] : objects) {
    if (auto rec = load_image(root, group, name, path, images, out.validation)) {
      out.record.images.push_back(std::move(*rec));
    }
  }
  return out;
}

void add_ratio(std::vector<double>& ratios, std::size_t pixels, std::size_t total) {
  ratios.push_back(static_cast<double>(pixels) / static_cast<double>(total));
}

SizeStats summarize(std::vector<double> ratios) {
  SizeStats s;
  s.count = ratios.size();
  if (ratios.empty()) return s;
  std::sort(ratios.begin(), ratios.end());
  s.min = ratios.front();
  s.max = ratios.back();
  double sum = 0.0;
  for (double r : ratios) {
    sum += r;
    const auto bin = std::min<std::size_t>(SizeStats::kBins - 1,
                                           static_cast<std::size_t>(r * SizeStats::kBins));
    ++s.histogram[bin];
  }
  s.mean = sum / static_cast<double>(ratios.size());
  return s;
}

// Content order: shape, then object labels, then instance labels.
bool content_less(const ImageRecord* a, const ImageRecord* b) {
  const auto key = [](const ImageRecord* r) {
    return std::make_tuple(r->object.height(), r->object.width());
  };
  if (key(a) != key(b)) return key(a) < key(b);
  const auto av = a->object.values();
  const auto bv = b->object.values();
  if (!std::equal(av.begin(), av.end(), bv.begin(), bv.end())) {
    return std::lexicographical_compare(av.begin(), av.end(), bv.begin(), bv.end());
  }
  if (a->instances.has_value() != b->instances.has_value()) return !a->instances.has_value();
  if (!a->instances) return false;
  const auto ai = a->instances->values();
  const auto bi = b->instances->values();
  return std::lexicographical_compare(ai.begin(), ai.end(), bi.begin(), bi.end());
}

}  // namespace

std::size_t ImageRecord::instance_count() const {
  if (instances) return instances->instance_count();
  return object.foreground_count() > 0 ? 1 : 0;
}

std::size_t Dataset::image_count() const noexcept {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.images.size();
  return n;
}

const GroupRecord* Dataset::find(std::string_view group) const noexcept {
  for (const auto& g : groups) {
    if (g.group_id == group) return &g;
  }
  return nullptr;
}

std::map<std::string, std::string> parse_taxonomy(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("taxonomy line without a tab: " + line);
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

std::vector<BoundingBox> parse_bboxes(std::string_view text) {
  std::vector<BoundingBox> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    long long v[5];
    for (long long& x : v) {
      if (!(fields >> x) || x < 0) throw FormatError("bad bbox line: " + line);
    }
    std::string rest;
    if (fields >> rest) throw FormatError("trailing data on bbox line: " + line);
    BoundingBox box{static_cast<std::uint32_t>(v[0]), static_cast<std::size_t>(v[1]),
                    static_cast<std::size_t>(v[2]), static_cast<std::size_t>(v[3]),
                    static_cast<std::size_t>(v[4])};
    if (box.x0 > box.x1 || box.y0 > box.y1) throw FormatError("inverted bbox: " + line);
    out.push_back(box);
  }
  return out;
}

std::optional<BoundingBox> label_hull(const LabelMask& mask, std::uint32_t label) {
  std::optional<BoundingBox> hull;
  for (std::size_t r = 0; r < mask.height(); ++r) {
    for (std::size_t c = 0; c < mask.width(); ++c) {
      if (mask(r, c) != label) continue;
      if (!hull) {
        hull = BoundingBox{label, c, r, c, r};
      } else {
        hull->x0 = std::min(hull->x0, c);
        hull->x1 = std::max(hull->x1, c);
        hull->y0 = std::min(hull->y0, r);
        hull->y1 = std::max(hull->y1, r);
      }
    }
  }
  return hull;
}

Dataset load_dataset(const fs::path& root, unsigned workers) {
  if (!fs::is_directory(root)) throw Error("dataset root does not exist: " + root.string());
  Dataset ds;
  ds.root = root;
  const fs::path taxonomy_path = root / "taxonomy.tsv";
  if (fs::exists(taxonomy_path)) {
    try {
      ds.taxonomy = parse_taxonomy(read_text(taxonomy_path));
    } catch (const FormatError& e) {
      ds.validation.push_back({"", "taxonomy.tsv", e.what()});
    }
  }
  const auto group_names = sorted_subdirs(root / "gt_object");
  if (group_names.empty()) throw Error("dataset root is empty: " + root.string());

  std::vector<GroupLoad> loads(group_names.size());
  parallel_for(group_names.size(), workers, [&](std::size_t g) {
    loads[g] = load_group(root, group_names[g], ds.taxonomy);
  });
  for (auto& load : loads) {
    ds.groups.push_back(std::move(load.record));
    ds.validation.insert(ds.validation.end(), load.validation.begin(), load.validation.end());
  }
  return ds;
}

ScalarMap mean_mask(std::span<const LabelMask> masks, std::size_t canvas) {
  if (masks.empty()) throw Error("mean mask needs at least one mask");
  std::vector<double> acc(canvas * canvas, 0.0);
  for (const LabelMask& mask : masks) {
    RealGrid binary(mask.height(), mask.width());
    for (std::size_t i = 0; i < mask.size(); ++i) binary[i] = mask.is_foreground(i) ? 1.0 : 0.0;
    const RealGrid resized = resize_bilinear(binary, canvas, canvas);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += resized[i];
  }
  const auto n = static_cast<double>(masks.size());
  for (double& v : acc) v = std::clamp(v / n, 0.0, 1.0);
  return ScalarMap(canvas, canvas, std::move(acc));
}

namespace {

std::vector<const ImageRecord*> content_ordered(std::vector<const ImageRecord*> images) {
  std::stable_sort(images.begin(), images.end(), content_less);
  return images;
}

ScalarMap mean_mask_of(const std::vector<const ImageRecord*>& images, std::size_t canvas) {
  std::vector<LabelMask> masks;
  masks.reserve(images.size());
  for (const ImageRecord* r : images) masks.push_back(r->object);
  return mean_mask(masks, canvas);
}

}  // namespace

ScalarMap mean_mask(const GroupRecord& group, std::size_t canvas) {
  std::vector<const ImageRecord*> images;
  for (const auto& img : group.images) images.push_back(&img);
  return mean_mask_of(content_ordered(std::move(images)), canvas);
}

DatasetStats compute_stats(const Dataset& dataset) {
  if (dataset.image_count() == 0) throw Error("statistics need a non-empty dataset");
  DatasetStats s;
  s.n_groups = dataset.groups.size();
  std::vector<double> instance_ratios;
  std::vector<double> object_ratios;
  std::map<std::string, SuperClassStats> supers;
  std::vector<const ImageRecord*> all;
  for (const GroupRecord& group : dataset.groups) {
    auto& sc = supers[group.super_class];
    sc.name = group.super_class;
    ++sc.groups;
    sc.images += group.images.size();
    std::vector<const ImageRecord*> members;
    for (const ImageRecord& img : group.images) {
      members.push_back(&img);
      all.push_back(&img);
      ++s.n_images;
      const std::size_t count = img.instance_count();
      s.n_instances += count;
      ++s.instance_count_histogram[std::min<std::size_t>(count, 3)];
      const std::size_t total = img.object.size();
      add_ratio(object_ratios, img.object.foreground_count(), total);
      if (img.instances) {
        std::vector<std::size_t> pixels(count + 1, 0);
        for (auto l : img.instances->values()) ++pixels[l];
        for (std::size_t k = 1; k <= count; ++k) add_ratio(instance_ratios, pixels[k], total);
      } else if (count == 1) {
        add_ratio(instance_ratios, img.object.foreground_count(), total);
      }
    }
    if (!members.empty()) {
      s.group_mean_masks.emplace_back(group.group_id,
                                      mean_mask_of(content_ordered(members), kMeanMaskCanvas));
    }
  }
  s.instance_size = summarize(std::move(instance_ratios));
  s.object_size = summarize(std::move(object_ratios));
  for (auto& [_, sc] : supers) s.super_classes.push_back(sc);
  s.mean_mask = mean_mask_of(content_ordered(std::move(all)), kMeanMaskCanvas);
  return s;
}

std::string stats_to_json(const DatasetStats& stats, std::span<const ValidationEntry> validation) {
  using nlohmann::ordered_json;
  auto size_json = [](const SizeStats& s) {
    ordered_json j;
    j["count"] = s.count;
    j["min"] = s.min;
    j["max"] = s.max;
    j["mean"] = s.mean;
    j["histogram"] = s.histogram;
    return j;
  };
  ordered_json j;
  j["n_groups"] = stats.n_groups;
  j["n_images"] = stats.n_images;
  j["n_instances"] = stats.n_instances;
  j["instance_counting"] = "distinct labels in the instance mask; 1 for a non-empty object mask without one";
  j["instance_count_histogram"] = {{"0", stats.instance_count_histogram[0]},
                                   {"1", stats.instance_count_histogram[1]},
                                   {"2", stats.instance_count_histogram[2]},
                                   {">=3", stats.instance_count_histogram[3]}};
  j["instance_size"] = size_json(stats.instance_size);
  j["object_size"] = size_json(stats.object_size);
  ordered_json supers = ordered_json::array();
  for (const auto& sc : stats.super_classes) {
    supers.push_back({{"name", sc.name}, {"groups", sc.groups}, {"images", sc.images}});
  }
  j["super_classes"] = supers;
  ordered_json issues = ordered_json::array();
  for (const auto& v : validation) {
    issues.push_back({{"group", v.group}, {"image", v.image}, {"message", v.message}});
  }
  j["validation"] = issues;
  return j.dump(2) + "\n";
}

}  // namespace cosal::dataset
