#include "himforge/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "himforge/analyze.hpp"
#include "himforge/parallel.hpp"
#include "himforge/pipeline.hpp"
#include "himforge/png_codec.hpp"
#include "himforge/postprocess.hpp"
#include "himforge/render.hpp"
#include "himforge/scene.hpp"
#include "himforge/scene_json.hpp"
#include "himforge/segment.hpp"

namespace himforge::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kRunFile = "run.json";

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string abs_path(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

std::string index_stem(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", k);
  return buf;
}

void write_text(const fs::path& p, const std::string& s) {
  write_file(p, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

/// PNG files in `dir` sorted by name; a dataset directory resolves to its
/// `sub` folder when present.
std::vector<fs::path> list_pngs(const fs::path& dir, const char* sub = nullptr) {
  fs::path root = dir;
  if (sub != nullptr && fs::is_directory(dir / sub)) root = dir / sub;
  if (!fs::is_directory(root)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, fs::path> by_stem(const std::vector<fs::path>& files) {
  std::map<std::string, fs::path> m;
  for (const auto& f : files) m[f.stem().string()] = f;
  return m;
}

/// Records the resolved invocation so `rerun` can replay it.
void write_run_file(const fs::path& dir, const std::string& sub, const std::vector<std::string>& argv,
                    const json& params) {
  json j;
  j["tool"] = "himforge";
  j["version"] = kVersion;
  j["subcommand"] = sub;
  j["argv"] = argv;
  j["params"] = params;
  write_text(dir / kRunFile, j.dump(2) + "\n");
}

json metric_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const MetricsReport& r) {
  json j;
  j["counts"] = {{"tp", r.counts.tp}, {"tn", r.counts.tn}, {"fp", r.counts.fp}, {"fn", r.counts.fn}};
  j["accuracy"] = metric_json(r.accuracy);
  j["precision"] = metric_json(r.precision);
  j["recall"] = metric_json(r.recall);
  j["f1"] = metric_json(r.f1);
  j["good"] = r.good();
  return j;
}

/// Reads a label PNG; 8-bit masks are labeled by 8-connected components.
LabelMap read_labels(const fs::path& p) {
  const Bytes bytes = read_file(p);
  const GrayPixels px = decode_gray_pixels(bytes);
  if (px.depth == 8) return connected_components(decode_mask(bytes));
  return decode_labels(bytes);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string recipe;
  std::string preset;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 1;
  std::optional<int> target;
  std::optional<double> sigma;
  std::optional<int> resolution;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (!a.recipe.empty() && !a.preset.empty()) throw UsageError("--recipe and --preset are mutually exclusive");
  Recipe recipe = a.recipe.empty() ? preset_recipe(a.preset.empty() ? "sio2" : a.preset) : load_recipe(a.recipe);
  if (a.target) recipe.degrade.target = *a.target;
  if (a.sigma) recipe.degrade.sigma = *a.sigma;
  if (a.resolution) recipe.resolution = *a.resolution;
  validate(recipe);
  if (a.count == 0) throw UsageError("--count must be >= 1");

  const fs::path dir = a.out;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "labels");
  fs::create_directories(dir / "ids");
  const std::string recipe_text = canonical_json(recipe);
  write_text(dir / "recipe.json", recipe_text + "\n");

  const Rng root(a.seed);
  const int target = recipe.degrade.target;
  std::vector<std::string> lines(a.count);
  parallel_for(a.count, a.workers, [&](std::size_t k) {
    const std::string stem = index_stem(k);
    const Rng entry = root.fork("entry-" + stem);
    const SceneSpec scene = build_scene(recipe, entry.fork("scene"));
    const RenderOutput r = render_pair(scene);
    Rng noise = entry.fork("degrade");
    const GrayImage img = degrade(r.beauty, target, recipe.degrade.sigma, noise);
    const BinaryMask mask = resize_nearest(r.label_mask, target, target);
    const LabelMap ids = resize_nearest(r.id_map, target, target);
    write_file(dir / "images" / (stem + ".png"), encode_image(img, 16));
    write_file(dir / "labels" / (stem + ".png"), encode_mask(mask));
    write_file(dir / "ids" / (stem + ".png"), encode_labels(ids));
    json e;
    e["type"] = "entry";
    e["index"] = k;
    e["image"] = "images/" + stem + ".png";
    e["label"] = "labels/" + stem + ".png";
    e["ids"] = "ids/" + stem + ".png";
    e["scene"] = scene;
    e["degradation"] = {{"target", target}, {"sigma", recipe.degrade.sigma}};
    e["nm_per_px"] = scene.camera.crop.side / target;
    e["particles_visible"] = ids.count();
    lines[k] = e.dump();
  });

  json header;
  header["type"] = "header";
  header["version"] = kManifestVersion;
  header["master_seed"] = a.seed;
  header["recipe"] = "recipe.json";
  header["recipe_name"] = recipe.name;
  header["recipe_hash"] = hex64(fnv1a64(recipe_text));
  header["nm_per_px"] = recipe.extent / target;
  header["count"] = a.count;
  std::string manifest = header.dump() + "\n";
  for (const auto& l : lines) manifest += l + "\n";
  write_text(dir / "manifest.jsonl", manifest);

  std::vector<std::string> argv = {"synth", "--count", std::to_string(a.count), "--seed", std::to_string(a.seed),
                                   "--out", abs_path(a.out), "--target", std::to_string(target),
                                   "--resolution", std::to_string(recipe.resolution)};
  // the sigma is stored in the copied recipe; replay from that copy
  argv.insert(argv.end(), {"--recipe", abs_path((dir / "recipe.json").string())});
  json params = {{"count", a.count}, {"seed", a.seed}, {"recipe_hash", header["recipe_hash"]},
                 {"recipe_name", recipe.name}, {"target", target}, {"sigma", recipe.degrade.sigma},
                 {"resolution", recipe.resolution}, {"seed_lineage", "entry-<index>/{scene,degrade}"}};
  write_run_file(dir, "synth", argv, params);
  out << "synth: wrote " << a.count << " entries to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SegmentArgs {
  std::string baseline;
  std::string probmaps;
  double threshold = kDefaultThreshold;
  std::string out;
  int workers = 1;
  BaselineParams params;
  int tiles = 8;
};

int cmd_segment(SegmentArgs a, std::ostream& out, std::ostream& err) {
  if (a.baseline.empty() == a.probmaps.empty()) throw UsageError("exactly one of --baseline or --probmaps is required");
  a.params.clahe.tiles_x = a.params.clahe.tiles_y = a.tiles;
  const bool baseline = !a.baseline.empty();
  const auto files = list_pngs(baseline ? a.baseline : a.probmaps, baseline ? "images" : nullptr);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  std::vector<std::uint8_t> degenerate(files.size(), 0);
  parallel_for(files.size(), a.workers, [&](std::size_t k) {
    const GrayImage in = read_image(files[k]);
    GrayImage prob;
    if (!baseline) {
      prob = in;
    } else {
      try {
        prob = baseline_segment(in, a.params);
      } catch (const DegenerateHistogram&) {
        degenerate[k] = 1;
        prob = GrayImage(in.width(), in.height(), 0.0);
      }
    }
    write_file(dir / (files[k].stem().string() + ".png"), encode_mask(threshold_probability(prob, a.threshold)));
  });
  for (std::size_t k = 0; k < files.size(); ++k) {
    if (degenerate[k]) err << "himforge: warning: " << files[k].filename().string() << " has a flat histogram; wrote an empty mask\n";
  }
  std::vector<std::string> argv = {"segment", baseline ? "--baseline" : "--probmaps",
                                   abs_path(baseline ? a.baseline : a.probmaps), "--threshold",
                                   json(a.threshold).dump(), "--out", abs_path(a.out)};
  json params = {{"mode", baseline ? "baseline" : "probmaps"}, {"threshold", a.threshold}, {"files", files.size()}};
  if (baseline) {
    const std::vector<std::string> extra = {"--clahe-tiles", std::to_string(a.tiles), "--clip-limit",
                                            json(a.params.clahe.clip_limit).dump(), "--smoothing-radius",
                                            std::to_string(a.params.smoothing_radius), "--smoothing-passes",
                                            std::to_string(a.params.smoothing_passes)};
    argv.insert(argv.end(), extra.begin(), extra.end());
    if (a.params.invert) argv.push_back("--invert");
    params["clahe_tiles"] = a.tiles;
    params["clip_limit"] = a.params.clahe.clip_limit;
    params["smoothing_radius"] = a.params.smoothing_radius;
    params["smoothing_passes"] = a.params.smoothing_passes;
    params["invert"] = a.params.invert;
  }
  write_run_file(dir, "segment", argv, params);
  out << "segment: wrote " << files.size() << " masks to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PostArgs {
  std::string masks;
  std::size_t min_area = 400;
  double dynamic = 2.0;
  bool normalized = false;
  int connectivity = 8;
  std::string out;
  int workers = 1;
};

int cmd_post(const PostArgs& a, std::ostream& out) {
  WatershedParams wp;
  wp.dynamic = a.dynamic;
  wp.normalized = a.normalized;
  wp.connectivity = connectivity_from_int(a.connectivity);
  if (!(a.dynamic >= 0.0)) throw UsageError("--dynamic must be >= 0");
  const auto files = list_pngs(a.masks);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  std::vector<std::uint32_t> counts(files.size());
  parallel_for(files.size(), a.workers, [&](std::size_t k) {
    const LabelMap labels = postprocess_chain(decode_mask(read_file(files[k])), a.min_area, wp);
    counts[k] = labels.count();
    write_file(dir / (files[k].stem().string() + ".png"), encode_labels(labels));
  });
  json c = json::object();
  for (std::size_t k = 0; k < files.size(); ++k) c[files[k].stem().string()] = counts[k];
  write_text(dir / "counts.json", c.dump(2) + "\n");
  std::vector<std::string> argv = {"post", "--masks", abs_path(a.masks), "--min-area", std::to_string(a.min_area),
                                   "--dynamic", json(a.dynamic).dump(), "--connectivity",
                                   std::to_string(a.connectivity), "--out", abs_path(a.out)};
  if (a.normalized) argv.push_back("--normalized");
  json params = {{"min_area", a.min_area}, {"dynamic", a.dynamic}, {"normalized", a.normalized},
                 {"connectivity", a.connectivity}, {"files", files.size()}};
  write_run_file(dir, "post", argv, params);
  out << "post: labeled " << files.size() << " masks into " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string report;
  int workers = 1;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto preds = list_pngs(a.pred);
  const auto gts = by_stem(list_pngs(a.gt, "labels"));
  if (preds.empty()) throw Error("no prediction PNGs in " + a.pred);
  std::vector<json> rows(preds.size());
  std::vector<ConfusionCounts> counts(preds.size());
  std::vector<std::optional<double>> f1(preds.size());
  parallel_for(preds.size(), a.workers, [&](std::size_t k) {
    const std::string stem = preds[k].stem().string();
    const auto it = gts.find(stem);
    if (it == gts.end()) throw Error("no ground truth for " + stem);
    const BinaryMask p = decode_mask(read_file(preds[k]));
    const BinaryMask g = decode_mask(read_file(it->second));
    counts[k] = confusion(p, g);
    const MetricsReport r = metrics(counts[k]);
    f1[k] = r.f1;
    json row = report_json(r);
    row["image"] = stem;
    row["pred_components"] = read_labels(preds[k]).count();
    row["gt_components"] = connected_components(g).count();
    rows[k] = std::move(row);
  });
  ConfusionCounts total;
  double f1_sum = 0.0;
  std::size_t f1_n = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    total += counts[k];
    if (f1[k]) {
      f1_sum += *f1[k];
      ++f1_n;
    }
  }
  json agg = report_json(metrics(total));
  agg["mean_f1"] = f1_n > 0 ? json(f1_sum / f1_n) : json(nullptr);
  agg["images"] = preds.size();
  json report;
  report["images"] = rows;
  report["aggregate"] = agg;
  report["run"] = {{"tool", "himforge"},
                   {"version", kVersion},
                   {"subcommand", "eval"},
                   {"argv", {"eval", "--pred", abs_path(a.pred), "--gt", abs_path(a.gt), "--report", abs_path(a.report)}}};
  write_text(a.report, report.dump(2) + "\n");
  out << "eval: " << preds.size() << " images, aggregate F1 "
      << (agg["f1"].is_null() ? std::string("undefined") : agg["f1"].dump()) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string labels;
  std::optional<double> nm_per_px;
  std::string manifest;
  double hist_bin = 5.0;
  std::string gt;
  std::string out;
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  if (a.nm_per_px.has_value() == !a.manifest.empty()) {
    throw UsageError("exactly one of --nm-per-px or --manifest is required");
  }
  std::map<std::string, double> scale_of;
  if (!a.manifest.empty()) {
    std::ifstream in(a.manifest);
    if (!in) throw Error("cannot open " + a.manifest);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (j.value("type", "") != "entry") continue;
      scale_of[fs::path(j.at("image").get<std::string>()).stem().string()] = j.at("nm_per_px").get<double>();
    }
  }
  const auto files = list_pngs(a.labels);
  std::map<std::string, fs::path> gts;
  if (!a.gt.empty()) gts = by_stem(list_pngs(a.gt, "labels"));
  const fs::path dir = a.out;
  fs::create_directories(dir);

  std::ostringstream csv;
  csv << "image,n_p,mean_sqrt_area_nm,median_sqrt_area_nm,f1\n";
  std::vector<ComponentStats> all;
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    double nm = 0.0;
    if (a.nm_per_px) {
      nm = *a.nm_per_px;
    } else {
      const auto it = scale_of.find(stem);
      if (it == scale_of.end()) throw Error("manifest has no entry for " + stem);
      nm = it->second;
    }
    const LabelMap labels = read_labels(f);
    const auto stats = component_stats(labels, PixelScale(nm));
    const SizeHistogram hist = size_histogram(stats, a.hist_bin);
    all.insert(all.end(), stats.begin(), stats.end());

    json doc;
    doc["image"] = stem;
    doc["nm_per_px"] = nm;
    doc["count"] = labels.count();
    json comps = json::array();
    std::vector<double> sizes;
    for (const auto& s : stats) {
      comps.push_back({{"id", s.id},
                       {"area_px", s.area_px},
                       {"sqrt_area_nm", s.sqrt_area_nm},
                       {"centroid", {s.cx, s.cy}},
                       {"bbox", {s.bbox.x0, s.bbox.y0, s.bbox.x1, s.bbox.y1}}});
      sizes.push_back(s.sqrt_area_nm);
    }
    doc["components"] = comps;
    doc["histogram"] = {{"bin_width", hist.bin_width}, {"counts", hist.counts}, {"total", hist.total}};
    std::string f1_cell;
    const auto g = gts.find(stem);
    if (g != gts.end()) {
      const MetricsReport r = metrics(confusion(labels.support(), decode_mask(read_file(g->second))));
      doc["metrics"] = report_json(r);
      if (r.f1) f1_cell = json(*r.f1).dump();
    }
    write_text(dir / (stem + ".json"), doc.dump(2) + "\n");
    const double mean = sizes.empty() ? 0.0 : std::accumulate(sizes.begin(), sizes.end(), 0.0) / sizes.size();
    csv << stem << "," << stats.size() << "," << json(mean).dump() << "," << json(median(sizes)).dump() << ","
        << f1_cell << "\n";
  }
  write_text(dir / "dataset.csv", csv.str());
  const SizeHistogram total = size_histogram(all, a.hist_bin);
  std::ostringstream h;
  h << "bin_lo_nm,bin_hi_nm,count\n";
  for (std::size_t k = 0; k < total.counts.size(); ++k) {
    h << json(k * a.hist_bin).dump() << "," << json((k + 1) * a.hist_bin).dump() << "," << total.counts[k] << "\n";
  }
  write_text(dir / "histogram.csv", h.str());

  std::vector<std::string> argv = {"stats", "--labels", abs_path(a.labels), "--hist-bin", json(a.hist_bin).dump(),
                                   "--out", abs_path(a.out)};
  if (a.nm_per_px) {
    argv.insert(argv.end(), {"--nm-per-px", json(*a.nm_per_px).dump()});
  } else {
    argv.insert(argv.end(), {"--manifest", abs_path(a.manifest)});
  }
  if (!a.gt.empty()) argv.insert(argv.end(), {"--gt", abs_path(a.gt)});
  json params = {{"hist_bin_nm", a.hist_bin}, {"images", files.size()}, {"particles", all.size()}};
  write_run_file(dir, "stats", argv, params);
  out << "stats: " << files.size() << " images, " << all.size() << " particles\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string set_a;
  std::string set_b;
  int patch = 144;
  std::size_t random_count = 16;
  std::uint64_t seed = 0;
  double perplexity = 30.0;
  int iterations = 1000;
  double variance = 0.9;
  std::string out;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const auto files_a = list_pngs(a.set_a, "images");
  const auto files_b = list_pngs(a.set_b, "images");
  const Rng root(a.seed);
  std::vector<std::vector<double>> feats;
  std::vector<std::string> source;
  for (const auto& f : files_a) {
    for (const auto& p : extract_patches(read_image(f), a.patch, PatchMode::kSequential, 0, root)) {
      feats.push_back(patch_features(p.pixels));
      source.push_back("real");
    }
  }
  for (const auto& f : files_b) {
    const Rng r = root.fork("set-b").fork(f.filename().string());
    for (const auto& p : extract_patches(read_image(f), a.patch, PatchMode::kRandom, a.random_count, r)) {
      feats.push_back(patch_features(p.pixels));
      source.push_back("synthetic");
    }
  }
  const PcaResult pc = pca(feats, a.variance);
  TsneParams tp;
  tp.perplexity = a.perplexity;
  tp.iterations = a.iterations;
  const TsneResult ts = tsne(pc.projected, tp, root.fork("tsne"));

  const fs::path dir = a.out;
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << "source,kind,x,y\n";
  for (std::size_t i = 0; i < ts.positions.size(); ++i) {
    csv << source[i] << ",patch," << json(ts.positions[i][0]).dump() << "," << json(ts.positions[i][1]).dump() << "\n";
  }
  write_text(dir / "embedding.csv", csv.str());
  json summary = {{"features", "hand-crafted features (128-d: 8x8 block means, intensity histogram, gradient histogram)"},
                  {"patches_real", std::count(source.begin(), source.end(), "real")},
                  {"patches_synthetic", std::count(source.begin(), source.end(), "synthetic")},
                  {"pca_components", pc.components()},
                  {"retained_variance", pc.retained_variance},
                  {"kl_initial", ts.kl_initial},
                  {"kl_final", ts.kl_final}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  std::vector<std::string> argv = {"compare", "--set-a", abs_path(a.set_a), "--set-b", abs_path(a.set_b),
                                   "--patch", std::to_string(a.patch), "--random-count", std::to_string(a.random_count),
                                   "--seed", std::to_string(a.seed), "--perplexity", json(a.perplexity).dump(),
                                   "--iterations", std::to_string(a.iterations), "--variance", json(a.variance).dump(),
                                   "--out", abs_path(a.out)};
  json params = {{"patch", a.patch}, {"random_count", a.random_count}, {"seed", a.seed},
                 {"perplexity", a.perplexity}, {"iterations", a.iterations}, {"variance_target", a.variance},
                 {"seed_lineage", "set-b/<file>/patches, tsne/tsne-init"}};
  write_run_file(dir, "compare", argv, params);
  out << "compare: " << feats.size() << " patches, " << pc.components() << " PCA components\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GalleryArgs {
  std::vector<std::string> inputs;
  std::string masks;
  std::string labels;
  std::string gt;
  std::string out;
};

int cmd_gallery(const GalleryArgs& a, std::ostream& out) {
  std::vector<fs::path> images;
  for (const auto& in : a.inputs) {
    if (fs::is_directory(in)) {
      const auto more = list_pngs(in, "images");
      images.insert(images.end(), more.begin(), more.end());
    } else {
      images.emplace_back(in);
    }
  }
  const auto find = [](const std::string& dir, const std::string& stem, const char* sub) -> std::optional<fs::path> {
    if (dir.empty()) return std::nullopt;
    const auto m = by_stem(list_pngs(dir, sub));
    const auto it = m.find(stem);
    if (it == m.end()) return std::nullopt;
    return it->second;
  };
  std::vector<GalleryEntry> entries;
  for (const auto& img : images) {
    GalleryEntry e;
    e.name = img.stem().string();
    e.image = read_image(img);
    if (auto p = find(a.masks, e.name, nullptr)) e.mask = decode_mask(read_file(*p));
    if (auto p = find(a.labels, e.name, nullptr)) e.labels = read_labels(*p);
    if (auto p = find(a.gt, e.name, "labels")) {
      const BinaryMask g = decode_mask(read_file(*p));
      if (e.mask) {
        e.report = metrics(confusion(*e.mask, g));
      } else if (e.labels) {
        e.report = metrics(confusion(e.labels->support(), g));
      }
    }
    entries.push_back(std::move(e));
  }
  emit_gallery(entries, a.out);
  std::vector<std::string> argv = {"gallery", "--out", abs_path(a.out), "--inputs"};
  for (const auto& in : a.inputs) argv.push_back(abs_path(in));
  if (!a.masks.empty()) argv.insert(argv.end(), {"--masks", abs_path(a.masks)});
  if (!a.labels.empty()) argv.insert(argv.end(), {"--labels", abs_path(a.labels)});
  if (!a.gt.empty()) argv.insert(argv.end(), {"--gt", abs_path(a.gt)});
  write_run_file(a.out, "gallery", argv, {{"entries", entries.size()}});
  out << "gallery: " << entries.size() << " entries in " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_rerun(const std::string& from, const std::string& new_out, std::ostream& out, std::ostream& err) {
  const fs::path p = fs::is_directory(from) ? fs::path(from) / kRunFile : fs::path(from);
  json j = read_json(p);
  if (j.contains("run")) j = j["run"];
  if (!j.contains("argv") || !j["argv"].is_array()) throw Error(p.string() + " has no recorded argv");
  auto argv = j["argv"].get<std::vector<std::string>>();
  if (argv.empty() || argv.front() == "rerun") throw Error(p.string() + " does not record a replayable command");
  if (!new_out.empty()) {
    const char* flag = argv.front() == "eval" ? "--report" : "--out";
    const auto it = std::find(argv.begin(), argv.end(), flag);
    if (it == argv.end() || it + 1 == argv.end()) throw Error("recorded command has no " + std::string(flag));
    *(it + 1) = abs_path(new_out);
  }
  return run(argv, out, err);
}

}  // namespace

int default_workers() {
  const char* env = std::getenv("HIMFORGE_WORKERS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 1024) return 1;
  return static_cast<int>(v);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic nanoparticle micrograph foundry and segmentation metrology", "himforge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  const int workers_default = default_workers();

  SynthArgs synth;
  synth.workers = workers_default;
  auto* s = app.add_subcommand("synth", "Generate a synthetic image/label dataset");
  auto* recipe_opt = s->add_option("--recipe", synth.recipe, "Recipe JSON file")->check(CLI::ExistingFile);
  s->add_option("--preset", synth.preset, "Built-in recipe: sio2, tio2, ag")->excludes(recipe_opt);
  s->add_option("--count", synth.count, "Number of entries")->default_val(1);
  s->add_option("--seed", synth.seed, "Master seed")->default_val(0);
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--workers", synth.workers, "Parallel workers (env HIMFORGE_WORKERS)")->check(CLI::PositiveNumber);
  s->add_option("--target", synth.target, "Degraded output side length in pixels")->check(CLI::PositiveNumber);
  s->add_option("--sigma", synth.sigma, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
  s->add_option("--resolution", synth.resolution, "Render resolution in pixels")->check(CLI::PositiveNumber);

  SegmentArgs seg;
  seg.workers = workers_default;
  auto* g = app.add_subcommand("segment", "Binarize images with the classical baseline or threshold probability maps");
  auto* base_opt = g->add_option("--baseline", seg.baseline, "Directory of images to segment")->check(CLI::ExistingDirectory);
  g->add_option("--probmaps", seg.probmaps, "Directory of 16-bit probability PNGs")
      ->check(CLI::ExistingDirectory)
      ->excludes(base_opt);
  g->add_option("--threshold", seg.threshold, "Strict probability threshold")->default_val(kDefaultThreshold);
  g->add_option("--out", seg.out, "Output directory")->required();
  g->add_option("--workers", seg.workers)->check(CLI::PositiveNumber);
  g->add_option("--clahe-tiles", seg.tiles)->default_val(8)->check(CLI::PositiveNumber);
  g->add_option("--clip-limit", seg.params.clahe.clip_limit)->default_val(seg.params.clahe.clip_limit);
  g->add_option("--smoothing-radius", seg.params.smoothing_radius)->default_val(seg.params.smoothing_radius);
  g->add_option("--smoothing-passes", seg.params.smoothing_passes)->default_val(seg.params.smoothing_passes);
  g->add_flag("--invert", seg.params.invert, "Particles darker than background");

  PostArgs post;
  post.workers = workers_default;
  auto* p = app.add_subcommand("post", "Area opening and distance-transform watershed");
  p->add_option("--masks", post.masks, "Directory of mask PNGs")->required()->check(CLI::ExistingDirectory);
  p->add_option("--min-area", post.min_area, "Minimum component area in pixels")->default_val(400);
  p->add_option("--dynamic", post.dynamic, "Watershed dynamic")->default_val(2.0);
  p->add_flag("--normalized", post.normalized, "Scale the distance map to 0..255 first");
  p->add_option("--connectivity", post.connectivity)->default_val(8)->check(CLI::IsMember({4, 8}));
  p->add_option("--out", post.out, "Output directory")->required();
  p->add_option("--workers", post.workers)->check(CLI::PositiveNumber);

  EvalArgs ev;
  ev.workers = workers_default;
  auto* e = app.add_subcommand("eval", "Pixel confusion metrics against ground truth");
  e->add_option("--pred", ev.pred, "Directory of predicted masks or label maps")->required()->check(CLI::ExistingDirectory);
  e->add_option("--gt", ev.gt, "Ground-truth mask directory or dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--report", ev.report, "Output JSON report")->required();
  e->add_option("--workers", ev.workers)->check(CLI::PositiveNumber);

  StatsArgs st;
  auto* t = app.add_subcommand("stats", "Per-particle statistics and size histograms");
  t->add_option("--labels", st.labels, "Directory of label maps or masks")->required()->check(CLI::ExistingDirectory);
  auto* nm_opt = t->add_option("--nm-per-px", st.nm_per_px, "Pixel edge length in nm")->check(CLI::PositiveNumber);
  t->add_option("--manifest", st.manifest, "Take per-image pixel scale from a dataset manifest")
      ->check(CLI::ExistingFile)
      ->excludes(nm_opt);
  t->add_option("--hist-bin", st.hist_bin, "Histogram bin width in nm")->default_val(5.0)->check(CLI::PositiveNumber);
  t->add_option("--gt", st.gt, "Optional ground truth for per-image F1")->check(CLI::ExistingDirectory);
  t->add_option("--out", st.out, "Output directory")->required();

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Patch-feature PCA and t-SNE embedding of two image sets");
  c->add_option("--set-a", cmp.set_a, "Reference images (sequential patches)")->required()->check(CLI::ExistingDirectory);
  c->add_option("--set-b", cmp.set_b, "Synthetic images (random patches)")->required()->check(CLI::ExistingDirectory);
  c->add_option("--patch", cmp.patch)->default_val(144)->check(CLI::PositiveNumber);
  c->add_option("--random-count", cmp.random_count, "Random patches per set-b image")->default_val(16);
  c->add_option("--seed", cmp.seed)->default_val(0);
  c->add_option("--perplexity", cmp.perplexity)->default_val(30.0);
  c->add_option("--iterations", cmp.iterations)->default_val(1000);
  c->add_option("--variance", cmp.variance, "PCA variance target")->default_val(0.9);
  c->add_option("--out", cmp.out, "Output directory")->required();

  GalleryArgs gal;
  auto* y = app.add_subcommand("gallery", "Static HTML contact sheet with overlays and metrics");
  y->add_option("--inputs", gal.inputs, "Images or image directories")->required();
  y->add_option("--masks", gal.masks)->check(CLI::ExistingDirectory);
  y->add_option("--labels", gal.labels)->check(CLI::ExistingDirectory);
  y->add_option("--gt", gal.gt)->check(CLI::ExistingDirectory);
  y->add_option("--out", gal.out, "Output directory")->required();

  std::string rerun_from, rerun_out;
  auto* r = app.add_subcommand("rerun", "Replay the command recorded in an output directory");
  r->add_option("source", rerun_from, "Output directory or run/report JSON")->required();
  r->add_option("--out", rerun_out, "Write to a different output location");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "himforge: " << ex.what() << "\n";
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (g->parsed()) return cmd_segment(seg, out, err);
    if (p->parsed()) return cmd_post(post, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (t->parsed()) return cmd_stats(st, out);
    if (c->parsed()) return cmd_compare(cmp, out);
    if (y->parsed()) return cmd_gallery(gal, out);
    if (r->parsed()) return cmd_rerun(rerun_from, rerun_out, out, err);
  } catch (const UsageError& ex) {
    err << "himforge: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "himforge: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace himforge::cli
