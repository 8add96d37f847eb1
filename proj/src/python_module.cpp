// Python bindings. Rasters cross the boundary as numpy arrays (float64 images,
// uint8 masks, uint32 label maps); scenes and recipes as canonical JSON text.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "himforge/analyze.hpp"
#include "himforge/cli.hpp"
#include "himforge/pipeline.hpp"
#include "himforge/png_codec.hpp"
#include "himforge/postprocess.hpp"
#include "himforge/render.hpp"
#include "himforge/scene_json.hpp"
#include "himforge/segment.hpp"

namespace py = pybind11;
using namespace himforge;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
std::pair<int, int> shape_of(const Array<T>& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-D array");
  return {static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))};
}

template <typename T>
std::vector<T> copy_out(const Array<T>& a) {
  return std::vector<T>(a.data(), a.data() + a.size());
}

template <typename T>
py::array_t<T> to_numpy(int w, int h, std::span<const T> v) {
  py::array_t<T> out({h, w});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

GrayImage image_in(const Array<double>& a) {
  const auto [w, h] = shape_of(a);
  return GrayImage(w, h, copy_out(a));
}
py::array_t<double> image_out(const GrayImage& g) { return to_numpy(g.width(), g.height(), g.samples()); }

BinaryMask mask_in(const Array<std::uint8_t>& a) {
  const auto [w, h] = shape_of(a);
  return BinaryMask(w, h, copy_out(a));
}
py::array_t<std::uint8_t> mask_out(const BinaryMask& m) { return to_numpy(m.width(), m.height(), m.values()); }

py::array_t<std::uint32_t> labels_out(const LabelMap& l) { return to_numpy(l.width(), l.height(), l.ids()); }

LabelMap labels_in(const Array<std::uint32_t>& a) {
  const auto [w, h] = shape_of(a);
  return LabelMap(w, h, copy_out(a));
}

py::dict metrics_dict(const MetricsReport& m) {
  py::dict d;
  d["tp"] = m.counts.tp;
  d["tn"] = m.counts.tn;
  d["fp"] = m.counts.fp;
  d["fn"] = m.counts.fn;
  d["accuracy"] = m.accuracy;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["good"] = m.good();
  return d;
}

SceneSpec scene_in(const std::string& text) { return nlohmann::json::parse(text).get<SceneSpec>(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "himforge core bindings";
  m.attr("__version__") = "0.1.0";
  m.attr("DEFAULT_THRESHOLD") = kDefaultThreshold;
  m.attr("GOOD_F1") = kGoodF1;

  // translators run newest first, so the base class goes in first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DegenerateHistogram>(m, "DegenerateHistogram", PyExc_ValueError);
  py::register_exception<NoBackground>(m, "NoBackground", PyExc_ValueError);

  // scenes
  m.def("preset_recipe", [](const std::string& name) { return canonical_json(preset_recipe(name)); }, py::arg("name"));
  m.def(
      "build_scene",
      [](const std::string& recipe, std::uint64_t seed, std::vector<std::string> lineage) {
        const Recipe r = nlohmann::json::parse(recipe).get<Recipe>();
        return canonical_json(build_scene(r, Rng(seed, std::move(lineage))));
      },
      py::arg("recipe"), py::arg("seed"), py::arg("lineage") = std::vector<std::string>{});
  m.def(
      "render",
      [](const std::string& scene, int workers) {
        const RenderOutput out = render_pair(scene_in(scene), {workers});
        return py::make_tuple(image_out(out.beauty), mask_out(out.label_mask), labels_out(out.id_map));
      },
      py::arg("scene"), py::arg("workers") = 1, "Returns (beauty, label_mask, id_map).");

  // pipeline
  m.def("resize_bilinear", [](const Array<double>& img, int w, int h) { return image_out(resize_bilinear(image_in(img), w, h)); },
        py::arg("image"), py::arg("width"), py::arg("height"));
  m.def(
      "degrade",
      [](const Array<double>& img, int target, double sigma, std::uint64_t seed) {
        Rng r(seed);
        return image_out(degrade(image_in(img), target, sigma, r));
      },
      py::arg("image"), py::arg("target"), py::arg("sigma"), py::arg("seed"));
  m.def(
      "clahe",
      [](const Array<double>& img, int tiles, double clip_limit, int bins) {
        return image_out(clahe(image_in(img), {tiles, tiles, clip_limit, bins}));
      },
      py::arg("image"), py::arg("tiles") = 8, py::arg("clip_limit") = 2.0, py::arg("bins") = 256);

  // segment
  m.def(
      "sigmoid_map",
      [](const Array<double>& logits, bool allow_unbounded) {
        const auto [w, h] = shape_of(logits);
        return image_out(sigmoid_map(ScalarField(w, h, copy_out(logits)), allow_unbounded));
      },
      py::arg("logits"), py::arg("allow_unbounded") = false);
  m.def("threshold_probability", [](const Array<double>& p, double t) { return mask_out(threshold_probability(image_in(p), t)); },
        py::arg("prob"), py::arg("t") = kDefaultThreshold);
  m.def("otsu_threshold", [](const Array<double>& img, int bins) { return otsu_threshold(image_in(img), bins); },
        py::arg("image"), py::arg("bins") = 256);
  m.def(
      "baseline_segment",
      [](const Array<double>& img, int smoothing_radius, int smoothing_passes, bool invert) {
        BaselineParams p;
        p.smoothing_radius = smoothing_radius;
        p.smoothing_passes = smoothing_passes;
        p.invert = invert;
        return image_out(baseline_segment(image_in(img), p));
      },
      py::arg("image"), py::arg("smoothing_radius") = BaselineParams{}.smoothing_radius,
      py::arg("smoothing_passes") = BaselineParams{}.smoothing_passes, py::arg("invert") = false);

  // postprocess
  m.def("connected_components",
        [](const Array<std::uint8_t>& mask, int conn) { return labels_out(connected_components(mask_in(mask), connectivity_from_int(conn))); },
        py::arg("mask"), py::arg("connectivity") = 8);
  m.def("area_opening",
        [](const Array<std::uint8_t>& mask, std::size_t min_area, int conn) {
          return mask_out(area_opening(mask_in(mask), min_area, connectivity_from_int(conn)));
        },
        py::arg("mask"), py::arg("min_area"), py::arg("connectivity") = 8);
  m.def("distance_transform", [](const Array<std::uint8_t>& mask) {
    const ScalarField d = distance_transform(mask_in(mask));
    return to_numpy<double>(d.width(), d.height(), d.values());
  }, py::arg("mask"));
  m.def(
      "watershed_split",
      [](const Array<std::uint8_t>& mask, double dynamic, bool normalized, int conn) {
        return labels_out(watershed_split(mask_in(mask), {dynamic, normalized, connectivity_from_int(conn)}));
      },
      py::arg("mask"), py::arg("dynamic") = 2.0, py::arg("normalized") = false, py::arg("connectivity") = 8);
  m.def(
      "postprocess_chain",
      [](const Array<std::uint8_t>& mask, std::size_t min_area, double dynamic, bool normalized, int conn) {
        return labels_out(postprocess_chain(mask_in(mask), min_area, {dynamic, normalized, connectivity_from_int(conn)}));
      },
      py::arg("mask"), py::arg("min_area") = 400, py::arg("dynamic") = 2.0, py::arg("normalized") = false,
      py::arg("connectivity") = 8);

  // analyze
  m.def("metrics",
        [](const Array<std::uint8_t>& pred, const Array<std::uint8_t>& gt) { return metrics_dict(metrics(confusion(mask_in(pred), mask_in(gt)))); },
        py::arg("pred"), py::arg("gt"));
  m.def(
      "component_stats",
      [](const Array<std::uint32_t>& labels, double nm_per_px) {
        py::list out;
        for (const auto& c : component_stats(labels_in(labels), PixelScale(nm_per_px))) {
          py::dict d;
          d["id"] = c.id;
          d["area_px"] = c.area_px;
          d["sqrt_area_nm"] = c.sqrt_area_nm;
          d["centroid"] = py::make_tuple(c.cx, c.cy);
          d["bbox"] = py::make_tuple(c.bbox.x0, c.bbox.y0, c.bbox.x1, c.bbox.y1);
          out.append(d);
        }
        return out;
      },
      py::arg("labels"), py::arg("nm_per_px"));
  m.def(
      "size_histogram",
      [](const std::vector<double>& sqrt_area_nm, double bin_width) {
        std::vector<ComponentStats> st(sqrt_area_nm.size());
        for (std::size_t i = 0; i < st.size(); ++i) st[i].sqrt_area_nm = sqrt_area_nm[i];
        return size_histogram(st, bin_width).counts;
      },
      py::arg("sqrt_area_nm"), py::arg("bin_width") = 5.0);
  m.def("patch_features", [](const Array<double>& patch) { return patch_features(image_in(patch)); }, py::arg("patch"));
  m.def(
      "pca",
      [](const std::vector<std::vector<double>>& vectors, double target) {
        const PcaResult r = pca(vectors, target);
        py::dict d;
        d["mean"] = r.mean;
        d["basis"] = r.basis;
        d["eigenvalues"] = r.eigenvalues;
        d["projected"] = r.projected;
        d["retained_variance"] = r.retained_variance;
        return d;
      },
      py::arg("vectors"), py::arg("variance_target") = 0.9);
  m.def(
      "tsne",
      [](const std::vector<std::vector<double>>& vectors, double perplexity, int iterations, std::uint64_t seed) {
        TsneParams p;
        p.perplexity = perplexity;
        p.iterations = iterations;
        const TsneResult r = tsne(vectors, p, Rng(seed));
        py::dict d;
        d["positions"] = r.positions;
        d["kl_initial"] = r.kl_initial;
        d["kl_final"] = r.kl_final;
        return d;
      },
      py::arg("vectors"), py::arg("perplexity") = 30.0, py::arg("iterations") = 1000, py::arg("seed") = 0);
  m.def("silhouette_score", &silhouette_score, py::arg("points"), py::arg("labels"));

  // files
  m.def("read_image", [](const std::string& path) { return image_out(read_image(path)); }, py::arg("path"));
  m.def("write_image", [](const std::string& path, const Array<double>& img, int depth) { write_image(path, image_in(img), depth); },
        py::arg("path"), py::arg("image"), py::arg("depth") = 16);
  m.def("read_mask", [](const std::string& path) { return mask_out(decode_mask(read_file(path))); }, py::arg("path"));
  m.def("write_mask", [](const std::string& path, const Array<std::uint8_t>& mask) { write_file(path, encode_mask(mask_in(mask))); },
        py::arg("path"), py::arg("mask"));
  m.def("read_labels", [](const std::string& path) { return labels_out(decode_labels(read_file(path))); }, py::arg("path"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a himforge subcommand in-process; returns (exit_code, stdout, stderr).");
}
