#include "himforge/analyze.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "himforge/png_codec.hpp"

namespace himforge {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_shape(gt)) throw InvalidArgument("prediction and ground truth differ in size");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    if (p && g) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (g) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

MetricsReport metrics(const ConfusionCounts& c) {
  MetricsReport r;
  r.counts = c;
  const auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return r;
}

std::vector<ComponentStats> component_stats(const LabelMap& labels, const PixelScale& scale) {
  std::vector<ComponentStats> out(labels.count());
  std::vector<double> sx(labels.count(), 0.0), sy(labels.count(), 0.0);
  for (std::uint32_t k = 0; k < labels.count(); ++k) {
    out[k].id = k + 1;
    out[k].bbox = {std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
  }
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      const auto id = labels.at(x, y);
      if (id == 0) continue;
      auto& s = out[id - 1];
      ++s.area_px;
      sx[id - 1] += x;
      sy[id - 1] += y;
      s.bbox.x0 = std::min(s.bbox.x0, x);
      s.bbox.y0 = std::min(s.bbox.y0, y);
      s.bbox.x1 = std::max(s.bbox.x1, x);
      s.bbox.y1 = std::max(s.bbox.y1, y);
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& s = out[k];
    const double a = static_cast<double>(s.area_px);
    s.cx = sx[k] / a;
    s.cy = sy[k] / a;
    s.sqrt_area_nm = std::sqrt(a) * scale.nm_per_px();
  }
  return out;
}

SizeHistogram size_histogram(const std::vector<ComponentStats>& stats, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw InvalidArgument("bin width must be > 0");
  SizeHistogram h;
  h.bin_width = bin_width;
  for (const auto& s : stats) {
    const auto bin = static_cast<std::size_t>(std::floor(s.sqrt_area_nm / bin_width));
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
  }
  h.total = stats.size();
  return h;
}

std::vector<std::size_t> histogram_peaks(const SizeHistogram& hist) {
  const auto& c = hist.counts;
  std::vector<std::size_t> peaks;
  std::size_t i = 0;
  while (i < c.size()) {
    std::size_t j = i;
    while (j + 1 < c.size() && c[j + 1] == c[i]) ++j;
    const bool left = i == 0 || c[i - 1] < c[i];
    const bool right = j + 1 == c.size() || c[j + 1] < c[i];
    if (c[i] > 0 && left && right) peaks.push_back(i);
    i = j + 1;
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return c[a] > c[b]; });
  return peaks;
}

// ---------------------------------------------------------------------------

namespace {

GrayImage crop(const GrayImage& img, int x0, int y0, int size) {
  std::vector<double> px(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) px[static_cast<std::size_t>(y) * size + x] = img.at(x0 + x, y0 + y);
  }
  return GrayImage(size, size, std::move(px));
}

}  // namespace

std::vector<Patch> extract_patches(const GrayImage& img, int size, PatchMode mode, std::size_t count,
                                   const Rng& rng) {
  if (size <= 0) throw InvalidArgument("patch size must be > 0");
  if (img.width() < size || img.height() < size) throw InvalidArgument("image smaller than patch");
  std::vector<Patch> out;
  if (mode == PatchMode::kSequential) {
    for (int y = 0; y + size <= img.height(); y += size) {
      for (int x = 0; x + size <= img.width(); x += size) out.push_back({x, y, crop(img, x, y, size)});
    }
    return out;
  }
  Rng r = rng.fork("patches");
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const int x = static_cast<int>(r.uniform_int(0, img.width() - size));
    const int y = static_cast<int>(r.uniform_int(0, img.height() - size));
    out.push_back({x, y, crop(img, x, y, size)});
  }
  return out;
}

std::vector<double> patch_features(const GrayImage& patch) {
  const int w = patch.width(), h = patch.height();
  if (w < 8 || h < 8) throw InvalidArgument("patch must be at least 8x8");
  std::vector<double> f(kFeatureLength, 0.0);

  for (int by = 0; by < 8; ++by) {
    const int y0 = by * h / 8, y1 = (by + 1) * h / 8;
    for (int bx = 0; bx < 8; ++bx) {
      const int x0 = bx * w / 8, x1 = (bx + 1) * w / 8;
      double s = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) s += patch.at(x, y);
      }
      f[static_cast<std::size_t>(by) * 8 + bx] = s / ((x1 - x0) * (y1 - y0));
    }
  }

  const double n = static_cast<double>(patch.size());
  const double gmax = 1.0 / std::sqrt(2.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = patch.at(x, y);
      f[64 + std::min(31, static_cast<int>(v * 32))] += 1.0 / n;
      const double gx = 0.5 * (patch.at(std::min(x + 1, w - 1), y) - patch.at(std::max(x - 1, 0), y));
      const double gy = 0.5 * (patch.at(x, std::min(y + 1, h - 1)) - patch.at(x, std::max(y - 1, 0)));
      const double mag = std::sqrt(gx * gx + gy * gy);
      f[96 + std::min(31, static_cast<int>(mag / gmax * 32))] += 1.0 / n;
    }
  }
  return f;
}

std::vector<double> PcaResult::reconstruct(const std::vector<double>& coords) const {
  std::vector<double> x = mean;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    for (std::size_t d = 0; d < x.size(); ++d) x[d] += coords[k] * basis[k][d];
  }
  return x;
}

PcaResult pca(const std::vector<std::vector<double>>& vectors, double variance_target) {
  if (vectors.size() < 2) throw InvalidArgument("PCA needs at least 2 vectors");
  if (!(variance_target > 0.0 && variance_target <= 1.0)) throw InvalidArgument("variance target must lie in (0,1]");
  const std::size_t n = vectors.size(), d = vectors.front().size();
  if (d == 0) throw InvalidArgument("PCA needs non-empty vectors");
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].size() != d) throw InvalidArgument("PCA vectors differ in length");
    for (std::size_t j = 0; j < d; ++j) x(i, j) = vectors[i][j];
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");

  PcaResult r;
  r.mean.assign(mu.data(), mu.data() + d);
  r.eigenvalues.resize(d);
  for (std::size_t k = 0; k < d; ++k) r.eigenvalues[k] = std::max(0.0, eig.eigenvalues()(d - 1 - k));
  const double total = std::accumulate(r.eigenvalues.begin(), r.eigenvalues.end(), 0.0);

  std::size_t keep = 1;
  double cum = r.eigenvalues[0];
  if (total > 0.0) {
    while (cum / total < variance_target && keep < d) cum += r.eigenvalues[keep++];
  }
  r.retained_variance = total > 0.0 ? cum / total : 1.0;

  for (std::size_t k = 0; k < keep; ++k) {
    Eigen::VectorXd v = eig.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - k));
    // sign convention: largest-magnitude component positive
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    r.basis.emplace_back(v.data(), v.data() + d);
  }
  r.projected.assign(n, std::vector<double>(keep, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < keep; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += x(i, j) * r.basis[k][j];
      r.projected[i][k] = s;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// t-SNE

namespace {

std::vector<double> pairwise_sq(const std::vector<std::vector<double>>& v) {
  const std::size_t n = v.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < v[i].size(); ++k) {
        const double t = v[i][k] - v[j][k];
        s += t * t;
      }
      d[i * n + j] = d[j * n + i] = s;
    }
  }
  return d;
}

double kl_divergence(const std::vector<double>& p, const std::vector<std::array<double, 2>>& y) {
  const std::size_t n = y.size();
  std::vector<double> num(n * n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
      num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
      z += num[i * n + j];
    }
  }
  double kl = 0.0;
  for (std::size_t k = 0; k < n * n; ++k) {
    if (p[k] > 0.0) kl += p[k] * std::log(p[k] / std::max(num[k] / z, 1e-300));
  }
  return kl;
}

}  // namespace

std::vector<double> tsne_conditional_affinities(const std::vector<std::vector<double>>& vectors,
                                                double perplexity) {
  const std::size_t n = vectors.size();
  if (n < 2) throw InvalidArgument("need at least 2 vectors");
  if (!(perplexity > 0.0 && perplexity < static_cast<double>(n - 1))) {
    throw InvalidArgument("perplexity infeasible for this many points");
  }
  const std::vector<double> d = pairwise_sq(vectors);
  const double target = std::log(perplexity);
  std::vector<double> p(n * n, 0.0);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, d[i * n + j]);
    }
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
      double sum = 0.0, wsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          row[j] = 0.0;
          continue;
        }
        // shifting by the nearest distance keeps exp from underflowing
        const double dj = d[i * n + j] - dmin;
        row[j] = std::exp(-beta * dj);
        sum += row[j];
        wsum += dj * row[j];
      }
      const double entropy = std::log(sum) + beta * wsum / sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-10) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j] / sum;
  }
  return p;
}

TsneResult tsne(const std::vector<std::vector<double>>& vectors, const TsneParams& params, const Rng& rng) {
  const std::size_t n = vectors.size();
  if (n < 10) throw InvalidArgument("t-SNE needs at least 10 points");
  if (!(params.perplexity > 0.0 && params.perplexity < (static_cast<double>(n) - 1.0) / 3.0)) {
    throw InvalidArgument("perplexity must be below (n - 1) / 3");
  }
  if (params.iterations <= params.exaggeration_iterations || params.exaggeration_iterations < 0) {
    throw InvalidArgument("iterations must exceed the early-exaggeration phase");
  }
  const std::vector<double> cond = tsne_conditional_affinities(vectors, params.perplexity);
  std::vector<double> p(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      p[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) / (2.0 * n), 1e-300);
    }
    p[i * n + i] = 0.0;
  }

  Rng r = rng.fork("tsne-init");
  TsneResult res;
  res.positions.resize(n);
  for (auto& y : res.positions) y = {r.normal(0.0, 1e-4), r.normal(0.0, 1e-4)};
  std::vector<std::array<double, 2>> update(n, {0.0, 0.0}), gains(n, {1.0, 1.0}), grad(n);
  std::vector<double> num(n * n);

  auto& y = res.positions;
  for (int it = 0; it < params.iterations; ++it) {
    if (it == params.exaggeration_iterations) res.kl_initial = kl_divergence(p, y);
    const double exag = it < params.exaggeration_iterations ? params.exaggeration : 1.0;
    const double momentum = it < params.exaggeration_iterations ? 0.5 : 0.8;
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      num[i * n + i] = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
        const double q = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i * n + j] = num[j * n + i] = q;
        z += 2.0 * q;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double q = num[i * n + j];
        const double m = (exag * p[i * n + j] - q / z) * q;
        gx += m * (y[i][0] - y[j][0]);
        gy += m * (y[i][1] - y[j][1]);
      }
      grad[i] = {4.0 * gx, 4.0 * gy};
    }
    std::array<double, 2> mean{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < 2; ++c) {
        double& g = gains[i][c];
        g = (grad[i][c] > 0) != (update[i][c] > 0) ? g + 0.2 : g * 0.8;
        g = std::max(g, 0.01);
        update[i][c] = momentum * update[i][c] - params.learning_rate * g * grad[i][c];
        y[i][c] += update[i][c];
        mean[c] += y[i][c];
      }
    }
    for (auto& pt : y) {
      pt[0] -= mean[0] / n;
      pt[1] -= mean[1] / n;
    }
  }
  res.kl_final = kl_divergence(p, y);
  return res;
}

double silhouette_score(const std::vector<std::array<double, 2>>& points, const std::vector<int>& labels) {
  const std::size_t n = points.size();
  if (labels.size() != n) throw InvalidArgument("labels and points differ in length");
  std::vector<int> clusters(labels);
  std::sort(clusters.begin(), clusters.end());
  clusters.erase(std::unique(clusters.begin(), clusters.end()), clusters.end());
  if (clusters.size() < 2) throw InvalidArgument("silhouette needs at least 2 clusters");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum(clusters.size(), 0.0);
    std::vector<std::size_t> cnt(clusters.size(), 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto c = std::lower_bound(clusters.begin(), clusters.end(), labels[j]) - clusters.begin();
      sum[c] += std::hypot(points[i][0] - points[j][0], points[i][1] - points[j][1]);
      ++cnt[c];
    }
    const auto own = std::lower_bound(clusters.begin(), clusters.end(), labels[i]) - clusters.begin();
    if (cnt[own] == 0) continue;  // singleton clusters score 0
    const double a = sum[own] / cnt[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) != own && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / n;
}

// ---------------------------------------------------------------------------
// Gallery

std::array<std::uint8_t, 3> palette_color(std::uint32_t id) {
  static constexpr std::array<std::array<std::uint8_t, 3>, kPaletteSize> kPalette = {{
      {230, 25, 75},  {60, 180, 75},  {255, 225, 25}, {0, 130, 200},  {245, 130, 48},  {145, 30, 180},
      {70, 240, 240}, {240, 50, 230}, {210, 245, 60}, {250, 190, 212}, {0, 128, 128}, {170, 110, 40},
  }};
  if (id == 0) return {0, 0, 0};
  return kPalette[(id - 1) % kPaletteSize];
}

namespace {

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "entry" : out;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fmt_metric(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

Bytes overlay(const GalleryEntry& e) {
  const int w = e.image.width(), h = e.image.height();
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double g = e.image.at(x, y) * 255.0;
      std::array<double, 3> c{g, g, g};
      if (e.labels && e.labels->at(x, y) != 0) {
        const auto p = palette_color(e.labels->at(x, y));
        for (int k = 0; k < 3; ++k) c[k] = 0.5 * c[k] + 0.5 * p[k];
      }
      if (e.mask && e.mask->test(x, y)) {
        const bool edge = (x == 0 || !e.mask->test(x - 1, y)) || (x == w - 1 || !e.mask->test(x + 1, y)) ||
                          (y == 0 || !e.mask->test(x, y - 1)) || (y == h - 1 || !e.mask->test(x, y + 1));
        if (edge) c = {255.0, 0.0, 255.0};
      }
      for (int k = 0; k < 3; ++k) rgb[i * 3 + k] = static_cast<std::uint8_t>(std::lround(c[k]));
    }
  }
  return encode_rgb(w, h, rgb);
}

}  // namespace

void emit_gallery(const std::vector<GalleryEntry>& entries, const std::filesystem::path& out_dir) {
  if (entries.empty()) throw InvalidArgument("gallery needs at least one entry");
  for (const auto& e : entries) {
    if (e.mask && !e.mask->same_shape(e.image.field())) throw InvalidArgument("mask and image differ in size");
    if (e.labels && (e.labels->width() != e.image.width() || e.labels->height() != e.image.height())) {
      throw InvalidArgument("labels and image differ in size");
    }
  }
  std::filesystem::create_directories(out_dir);
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>gallery</title>\n"
       << "<style>body{font-family:sans-serif}table{border-collapse:collapse}"
       << "td,th{border:1px solid #999;padding:4px}img{max-width:320px}</style></head><body>\n"
       << "<table>\n<tr><th>entry</th><th>overlay</th><th>accuracy</th><th>precision</th>"
       << "<th>recall</th><th>F1</th><th>good</th></tr>\n";
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%04zu_", k);
    const std::string file = prefix + safe_name(e.name) + ".png";
    write_file(out_dir / file, overlay(e));
    html << "<tr><td>" << html_escape(e.name) << "</td><td><img src=\"" << file << "\"></td>";
    if (e.report) {
      html << "<td>" << fmt_metric(e.report->accuracy) << "</td><td>" << fmt_metric(e.report->precision)
           << "</td><td>" << fmt_metric(e.report->recall) << "</td><td>" << fmt_metric(e.report->f1) << "</td><td>"
           << (e.report->good() ? "yes" : "no") << "</td>";
    } else {
      html << "<td></td><td></td><td></td><td></td><td></td>";
    }
    html << "</tr>\n";
  }
  html << "</table>\n</body></html>\n";
  const std::string s = html.str();
  write_file(out_dir / "index.html", std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace himforge
