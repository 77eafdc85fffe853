#include "egmlatent/viz/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "egmlatent/core/error.hpp"
#include "egmlatent/data/corpus_io.hpp"
#include "egmlatent/viz/svg.hpp"

namespace egmlatent::viz {

namespace {

constexpr double kMargin = 50.0;

std::string fmt(const char* spec, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

fs::path with_suffix(const fs::path& stem, const std::string& suffix) { return fs::path(stem.string() + suffix); }

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header, const nlohmann::json& provenance) : path_(path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    out_.open(path, std::ios::binary);
    if (!provenance.empty()) out_ << "# provenance " << provenance.dump() << '\n';
    out_ << header << '\n';
  }
  std::ofstream& row() { return out_; }
  ~CsvWriter() noexcept(false) {
    out_.close();
    if (!out_) throw Error(ErrorKind::Io, "cannot write " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

SvgDocument make_svg(double w, double h, const nlohmann::json& provenance) {
  SvgDocument svg(w, h);
  if (!provenance.empty()) svg.metadata(provenance);
  return svg;
}

void axes(SvgDocument& svg, const LinearScale& sx, const LinearScale& sy, const std::string& xlabel,
          const std::string& ylabel) {
  svg.line(sx.out_lo, sy.out_lo, sx.out_hi, sy.out_lo, "black");
  svg.line(sx.out_lo, sy.out_lo, sx.out_lo, sy.out_hi, "black");
  for (int t = 0; t <= 4; ++t) {
    const double fx = sx.in_lo + (sx.in_hi - sx.in_lo) * t / 4.0;
    const double fy = sy.in_lo + (sy.in_hi - sy.in_lo) * t / 4.0;
    svg.text(sx(fx), sy.out_lo + 15, fmt("%.3g", fx), 10, "middle");
    svg.text(sx.out_lo - 5, sy(fy) + 3, fmt("%.3g", fy), 10, "end");
  }
  svg.text(0.5 * (sx.out_lo + sx.out_hi), sy.out_lo + 32, xlabel, 12, "middle");
  svg.text(10, sy.out_hi - 10, ylabel, 12, "start");
}

std::pair<float, float> value_range(const Tensor& t) {
  float lo = 0.0f, hi = 0.0f;
  for (float v : t.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0f;
  return {lo, hi};
}

}  // namespace

void render_overlay(const fs::path& stem, const Tensor& original, const Tensor& reconstruction,
                    const nlohmann::json& provenance) {
  if (original.shape() != reconstruction.shape() || original.rank() != 2) {
    throw Error(ErrorKind::Dimension, "render_overlay needs two C x T tensors of equal shape, got " +
                                          shape_string(original.shape()) + " and " +
                                          shape_string(reconstruction.shape()));
  }
  const std::size_t c = original.dim(0), t = original.dim(1);
  const double lane = 40.0, width = 900.0;
  SvgDocument svg = make_svg(width, 2 * kMargin + lane * double(c), provenance);
  svg.text(kMargin, 25, "original (solid) vs reconstruction (dashed)", 14);
  float lo = -1.0f, hi = 1.0f;
  for (const Tensor* tsr : {&original, &reconstruction}) {
    auto [a, b] = value_range(*tsr);
    lo = std::min(lo, a);
    hi = std::max(hi, b);
  }
  const LinearScale sx{0.0, double(t - 1), kMargin, width - 20.0};
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double top = kMargin + lane * double(ch);
    const LinearScale sy{lo, hi, top + lane - 4.0, top + 4.0};
    std::vector<std::pair<double, double>> orig, rec;
    for (std::size_t k = 0; k < t; ++k) {
      orig.emplace_back(sx(double(k)), sy(original[ch * t + k]));
      rec.emplace_back(sx(double(k)), sy(reconstruction[ch * t + k]));
    }
    svg.text(kMargin - 5, top + lane / 2 + 3, std::to_string(ch + 1), 9, "end");
    svg.polyline(orig, "#1f4fd1", 1.0, {}, "original");
    svg.polyline(rec, "#d62728", 1.0, "4,2", "reconstruction");
  }
  svg.save(with_suffix(stem, ".svg"));

  CsvWriter csv(with_suffix(stem, ".csv"), "channel,time_index,original,reconstructed", provenance);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t k = 0; k < t; ++k) {
      csv.row() << ch << ',' << k << ',' << fmt("%.9g", original[ch * t + k]) << ','
                << fmt("%.9g", reconstruction[ch * t + k]) << '\n';
    }
}

std::vector<AnnotationWindow> render_annotations(const fs::path& stem, const Tensor& signal,
                                                 std::span<const double> probabilities, double threshold,
                                                 std::size_t window, const nlohmann::json& provenance) {
  if (signal.rank() != 2 || window == 0) throw Error(ErrorKind::Dimension, "render_annotations expects C x T");
  const std::size_t c = signal.dim(0), t = signal.dim(1);
  if (probabilities.size() != t / window) {
    throw Error(ErrorKind::Dimension, std::to_string(t / window) + " windows but " +
                                          std::to_string(probabilities.size()) + " probabilities");
  }
  std::vector<AnnotationWindow> windows;
  for (std::size_t w = 0; w < probabilities.size(); ++w) {
    windows.push_back({w, w * window, (w + 1) * window, probabilities[w], probabilities[w] >= threshold});
  }

  const double lane = 30.0, width = 1200.0;
  SvgDocument svg = make_svg(width, 2 * kMargin + lane * double(c), provenance);
  const LinearScale sx{0.0, double(t), kMargin, width - 20.0};
  for (const auto& w : windows) {
    if (!w.flagged) continue;
    svg.rect(sx(double(w.start_sample)), kMargin, sx(double(w.end_sample)) - sx(double(w.start_sample)),
             lane * double(c), "#d62728", 0.25, "flagged");
  }
  auto [lo, hi] = value_range(signal);
  // Long recordings are decimated to at most ~2 points per pixel column.
  const std::size_t step = std::max<std::size_t>(1, t / 2400);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double top = kMargin + lane * double(ch);
    const LinearScale sy{lo, hi, top + lane - 2.0, top + 2.0};
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < t; k += step) pts.emplace_back(sx(double(k)), sy(signal[ch * t + k]));
    svg.polyline(pts, "#222222", 0.6);
  }
  svg.text(kMargin, 25, "windows with probability >= " + fmt("%.3g", threshold) + " shaded", 14);
  svg.save(with_suffix(stem, ".svg"));

  nlohmann::json list = nlohmann::json::array();
  for (const auto& w : windows) {
    list.push_back({{"window_index", w.window_index},
                    {"start_sample", w.start_sample},
                    {"end_sample", w.end_sample},
                    {"probability", w.probability},
                    {"flagged", w.flagged}});
  }
  nlohmann::json j = {{"threshold", threshold}, {"window", window}, {"windows", list}};
  if (!provenance.empty()) j["provenance"] = provenance;
  data::write_json(with_suffix(stem, ".json"), j);
  return windows;
}

void render_loss_curve(const fs::path& stem, const std::vector<cae::EpochReport>& history,
                       const nlohmann::json& provenance) {
  SvgDocument svg = make_svg(700, 450, provenance);
  double hi = 0.0;
  for (const auto& e : history) hi = std::max({hi, e.train_loss, e.val_loss});
  if (hi == 0.0) hi = 1.0;
  const LinearScale sx{1.0, double(std::max<std::size_t>(2, history.size())), kMargin + 20, 680};
  const LinearScale sy{0.0, hi, 400, 30};
  axes(svg, sx, sy, "epoch", "MSE");
  std::vector<std::pair<double, double>> tr, va;
  for (const auto& e : history) {
    tr.emplace_back(sx(double(e.epoch)), sy(e.train_loss));
    va.emplace_back(sx(double(e.epoch)), sy(e.val_loss));
  }
  svg.polyline(tr, "#1f4fd1", 1.5, {}, "train");
  svg.polyline(va, "#d62728", 1.5, "5,3", "validation");
  svg.text(560, 30, "train (solid)", 11);
  svg.text(560, 45, "validation (dashed)", 11);
  svg.save(with_suffix(stem, ".svg"));

  CsvWriter csv(with_suffix(stem, ".csv"), "epoch,train_loss,val_loss", provenance);
  for (const auto& e : history) csv.row() << e.epoch << ',' << fmt("%.17g", e.train_loss) << ',' << fmt("%.17g", e.val_loss) << '\n';
}

void render_roc(const fs::path& stem, const std::vector<RocSeries>& series, const nlohmann::json& provenance) {
  static const char* colors[] = {"#1f4fd1", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  SvgDocument svg = make_svg(500, 500, provenance);
  const LinearScale sx{0, 1, kMargin + 20, 480};
  const LinearScale sy{0, 1, 440, 30};
  axes(svg, sx, sy, "false positive rate", "true positive rate");
  svg.line(sx(0), sy(0), sx(1), sy(1), "#999999", 1.0, "3,3");
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : series[s].points) pts.emplace_back(sx(p.fpr), sy(p.tpr));
    const char* color = colors[s % 5];
    svg.polyline(pts, color, 1.5, {}, "roc");
    svg.text(sx(0.45), sy(0.25) + 15.0 * double(s), series[s].name + " AUC " + fmt("%.3f", series[s].auc), 11);
  }
  svg.save(with_suffix(stem, ".svg"));

  CsvWriter csv(with_suffix(stem, ".csv"), "series,threshold,fpr,tpr", provenance);
  for (const auto& s : series)
    for (const auto& p : s.points) {
      csv.row() << s.name << ',' << fmt("%.17g", p.threshold) << ',' << fmt("%.17g", p.fpr) << ','
                << fmt("%.17g", p.tpr) << '\n';
    }
}

void render_scatter(const fs::path& stem, const Tensor& coords, std::span<const std::uint8_t> labels,
                    const std::string& title, const nlohmann::json& provenance) {
  if (coords.rank() != 2 || coords.dim(1) != 2 || coords.dim(0) != labels.size()) {
    throw Error(ErrorKind::Dimension, "render_scatter expects N x 2 coordinates and N labels");
  }
  const std::size_t n = labels.size();
  double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    xlo = std::min<double>(xlo, coords[2 * i]);
    xhi = std::max<double>(xhi, coords[2 * i]);
    ylo = std::min<double>(ylo, coords[2 * i + 1]);
    yhi = std::max<double>(yhi, coords[2 * i + 1]);
  }
  SvgDocument svg = make_svg(600, 600, provenance);
  svg.text(300, 25, title, 14, "middle");
  const LinearScale sx{xlo, xhi, 30, 570};
  const LinearScale sy{ylo, yhi, 570, 40};
  for (std::size_t i = 0; i < n; ++i) {
    svg.circle(sx(coords[2 * i]), sy(coords[2 * i + 1]), 2.5, labels[i] ? "#d62728" : "#1f4fd1", 0.6);
  }
  svg.save(with_suffix(stem, ".svg"));

  CsvWriter csv(with_suffix(stem, ".csv"), "index,x,y,label", provenance);
  for (std::size_t i = 0; i < n; ++i) {
    csv.row() << i << ',' << fmt("%.9g", coords[2 * i]) << ',' << fmt("%.9g", coords[2 * i + 1]) << ','
              << int(labels[i]) << '\n';
  }
}

}  // namespace egmlatent::viz
