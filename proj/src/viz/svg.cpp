#include "egmlatent/viz/svg.hpp"

#include <cstdio>
#include <fstream>

#include "egmlatent/core/error.hpp"

namespace egmlatent::viz {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string style_attrs(std::string_view dash, std::string_view css_class) {
  std::string s;
  if (!dash.empty()) s += " stroke-dasharray=\"" + std::string(dash) + "\"";
  if (!css_class.empty()) s += " class=\"" + xml_escape(css_class) + "\"";
  return s;
}

}  // namespace

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

double LinearScale::operator()(double v) const {
  if (in_hi == in_lo) return 0.5 * (out_lo + out_hi);
  return out_lo + (v - in_lo) / (in_hi - in_lo) * (out_hi - out_lo);
}

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

void SvgDocument::metadata(const nlohmann::json& j) { metadata_ = j.dump(); }

void SvgDocument::rect(double x, double y, double w, double h, std::string_view fill, double opacity,
                       std::string_view css_class) {
  body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
        << "\" fill=\"" << fill << "\" fill-opacity=\"" << num(opacity) << "\"" << style_attrs({}, css_class)
        << "/>\n";
}

void SvgDocument::line(double x1, double y1, double x2, double y2, std::string_view stroke, double width,
                       std::string_view dash) {
  body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
        << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"" << style_attrs(dash, {})
        << "/>\n";
}

void SvgDocument::polyline(const std::vector<std::pair<double, double>>& points, std::string_view stroke,
                           double width, std::string_view dash, std::string_view css_class) {
  body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\""
        << style_attrs(dash, css_class) << " points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) body_ << ' ';
    body_ << num(points[i].first) << ',' << num(points[i].second);
  }
  body_ << "\"/>\n";
}

void SvgDocument::circle(double cx, double cy, double r, std::string_view fill, double opacity) {
  body_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\" fill=\"" << fill
        << "\" fill-opacity=\"" << num(opacity) << "\"/>\n";
}

void SvgDocument::text(double x, double y, std::string_view content, double size, std::string_view anchor) {
  body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << num(size)
        << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << xml_escape(content) << "</text>\n";
}

std::string SvgDocument::str() const {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width_) << "\" height=\""
      << num(height_) << "\" viewBox=\"0 0 " << num(width_) << ' ' << num(height_) << "\">\n";
  if (!metadata_.empty()) out << "<metadata>" << xml_escape(metadata_) << "</metadata>\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(width_) << "\" height=\"" << num(height_) << "\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
  return out.str();
}

void SvgDocument::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << str();
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

}  // namespace egmlatent::viz
