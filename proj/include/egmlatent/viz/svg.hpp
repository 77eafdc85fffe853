#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace egmlatent::viz {

std::string xml_escape(std::string_view text);

/// Minimal SVG 1.1 writer. Coordinates are in user units, y pointing down.
class SvgDocument {
 public:
  SvgDocument(double width, double height);

  double width() const noexcept { return width_; }
  double height() const noexcept { return height_; }

  void metadata(const nlohmann::json& j);
  void rect(double x, double y, double w, double h, std::string_view fill, double opacity = 1.0,
            std::string_view css_class = {});
  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0,
            std::string_view dash = {});
  void polyline(const std::vector<std::pair<double, double>>& points, std::string_view stroke, double width = 1.0,
                std::string_view dash = {}, std::string_view css_class = {});
  void circle(double cx, double cy, double r, std::string_view fill, double opacity = 1.0);
  void text(double x, double y, std::string_view content, double size = 12.0, std::string_view anchor = "start");

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  double width_, height_;
  std::string metadata_;
  std::ostringstream body_;
};

/// Maps a data interval onto a pixel interval (flipped when out_lo > out_hi).
struct LinearScale {
  double in_lo, in_hi, out_lo, out_hi;
  double operator()(double v) const;
};

}  // namespace egmlatent::viz
