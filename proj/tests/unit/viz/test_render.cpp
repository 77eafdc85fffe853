#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "egmlatent/core/error.hpp"
#include "egmlatent/viz/render.hpp"
#include "egmlatent/viz/subsample.hpp"
#include "egmlatent/viz/svg.hpp"
#include "test_support.hpp"
#include "xml_check.hpp"

using namespace egmlatent;
using namespace egmlatent::viz;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

Tensor wave(std::size_t c, std::size_t t, double phase) {
  Tensor x(Shape{c, t});
  for (std::size_t i = 0; i < c * t; ++i) x[i] = float(0.8 * std::sin(0.05 * double(i) + phase));
  return x;
}

classify::EmbeddingSet labeled(std::size_t pos, std::size_t neg) {
  classify::EmbeddingSet s{Tensor(Shape{pos + neg, 2}), {}, {}};
  for (std::size_t i = 0; i < pos + neg; ++i) {
    s.labels.push_back(i < pos);
    s.patient_ids.push_back("p" + std::to_string(i));
    s.features[2 * i] = float(i);
  }
  return s;
}

}  // namespace

TEST_CASE("xml checker rejects broken documents") {
  CHECK(testing::xml_well_formed("<a><b x=\"1\"/>t&amp;</a>"));
  CHECK_FALSE(testing::xml_well_formed("<a><b></a>"));
  CHECK_FALSE(testing::xml_well_formed("<a x=1/>"));
  CHECK_FALSE(testing::xml_well_formed("<a>&nbsp;</a>"));
  CHECK_FALSE(testing::xml_well_formed("<a/><b/>"));
}

TEST_CASE("svg escaping keeps documents well formed") {
  SvgDocument svg(100, 50);
  svg.metadata({{"note", "a<b & \"c\""}});
  svg.text(1, 1, "x < y & z");
  std::string why;
  CHECK_MESSAGE(testing::xml_well_formed(svg.str(), &why), why);
}

TEST_CASE("overlay csv has one row per sample") {
  const auto dir = testing::scratch_dir("viz_overlay");
  const Tensor a = wave(15, 250, 0.0), b = wave(15, 250, 0.3);
  render_overlay(dir / "ov", a, b);
  const auto rows = lines(slurp(dir / "ov.csv"));
  REQUIRE(rows.size() == 1 + 15 * 250);
  CHECK(rows[0] == "channel,time_index,original,reconstructed");
  std::string why;
  const std::string svg = slurp(dir / "ov.svg");
  CHECK_MESSAGE(testing::xml_well_formed(svg, &why), why);
  CHECK(count(svg, "class=\"original\"") == 15);
  CHECK(count(svg, "class=\"reconstruction\"") == 15);
  CHECK(count(svg, "stroke-dasharray") == 15);
}

TEST_CASE("overlay of identical signals has zero difference") {
  const auto dir = testing::scratch_dir("viz_overlay_same");
  const Tensor a = wave(20, 250, 1.0);
  render_overlay(dir / "ov", a, a, {{"seed", 3}});
  const auto rows = lines(slurp(dir / "ov.csv"));
  REQUIRE(rows[0].rfind("# provenance ", 0) == 0);
  REQUIRE(rows.size() == 2 + 20 * 250);
  double worst = 0;
  for (std::size_t r = 2; r < rows.size(); ++r) {
    std::istringstream in(rows[r]);
    std::string f[4];
    for (auto& s : f) std::getline(in, s, ',');
    worst = std::max(worst, std::abs(std::stod(f[2]) - std::stod(f[3])));
  }
  CHECK(worst == 0.0);
  CHECK_THROWS_AS(render_overlay(dir / "bad", a, wave(20, 249, 0)), Error);
}

TEST_CASE("annotations shade exactly the flagged windows") {
  const auto dir = testing::scratch_dir("viz_annot");
  const Tensor sig = wave(15, 30 * 250, 0.0);
  std::vector<double> probs(30, 0.0);
  auto w = render_annotations(dir / "none", sig, probs, 0.5);
  CHECK(count(slurp(dir / "none.svg"), "class=\"flagged\"") == 0);

  probs[3] = 1.0;
  w = render_annotations(dir / "one", sig, probs, 0.5);
  const std::string svg = slurp(dir / "one.svg");
  std::string why;
  CHECK_MESSAGE(testing::xml_well_formed(svg, &why), why);
  CHECK(count(svg, "class=\"flagged\"") == 1);
  const auto j = nlohmann::json::parse(slurp(dir / "one.json"));
  std::size_t flagged = 0;
  for (const auto& e : j.at("windows")) {
    if (!e.at("flagged").get<bool>()) continue;
    ++flagged;
    CHECK(e.at("window_index") == 3);
    CHECK(e.at("start_sample") == 750);
    CHECK(e.at("end_sample") == 1000);
  }
  CHECK(flagged == 1);

  for (std::size_t i = 0; i < 30; ++i) probs[i] = double(i) / 29.0;
  w = render_annotations(dir / "ramp", sig, probs, 0.5);
  std::size_t n = 0;
  for (const auto& a : w) n += a.flagged;
  CHECK(n == 15);
  CHECK(count(slurp(dir / "ramp.svg"), "class=\"flagged\"") == n);
  w = render_annotations(dir / "high", sig, probs, 1.01);
  for (const auto& a : w) CHECK_FALSE(a.flagged);
  CHECK_THROWS_AS(render_annotations(dir / "bad", sig, std::vector<double>(29, 0.0), 0.5), Error);
}

TEST_CASE("loss curve and roc renderings are well formed") {
  const auto dir = testing::scratch_dir("viz_curves");
  std::vector<cae::EpochReport> h{{1, 0.5, 0.6}, {2, 0.3, 0.4}, {3, 0.2, 0.35}};
  render_loss_curve(dir / "loss", h);
  CHECK(lines(slurp(dir / "loss.csv")).size() == 4);
  std::vector<RocSeries> s{{"knn", {{2, 0, 0}, {0.5, 0.2, 0.8}, {0.1, 1, 1}}, 0.8}};
  render_roc(dir / "roc", s, {{"seed", 1}});
  std::string why;
  CHECK_MESSAGE(testing::xml_well_formed(slurp(dir / "loss.svg"), &why), why);
  CHECK_MESSAGE(testing::xml_well_formed(slurp(dir / "roc.svg"), &why), why);
  CHECK(slurp(dir / "roc.svg").find("<metadata>") != std::string::npos);
  Tensor c(Shape{3, 2});
  const std::vector<std::uint8_t> l{0, 1, 1};
  render_scatter(dir / "sc", c, l, "title <x>");
  CHECK_MESSAGE(testing::xml_well_formed(slurp(dir / "sc.svg"), &why), why);
}

TEST_CASE("balanced subsample sizes and shortfall") {
  const auto big = labeled(10000, 10000);
  const auto s = subsample_balanced(big, 500, 1);
  CHECK(s.set.size() == 1000);
  CHECK(s.set.positives() == 500);
  CHECK(s.warnings.empty());
  CHECK(std::is_sorted(s.rows.begin(), s.rows.end()));
  CHECK(subsample_balanced(big, 500, 1).rows == s.rows);
  CHECK(subsample_balanced(big, 500, 2).rows != s.rows);

  const auto small = labeled(300, 2000);
  const auto t = subsample_balanced(small, 500, 1);
  CHECK(t.set.positives() == 300);
  CHECK(t.set.size() == 800);
  REQUIRE(t.warnings.size() == 1);
}
