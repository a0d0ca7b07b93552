#include <catch_amalgamated.hpp>

#include <charconv>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "nhse/config.hpp"
#include "nhse/error.hpp"
#include "nhse/output.hpp"
#include "nhse/plot.hpp"
#include "nhse/table.hpp"

using namespace nhse;

namespace {

ConfigSchema small_schema() {
  return {{"model.r", ValueType::Real, 0.5, "hopping", Provenance::Paper, "hop strength"},
          {"model.N", ValueType::Int, 2LL, "cells", Provenance::Chosen, "hop reach"},
          {"model.reading", ValueType::Text, std::string("scale"), "", Provenance::Chosen, "reading"},
          {"geometry.L_y", ValueType::IntList, std::vector<long long>{2, 4}, "cells", Provenance::Chosen, "widths"},
          {"boundary.beta_y", ValueType::RealList, std::vector<double>{1.0, 0.0}, "1", Provenance::Paper, "betas"},
          {"output.plots", ValueType::Bool, true, "", Provenance::Chosen, "plots"}};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nhse_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config defaults, YAML and overrides", "[config]") {
  ExperimentConfig c("demo", small_schema());
  SECTION("defaults") {
    CHECK(c.real("model.r") == 0.5);
    CHECK(c.integer("model.N") == 2);
    CHECK(c.text("model.reading") == "scale");
    CHECK(c.integers("geometry.L_y") == std::vector<long long>{2, 4});
    CHECK(c.flag("output.plots"));
    CHECK_FALSE(c.overridden("model.r"));
    CHECK(c.has("model.r"));
    CHECK_FALSE(c.has("model.q"));
  }
  SECTION("YAML document") {
    c.load_yaml_text("experiment: demo\nmodel:\n  r: 0.75\n  N: 3\ngeometry:\n  L_y: [6, 8, 10]\n"
                     "boundary:\n  beta_y: [0.5]\noutput:\n  plots: false\n");
    CHECK(c.real("model.r") == 0.75);
    CHECK(c.integer("model.N") == 3);
    CHECK(c.integers("geometry.L_y") == std::vector<long long>{6, 8, 10});
    CHECK(c.reals("boundary.beta_y") == std::vector<double>{0.5});
    CHECK_FALSE(c.flag("output.plots"));
    CHECK(c.overridden("model.r"));
    CHECK_FALSE(c.overridden("model.reading"));
  }
  SECTION("integers are accepted where reals are expected") {
    c.load_yaml_text("model:\n  r: 1\n");
    CHECK(c.real("model.r") == 1.0);
  }
  SECTION("rejections") {
    CHECK_THROWS_AS(c.load_yaml_text("model:\n  q: 1\n"), InvalidArgument);
    CHECK_THROWS_AS(c.load_yaml_text("physics:\n  r: 1\n"), InvalidArgument);
    CHECK_THROWS_AS(c.load_yaml_text("experiment: other\n"), InvalidArgument);
    CHECK_THROWS_AS(c.load_yaml_text("model:\n  N: 2.5\n"), InvalidArgument);
    CHECK_THROWS_AS(c.load_yaml_text("model:\n  r: abc\n"), InvalidArgument);
    CHECK_THROWS_AS(c.load_yaml_text("model: [1, 2]\n"), InvalidArgument);
    CHECK_THROWS_AS(c.load_yaml_text("model:\n  r: [1, 2]\n"), InvalidArgument);
    CHECK_THROWS_AS(c.load_yaml_text("output:\n  plots: maybe\n"), InvalidArgument);
    CHECK_THROWS_AS(c.load_yaml_text("model: {r: 1\n"), InvalidArgument);
    CHECK_THROWS_AS(c.load_yaml_file("/nonexistent/config.yaml"), InvalidArgument);
  }
  SECTION("overrides") {
    c.apply_override("model.N=5");
    c.apply_override("geometry.L_y=[3, 5]");
    c.apply_override("model.reading=replace");
    CHECK(c.integer("model.N") == 5);
    CHECK(c.integers("geometry.L_y") == std::vector<long long>{3, 5});
    CHECK(c.text("model.reading") == "replace");
    CHECK_THROWS_AS(c.apply_override("model.N"), InvalidArgument);
    CHECK_THROWS_AS(c.apply_override("model.zzz=1"), InvalidArgument);
    CHECK_THROWS_AS(c.apply_override("model.N=x"), InvalidArgument);
  }
  SECTION("JSON export carries units, provenance and overrides") {
    c.apply_override("model.N=7");
    const auto j = c.to_json();
    CHECK(j["experiment"] == "demo");
    CHECK(j["parameters"]["model.r"]["value"] == 0.5);
    CHECK(j["parameters"]["model.r"]["unit"] == "hopping");
    CHECK(j["parameters"]["model.r"]["source"] == "paper");
    CHECK(j["parameters"]["model.N"]["source"] == "chosen");
    CHECK(j["parameters"]["model.N"]["value"] == 7);
    CHECK(j["parameters"]["model.N"]["overridden"] == true);
    CHECK(j["parameters"]["geometry.L_y"]["value"].size() == 2);
  }
}

TEST_CASE("number formatting", "[table]") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");

  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 2000) {
    const std::uint64_t b = bits(rng);
    double x;
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    const std::string s = format_number(x);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == x);
    ++checked;
  }
}

TEST_CASE("CSV export", "[table]") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
  CHECK(format_cell(Cell(true)) == "true");
  CHECK(format_cell(Cell(42LL)) == "42");

  ResultTable t("demo", {{"name", ""}, {"E", "hopping"}, {"n", ""}, {"ok", ""}});
  SECTION("empty table is header only") { CHECK(t.to_csv() == "name,E[hopping],n,ok\n"); }
  SECTION("rows and views") {
    t.add_row({std::string("a,b"), 0.25, Cell(3LL), true});
    t.add_row({std::string("c"), -1.5, Cell(4LL), false});
    CHECK(t.to_csv() == "name,E[hopping],n,ok\n\"a,b\",0.25,3,true\nc,-1.5,4,false\n");
    CHECK(t.to_csv() == t.to_csv());
    CHECK(t.numbers("E") == std::vector<double>{0.25, -1.5});
    CHECK(t.numbers("ok") == std::vector<double>{1.0, 0.0});
    CHECK(t.texts("name") == std::vector<std::string>{"a,b", "c"});
    CHECK(std::get<long long>(t.at(1, "n")) == 4);
    CHECK_THROWS_AS(t.numbers("name"), InvalidArgument);
    CHECK_THROWS_AS(t.column_index("missing"), InvalidArgument);
    CHECK_THROWS_AS(t.add_row({1.0}), InvalidArgument);
  }
}

TEST_CASE("SHA-256", "[output]") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("experiment writer", "[output]") {
  ExperimentConfig config("demo", small_schema());
  config.apply_override("model.N=9");
  ExperimentOutput out;
  out.id = "demo";
  ResultTable t("values", {{"x", "cells"}, {"y", "1"}});
  t.add_row({1.0, 2.0});
  t.add_row({2.0, 4.5});
  out.tables = {t, ResultTable("empty", {{"a", ""}})};
  out.summary["note"] = "hello";

  SECTION("tables, plots and manifest") {
    out.plots = [] { return std::vector<PlotFile>{{"p.svg", "<svg/>"}}; };
    const auto dir = scratch_dir("writer");
    const WrittenFiles w = write_experiment(out, config, dir);
    CHECK(w.directory == dir / "demo");
    CHECK(slurp(dir / "demo" / "values.csv") == t.to_csv());
    CHECK(slurp(dir / "demo" / "empty.csv") == "a\n");
    CHECK(std::filesystem::exists(dir / "demo" / "plots" / "p.svg"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "demo" / "manifest.json"));
    CHECK(manifest["experiment"] == "demo");
    CHECK(manifest["config"]["model.N"]["value"] == 9);
    CHECK(manifest["summary"]["note"] == "hello");
    CHECK(manifest["reliable"] == true);
    CHECK(!manifest["code_version"].get<std::string>().empty());
    for (const auto& f : manifest["files"]) {
      const std::string body = slurp(dir / "demo" / f["path"].get<std::string>());
      CHECK(f["sha256"] == sha256_hex(body));
      CHECK(f["bytes"] == body.size());
    }
    CHECK(manifest["files"][0]["rows"] == 2);
    std::filesystem::remove_all(dir);
  }
  SECTION("plot failures are recorded, data still written") {
    out.plots = []() -> std::vector<PlotFile> { throw std::runtime_error("renderer broke"); };
    const auto dir = scratch_dir("writer_fail");
    const WrittenFiles w = write_experiment(out, config, dir);
    REQUIRE(w.plot_errors.size() == 1);
    CHECK(std::filesystem::exists(dir / "demo" / "values.csv"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "demo" / "manifest.json"));
    CHECK(manifest["plot_errors"].size() == 1);
    std::filesystem::remove_all(dir);
  }
  SECTION("plots can be skipped") {
    bool called = false;
    out.plots = [&called] {
      called = true;
      return std::vector<PlotFile>{};
    };
    const auto dir = scratch_dir("writer_noplot");
    write_experiment(out, config, dir, false);
    CHECK_FALSE(called);
    CHECK_FALSE(std::filesystem::exists(dir / "demo" / "plots"));
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("SVG rendering", "[plot]") {
  SECTION("palette") {
    CHECK(skin_color(0.0005, 1.0, 1e-3) == skin_color(-0.0005, 1.0, 1e-3));
    CHECK(skin_color(0.5, 1.0, 1e-3) != skin_color(-0.5, 1.0, 1e-3));
    CHECK(skin_color(0.5, 1.0, 1e-3) != skin_color(0.0, 1.0, 1e-3));
  }
  SECTION("spectrum panels") {
    SpectrumPanel p{"panel", {{0, 0, 0.1, false}, {1, 1, -0.1, true}, {2, -1, 0.0, false}}, {{{0, 0}, {1, 1}}}};
    const std::string svg = spectrum_svg("title", {p, p}, 1e-3, 2);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    std::size_t circles = 0;
    for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
    CHECK(circles == 6);
    CHECK_THROWS_AS(spectrum_svg("t", {p}, 1e-3, 0), InvalidArgument);
  }
  SECTION("degenerate data still renders") {
    SpectrumPanel empty{"empty", {}, {}};
    CHECK_NOTHROW(spectrum_svg("t", {empty}, 1e-3));
    LinePanel flat{"flat", "x", "y", {{"s", {1, 2, 3}, {5, 5, 5}, true}}, {2.0}};
    const std::string svg = line_svg("t", {flat});
    CHECK(svg.find("nan") == std::string::npos);
    LinePanel bad{"bad", "x", "y", {{"s", {1, 2}, {1}, true}}, {}};
    CHECK_THROWS_AS(line_svg("t", {bad}), InvalidArgument);
  }
  SECTION("text is escaped") {
    LinePanel p{"a<b & c", "x", "y", {}, {}};
    const std::string svg = line_svg("t", {p});
    CHECK(svg.find("a&lt;b &amp; c") != std::string::npos);
  }
}
