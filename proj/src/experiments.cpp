#include "nhse/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nhse/error.hpp"
#include "nhse/parallel.hpp"
#include "nhse/plot.hpp"

namespace nhse {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

using Json = nlohmann::ordered_json;

// ---- schema helpers ----

ConfigEntry real_entry(std::string key, double v, std::string unit, Provenance p, std::string doc) {
  return {std::move(key), ValueType::Real, v, std::move(unit), p, std::move(doc)};
}
ConfigEntry int_entry(std::string key, long long v, std::string unit, Provenance p, std::string doc) {
  return {std::move(key), ValueType::Int, v, std::move(unit), p, std::move(doc)};
}
ConfigEntry text_entry(std::string key, std::string v, Provenance p, std::string doc) {
  return {std::move(key), ValueType::Text, std::move(v), "", p, std::move(doc)};
}
ConfigEntry bool_entry(std::string key, bool v, std::string doc) {
  return {std::move(key), ValueType::Bool, v, "", Provenance::Chosen, std::move(doc)};
}
ConfigEntry reals_entry(std::string key, std::vector<double> v, std::string unit, Provenance p,
                        std::string doc) {
  return {std::move(key), ValueType::RealList, std::move(v), std::move(unit), p, std::move(doc)};
}
ConfigEntry ints_entry(std::string key, std::vector<long long> v, std::string unit, Provenance p,
                       std::string doc) {
  return {std::move(key), ValueType::IntList, std::move(v), std::move(unit), p, std::move(doc)};
}

constexpr auto P = Provenance::Paper;
constexpr auto C = Provenance::Chosen;

void add_common(ConfigSchema& s) {
  s.push_back(real_entry("analysis.tau", kDefaultTau, "1", C, "x-IPR band classified as bulk"));
  s.push_back(text_entry("output.dir", "results", C, "output root directory"));
  s.push_back(bool_entry("output.plots", true, "write SVG plots"));
  s.push_back(int_entry("output.workers", 0, "threads", C, "parallel workers (0 = automatic)"));
  s.push_back(int_entry("output.seed", 0, "", C, "reserved; every experiment is deterministic"));
}

void add_kagome(ConfigSchema& s, double u_y, double v_y, Provenance py, Provenance ptc) {
  s.push_back(real_entry("model.u_x", 1.1, "hopping", P, "x hopping amplifying toward +x"));
  s.push_back(real_entry("model.v_x", 1.0 / 1.1, "hopping", P, "reverse x hopping"));
  s.push_back(real_entry("model.u_y", u_y, "hopping", py, "y-type coupling u_y"));
  s.push_back(real_entry("model.v_y", v_y, "hopping", py, "y-type coupling v_y"));
  s.push_back(real_entry("model.t_c", 0.5, "1", ptc, "third-orbital coupling scale"));
  s.push_back(text_entry("model.t_c_reading", "scale", C, "how t_c enters: scale or replace"));
}

std::vector<double> r_grid() {
  std::vector<double> r;
  for (int i = 1; i <= 10; ++i) r.push_back(i / 5.0);
  return r;
}

std::vector<long long> ly_grid() {
  std::vector<long long> ly;
  for (long long v = 2; v <= 40; v += 2) ly.push_back(v);
  return ly;
}

std::vector<double> beta_y_sweep() {
  return {1.0, 1e-1, 1e-2, 1e-3, 5e-4, 2e-4, 1e-4, 1e-5, 1e-6, 0.0};
}

// ---- shared numerics ----

struct Reliability {
  bool reliable = true;
  std::vector<std::string> points;
  void note(const std::string& label, const EigenSystem& es) {
    if (es.reliable) return;
    reliable = false;
    points.push_back(label + " (max residual " + format_number(es.max_residual) + ")");
  }
};

struct Spectrum {
  EigenSystem es;
  SkinReport report;
};

// Eigenvectors are dropped after classification unless asked for; a 2880-site
// sweep would otherwise hold several GB.
Spectrum solve(const HoppingModel& model, const Geometry& geom, const BoundarySpec& bc, double tau,
               bool keep_vectors = false) {
  Spectrum s{eigendecompose(real_space_matrix(model, geom, bc), geom), {}};
  s.report = classify_modes(s.es, tau);
  if (!keep_vectors) s.es.vectors.resize(0, 0);
  return s;
}

std::vector<Column> with_mode_columns(std::vector<Column> prefix) {
  const std::vector<Column> mode{{"index", ""},       {"re_E", "hopping"}, {"im_E", "hopping"},
                                 {"x_ipr", "1"},      {"x_center", "cells"}, {"label", ""},
                                 {"residual", "1"},   {"unreliable", ""}};
  prefix.insert(prefix.end(), mode.begin(), mode.end());
  return prefix;
}

void add_mode_rows(ResultTable& table, const std::vector<Cell>& prefix, const Spectrum& s) {
  for (std::size_t i = 0; i < s.es.size(); ++i) {
    std::vector<Cell> row = prefix;
    const cplx e = s.es.eigenvalues(static_cast<Eigen::Index>(i));
    row.insert(row.end(), {Cell(static_cast<long long>(i)), e.real(), e.imag(), s.report.x_ipr[i],
                           s.report.x_center[i], to_string(s.report.labels[i]),
                           s.es.residuals(static_cast<Eigen::Index>(i)), !s.es.reliable});
    table.add_row(std::move(row));
  }
}

std::vector<Column> with_loop_columns(std::vector<Column> prefix) {
  const std::vector<Column> loop{{"branch", ""}, {"k_x", "rad"}, {"re_E", "hopping"}, {"im_E", "hopping"}};
  prefix.insert(prefix.end(), loop.begin(), loop.end());
  return prefix;
}

void add_loop_rows(ResultTable& table, const std::vector<Cell>& prefix, const SpectralLoop& loop) {
  for (std::size_t b = 0; b < loop.branches(); ++b) {
    for (std::size_t j = 0; j < loop.k_samples.size(); ++j) {
      std::vector<Cell> row = prefix;
      const cplx e = loop.branch_energies[j][b];
      row.insert(row.end(), {Cell(static_cast<long long>(b)), loop.k_samples[j], e.real(), e.imag()});
      table.add_row(std::move(row));
    }
  }
}

std::vector<std::vector<std::pair<double, double>>> loop_polylines(const SpectralLoop& loop) {
  std::vector<std::vector<std::pair<double, double>>> lines(loop.branches());
  for (std::size_t b = 0; b < loop.branches(); ++b) {
    for (const auto& sample : loop.branch_energies) lines[b].emplace_back(sample[b].real(), sample[b].imag());
  }
  return lines;
}

std::vector<SpectrumPoint> spectrum_points(const Spectrum& s, bool thin = false) {
  std::vector<SpectrumPoint> pts;
  for (std::size_t i = 0; i < s.es.size(); ++i) {
    const cplx e = s.es.eigenvalues(static_cast<Eigen::Index>(i));
    pts.push_back({e.real(), e.imag(), s.report.x_ipr[i], thin});
  }
  return pts;
}

CouplingReading reading_of(const ExperimentConfig& c) {
  return parse_coupling_reading(c.text("model.t_c_reading"));
}

HoppingModel kagome_from(const ExperimentConfig& c) {
  return kagome_model({c.real("model.u_x"), c.real("model.v_x"), c.real("model.u_y"),
                       c.real("model.v_y"), c.real("model.t_c"), reading_of(c)});
}

int positive_int(const ExperimentConfig& c, const std::string& key) {
  const long long v = c.integer(key);
  if (v < 1 || v > 100000) throw InvalidArgument("'" + key + "' must be a positive integer");
  return static_cast<int>(v);
}

int as_int(long long v, const std::string& what) {
  if (v < 0 || v > 100000) throw InvalidArgument(what + " out of range: " + std::to_string(v));
  return static_cast<int>(v);
}

unsigned workers_of(const ExperimentConfig& c) { return resolve_workers(c.integer("output.workers")); }

std::string label_name(double v, const std::string& prefix) { return prefix + "=" + format_number(v); }

double max_or_nan(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return *std::max_element(v.begin(), v.end());
}

Json maybe(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// ---- fig1 ----

ConfigSchema fig1_schema() {
  ConfigSchema s;
  s.push_back(reals_entry("model.r", r_grid(), "hopping", C, "long-range hop strengths r"));
  s.push_back(ints_entry("model.N", {1, 2, 3, 4}, "cells", C, "long-range hop distances N"));
  s.push_back(int_entry("geometry.L_x", 60, "cells", C, "chain length"));
  s.push_back(int_entry("analysis.loop_resolution", 512, "samples", C, "PBC loop k samples"));
  add_common(s);
  return s;
}

// ---- fig2 ----

ConfigSchema fig2_schema() {
  ConfigSchema s;
  s.push_back(reals_entry("model.t_0", {0.1, 0.3, 0.5, 1.0}, "hopping", C, "transverse hoppings t_0"));
  s.push_back(real_entry("model.r", 0.5, "hopping", C, "diagonal hop strength r"));
  s.push_back(int_entry("model.N", 3, "cells", P, "diagonal hop x reach N"));
  s.push_back(real_entry("model.kappa_x", 0.013, "1/cells", P, "benchmark skin inverse depth"));
  s.push_back(real_entry("model.benchmark_t_0", 0.1, "hopping", P, "benchmark transverse hopping"));
  s.push_back(int_entry("geometry.L_x", 60, "cells", C, "lattice length"));
  s.push_back(ints_entry("geometry.L_y", ly_grid(), "cells", C, "transverse sizes (2..40)"));
  s.push_back(ints_entry("geometry.spectrum_L_y", {2, 10}, "cells", C,
                         "L_y values whose full spectra and loops are exported"));
  s.push_back(int_entry("analysis.loop_resolution", 256, "samples", C, "loop k samples"));
  add_common(s);
  return s;
}

// ---- fig3 ----

ConfigSchema fig3_schema() {
  ConfigSchema s;
  s.push_back(real_entry("model.u_x", 1.1, "hopping", P, "x hopping amplifying toward +x"));
  s.push_back(real_entry("model.v_x", 1.0 / 1.1, "hopping", P, "reverse x hopping"));
  s.push_back(real_entry("model.u_y", 1.0, "hopping", C, "third-orbital coupling u_y"));
  s.push_back(real_entry("model.v_y", 1.0, "hopping", C, "third-orbital coupling v_y"));
  s.push_back(real_entry("model.t_c_a", 0.8, "1", P, "t_c of the static panel"));
  s.push_back(real_entry("model.gamma_a", 0.0, "hopping", P, "loss gamma of the static panel"));
  s.push_back(real_entry("model.t_c_b", 0.5, "1", P, "t_c of the amplified panel"));
  s.push_back(real_entry("model.gamma_b", 0.0005, "hopping", P, "loss gamma of the amplified panel"));
  s.push_back(text_entry("model.t_c_reading", "sweep", C, "scale, replace, or sweep (try both)"));
  s.push_back(int_entry("geometry.L_x_a", 100, "cells", P, "chain length, static panel"));
  s.push_back(int_entry("geometry.L_x_b", 20, "cells", P, "chain length, amplified panel"));
  s.push_back(real_entry("dynamics.x0", 7.0, "cells", P, "initial packet cell"));
  s.push_back(text_entry("dynamics.packet", "delta", C, "packet shape: delta or gaussian"));
  s.push_back(real_entry("dynamics.sigma", 1.0, "cells", C, "Gaussian packet width"));
  s.push_back(real_entry("dynamics.dt", 0.01, "1/hopping", C, "integrator step"));
  s.push_back(real_entry("dynamics.T", 600.0, "1/hopping", C, "evolution time"));
  s.push_back(int_entry("dynamics.record_stride", 10, "steps", C, "trajectory export stride"));
  s.push_back(int_entry("analysis.loop_resolution", 512, "samples", C, "PBC loop k samples"));
  add_common(s);
  return s;
}

// ---- fig4 / appB ----

ConfigSchema beta_sweep_schema() {
  ConfigSchema s;
  add_kagome(s, 3.0, 1.0 / 3.0, P, P);
  s.push_back(int_entry("geometry.L_x", 120, "cells", P, "lattice length"));
  s.push_back(int_entry("geometry.L_y", 8, "cells", P, "lattice width"));
  s.push_back(reals_entry("boundary.beta_y", beta_y_sweep(), "1", C, "y boundary factors swept"));
  s.push_back(reals_entry("boundary.beta_x", {0.0, 0.2}, "1", P, "x boundary layers (OBC, reference)"));
  s.push_back(real_entry("analysis.tau_imag", 1e-6, "hopping", C, "|Im E| counted as real line"));
  add_common(s);
  return s;
}

// ---- fig5 ----

ConfigSchema fig5_schema() {
  ConfigSchema s;
  add_kagome(s, 2.0, 0.5, P, C);
  s.push_back(int_entry("geometry.L_x", 120, "cells", C, "lattice length"));
  s.push_back(int_entry("geometry.L_y", 8, "cells", C, "lattice width"));
  s.push_back(real_entry("boundary.beta_x", 0.0, "1", P, "x boundary factor"));
  s.push_back(real_entry("boundary.beta_y_periodic", 1.0, "1", P, "y factor of the periodic run"));
  s.push_back(real_entry("boundary.beta_y_open", 0.0, "1", P, "y factor of the open run"));
  s.push_back(real_entry("dynamics.x0", 0.0, "cells", C, "packet cell x (0 = middle)"));
  s.push_back(real_entry("dynamics.y0", 0.0, "cells", C, "packet cell y (0 = middle)"));
  s.push_back(text_entry("dynamics.packet", "delta", C, "packet shape: delta or gaussian"));
  s.push_back(real_entry("dynamics.sigma", 1.0, "cells", C, "Gaussian packet width"));
  s.push_back(real_entry("dynamics.dt", 0.01, "1/hopping", C, "integrator step"));
  s.push_back(real_entry("dynamics.T", 100.0, "1/hopping", C, "evolution time"));
  s.push_back(reals_entry("dynamics.snapshot_times", {}, "1/hopping", C,
                          "density snapshots (empty = 0, 2, three log-spaced to T)"));
  s.push_back(int_entry("dynamics.record_stride", 10, "steps", C, "trajectory export stride"));
  s.push_back(real_entry("analysis.divergence_threshold", 0.1, "cells", C,
                         "|x_cm difference| marking divergence"));
  s.push_back(bool_entry("analysis.spectra", true, "also export both full spectra"));
  add_common(s);
  return s;
}

// ---- appA ----

ConfigSchema appA_schema() {
  ConfigSchema s;
  s.push_back(reals_entry("model.t_0", {0.1, 0.5, 1.0}, "hopping", C, "transverse hoppings t_0"));
  s.push_back(real_entry("model.r", 0.5, "hopping", C, "diagonal hop strength r"));
  s.push_back(int_entry("model.N", 3, "cells", P, "diagonal hop x reach N"));
  s.push_back(int_entry("geometry.L_x", 150, "cells", P, "lattice length"));
  s.push_back(ints_entry("geometry.L_y", {2, 3, 4, 10}, "cells", P, "transverse sizes"));
  add_common(s);
  return s;
}

// ---- appC ----

ConfigSchema appC_schema() {
  ConfigSchema s;
  add_kagome(s, 3.0, 1.0 / 3.0, P, P);
  s.push_back(ints_entry("geometry.L_x", {160, 80, 40, 10}, "cells", P, "lengths, paired with L_y"));
  s.push_back(ints_entry("geometry.L_y", {10, 20, 40, 160}, "cells", P, "widths, paired with L_x"));
  s.push_back(int_entry("analysis.loop_resolution", 128, "samples", C, "k_x samples per k_y loop"));
  add_common(s);
  return s;
}

// ---- appD ----

ConfigSchema appD_schema(bool path_a) {
  ConfigSchema s;
  add_kagome(s, 3.0, 1.0 / 3.0, P, P);
  s.push_back(int_entry("geometry.L_x", 120, "cells", P, "lattice length"));
  s.push_back(int_entry("geometry.L_y", 8, "cells", P, "lattice width"));
  if (path_a) {
    s.push_back(real_entry("boundary.beta_x", 0.2, "1", P, "fixed x boundary factor"));
  } else {
    s.push_back(real_entry("boundary.beta_y", 0.0, "1", P, "fixed y boundary factor"));
  }
  s.push_back(reals_entry("boundary.sweep", default_path_sweep(), "1", C,
                          path_a ? "beta_y values, in order" : "beta_x values, in order"));
  add_common(s);
  return s;
}

// ==== runners ====

ExperimentOutput make_output(const ExperimentConfig& c) {
  ExperimentOutput out;
  out.id = c.id();
  return out;
}

void finish(ExperimentOutput& out, const Reliability& rel) {
  out.reliable = rel.reliable;
  out.unreliable_points = rel.points;
  out.summary["reliable"] = rel.reliable;
}

}  // namespace

std::vector<double> default_path_sweep() {
  std::vector<double> v{1.0};
  for (int i = 0; i < 8; ++i) v.push_back(std::pow(10.0, -1.0 - 5.0 * i / 7.0));
  v.push_back(0.0);
  return v;
}

std::vector<double> default_snapshot_times(double T) {
  std::vector<double> t{0.0};
  if (T < 2.0) {
    t.push_back(T);
    return t;
  }
  t.push_back(2.0);
  for (int i = 1; i <= 3; ++i) t.push_back(i == 3 ? T : 2.0 * std::pow(T / 2.0, i / 3.0));
  return t;
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"fig1", "fig2", "fig3", "fig4", "fig5",
                                            "appA", "appB", "appC", "appD_pathA", "appD_pathB"};
  return ids;
}

bool is_experiment(const std::string& id) {
  const auto& ids = experiment_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

ConfigSchema experiment_schema(const std::string& id) {
  if (id == "fig1") return fig1_schema();
  if (id == "fig2") return fig2_schema();
  if (id == "fig3") return fig3_schema();
  if (id == "fig4" || id == "appB") return beta_sweep_schema();
  if (id == "fig5") return fig5_schema();
  if (id == "appA") return appA_schema();
  if (id == "appC") return appC_schema();
  if (id == "appD_pathA") return appD_schema(true);
  if (id == "appD_pathB") return appD_schema(false);
  throw InvalidArgument("unknown experiment '" + id + "'");
}

ExperimentConfig default_config(const std::string& id) { return {id, experiment_schema(id)}; }

ExperimentOutput run_experiment(const ExperimentConfig& c) {
  const std::string& id = c.id();
  if (id == "fig1") return run_fig1(c);
  if (id == "fig2") return run_fig2(c);
  if (id == "fig3") return run_fig3(c);
  if (id == "fig4") return run_fig4(c);
  if (id == "fig5") return run_fig5(c);
  if (id == "appA") return run_appA(c);
  if (id == "appB") return run_appB(c);
  if (id == "appC") return run_appC(c);
  if (id == "appD_pathA" || id == "appD_pathB") return run_appD(c);
  throw InvalidArgument("unknown experiment '" + id + "'");
}

// ---------------------------------------------------------------- fig1

ExperimentOutput run_fig1(const ExperimentConfig& c) {
  const auto& rs = c.reals("model.r");
  const auto& ns = c.integers("model.N");
  const int Lx = positive_int(c, "geometry.L_x");
  const double tau = c.real("analysis.tau");
  const int res = positive_int(c, "analysis.loop_resolution");

  struct Point {
    int N;
    double r;
  };
  std::vector<Point> points;
  for (long long n : ns) {
    for (double r : rs) points.push_back({as_int(n, "N"), r});
  }
  struct Result {
    Spectrum s;
    SpectralLoop loop;
  };
  const Geometry geom(Lx, 1, 1);
  auto results = parallel_map(points.size(), workers_of(c), [&](std::size_t i) {
    const HoppingModel model = one_band_model(points[i].r, points[i].N);
    return Result{solve(model, geom, BoundarySpec::open(), tau),
                  pbc_loop(model, geom, BoundarySpec(1.0, 0.0), res)};
  });

  ExperimentOutput out = make_output(c);
  Reliability rel;
  ResultTable summary("summary", {{"N", ""}, {"r", "hopping"}, {"mean_x_ipr", "1"}, {"n_left", "modes"},
                                  {"n_right", "modes"}, {"n_bulk", "modes"}, {"max_residual", "1"},
                                  {"unreliable", ""}});
  ResultTable modes("modes", with_mode_columns({{"N", ""}, {"r", "hopping"}}));
  ResultTable loops("loops", with_loop_columns({{"N", ""}, {"r", "hopping"}}));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& [N, r] = points[i];
    const Spectrum& s = results[i].s;
    rel.note("N=" + std::to_string(N) + " " + label_name(r, "r"), s.es);
    summary.add_row({Cell(static_cast<long long>(N)), r, s.report.mean_x_ipr,
                     Cell(static_cast<long long>(s.report.count(SkinLabel::Left))),
                     Cell(static_cast<long long>(s.report.count(SkinLabel::Right))),
                     Cell(static_cast<long long>(s.report.count(SkinLabel::Bulk))), s.es.max_residual,
                     !s.es.reliable});
    add_mode_rows(modes, {Cell(static_cast<long long>(N)), r}, s);
    add_loop_rows(loops, {Cell(static_cast<long long>(N)), r}, results[i].loop);
  }
  out.tables = {summary, modes, loops};
  finish(out, rel);

  out.plots = [points, results = std::move(results), tau, ns, rs]() {
    std::vector<PlotFile> files;
    // one spectrum panel per N, at the grid r closest to 1
    std::vector<SpectrumPanel> panels;
    LinePanel means{"mean x-IPR vs r", "r", "mean x-IPR", {}, {}};
    for (long long n : ns) {
      LineSeries series{"N=" + std::to_string(n), {}, {}, true};
      std::size_t best = points.size();
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].N != n) continue;
        series.x.push_back(points[i].r);
        series.y.push_back(results[i].s.report.mean_x_ipr);
        if (best == points.size() || std::abs(points[i].r - 1.0) < std::abs(points[best].r - 1.0)) best = i;
      }
      means.series.push_back(series);
      if (best < points.size()) {
        panels.push_back({"N=" + std::to_string(n) + " r=" + format_number(points[best].r),
                          spectrum_points(results[best].s), loop_polylines(results[best].loop)});
      }
    }
    files.push_back({"spectra.svg", spectrum_svg("OBC spectra and PBC loops", panels, tau)});
    files.push_back({"mean_x_ipr.svg", line_svg("one-band chain", {means}, 1)});
    return files;
  };
  return out;
}

// ---------------------------------------------------------------- fig2

ExperimentOutput run_fig2(const ExperimentConfig& c) {
  const int Lx = positive_int(c, "geometry.L_x");
  const double tau = c.real("analysis.tau");
  const int res = positive_int(c, "analysis.loop_resolution");
  const int N = as_int(c.integer("model.N"), "N");
  const double r = c.real("model.r");
  const auto& lys = c.integers("geometry.L_y");
  const auto& spectrum_lys = c.integers("geometry.spectrum_L_y");

  struct Point {
    std::string model;
    double t0;
    int Ly;
  };
  std::vector<Point> points;
  for (double t0 : c.reals("model.t_0")) {
    for (long long ly : lys) points.push_back({"size", t0, as_int(ly, "L_y")});
  }
  for (long long ly : lys) points.push_back({"benchmark", c.real("model.benchmark_t_0"), as_int(ly, "L_y")});
  auto model_of = [&](const Point& p) {
    return p.model == "size" ? size_model(p.t0, r, N) : benchmark_model(p.t0, c.real("model.kappa_x"));
  };
  auto wants_spectrum = [&](int ly) {
    return std::find(spectrum_lys.begin(), spectrum_lys.end(), ly) != spectrum_lys.end();
  };

  struct Result {
    Spectrum s;
    std::vector<std::pair<double, SpectralLoop>> loops;
  };
  auto results = parallel_map(points.size(), workers_of(c), [&](std::size_t i) {
    const HoppingModel model = model_of(points[i]);
    const Geometry geom(Lx, points[i].Ly, 1);
    Result res_i{solve(model, geom, BoundarySpec::open(), tau), {}};
    if (wants_spectrum(points[i].Ly)) {
      for (double by : {0.0, 1.0}) res_i.loops.emplace_back(by, pbc_loop(model, geom, BoundarySpec(1.0, by), res));
    }
    return res_i;
  });

  ExperimentOutput out = make_output(c);
  Reliability rel;
  ResultTable summary("summary", {{"model", ""}, {"t_0", "hopping"}, {"L_y", "cells"}, {"mean_x_ipr", "1"},
                                  {"n_left", "modes"}, {"n_right", "modes"}, {"max_residual", "1"},
                                  {"unreliable", ""}});
  ResultTable modes("modes", with_mode_columns({{"model", ""}, {"t_0", "hopping"}, {"L_y", "cells"}}));
  ResultTable loops("loops", with_loop_columns({{"model", ""}, {"t_0", "hopping"}, {"L_y", "cells"},
                                                {"beta_y", "1"}}));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    const Spectrum& s = results[i].s;
    rel.note(p.model + " " + label_name(p.t0, "t_0") + " L_y=" + std::to_string(p.Ly), s.es);
    const std::vector<Cell> prefix{p.model, p.t0, Cell(static_cast<long long>(p.Ly))};
    summary.add_row({p.model, p.t0, Cell(static_cast<long long>(p.Ly)), s.report.mean_x_ipr,
                     Cell(static_cast<long long>(s.report.count(SkinLabel::Left))),
                     Cell(static_cast<long long>(s.report.count(SkinLabel::Right))), s.es.max_residual,
                     !s.es.reliable});
    if (wants_spectrum(p.Ly)) add_mode_rows(modes, prefix, s);
    for (const auto& [by, loop] : results[i].loops) {
      std::vector<Cell> lp = prefix;
      lp.push_back(by);
      add_loop_rows(loops, lp, loop);
    }
  }
  out.tables = {summary, modes, loops};
  finish(out, rel);

  out.plots = [points, results = std::move(results), tau]() {
    std::vector<PlotFile> files;
    LinePanel panel{"mean x-IPR vs L_y", "L_y", "mean x-IPR", {}, {}};
    std::vector<SpectrumPanel> spectra;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::string name = points[i].model + " t_0=" + format_number(points[i].t0);
      auto it = std::find_if(panel.series.begin(), panel.series.end(),
                             [&](const LineSeries& s) { return s.name == name; });
      if (it == panel.series.end()) {
        panel.series.push_back({name, {}, {}, true});
        it = panel.series.end() - 1;
      }
      it->x.push_back(points[i].Ly);
      it->y.push_back(results[i].s.report.mean_x_ipr);
      if (!results[i].loops.empty() && points[i].model == "size") {
        spectra.push_back({name + " L_y=" + std::to_string(points[i].Ly), spectrum_points(results[i].s),
                           loop_polylines(results[i].loops.front().second)});
      }
    }
    files.push_back({"mean_x_ipr.svg", line_svg("transverse size dependence", {panel}, 1)});
    files.push_back({"spectra.svg", spectrum_svg("x,y-OBC spectra with y-OBC loops", spectra, tau)});
    return files;
  };
  return out;
}

// ---------------------------------------------------------------- fig3

namespace {

struct Fig3Reading {
  CouplingReading reading;
  Spectrum a, b;
  SpectralLoop loop_a, loop_b;
  Trajectory traj;
  ReversalInfo rev;
  std::size_t b1_amplified_left = 0;
  std::size_t dominant = 0;
  bool pass_a = false, pass_b1 = false, pass_b2 = false;
};

PacketSpec packet_from(const ExperimentConfig& c, double x0, double y0) {
  return {parse_packet_kind(c.text("dynamics.packet")), x0, y0, c.real("dynamics.sigma")};
}

}  // namespace

ExperimentOutput run_fig3(const ExperimentConfig& c) {
  const double tau = c.real("analysis.tau");
  const int res = positive_int(c, "analysis.loop_resolution");
  const int La = positive_int(c, "geometry.L_x_a");
  const int Lb = positive_int(c, "geometry.L_x_b");
  const int stride = positive_int(c, "dynamics.record_stride");
  std::vector<CouplingReading> readings;
  if (c.text("model.t_c_reading") == "sweep") {
    readings = {CouplingReading::Scale, CouplingReading::Replace};
  } else {
    readings = {reading_of(c)};
  }
  EvolveOptions opts;
  opts.dt = c.real("dynamics.dt");
  opts.T = c.real("dynamics.T");
  const PacketSpec packet = packet_from(c, c.real("dynamics.x0"), 1.0);

  auto params = [&](double t_c, double gamma, CouplingReading reading) {
    return ThreeBandParams{c.real("model.u_x"), c.real("model.v_x"), c.real("model.u_y"),
                           c.real("model.v_y"), gamma, t_c, reading};
  };

  auto results = parallel_map(readings.size(), workers_of(c), [&](std::size_t i) {
    Fig3Reading f;
    f.reading = readings[i];
    const HoppingModel ma = three_band_model(params(c.real("model.t_c_a"), c.real("model.gamma_a"), f.reading));
    const HoppingModel mb = three_band_model(params(c.real("model.t_c_b"), c.real("model.gamma_b"), f.reading));
    const Geometry ga(La, 1, 3), gb(Lb, 1, 3);
    f.a = solve(ma, ga, BoundarySpec::open(), tau);
    f.b = solve(mb, gb, BoundarySpec::open(), tau);
    f.loop_a = pbc_loop(ma, ga, BoundarySpec(1.0, 0.0), res);
    f.loop_b = pbc_loop(mb, gb, BoundarySpec(1.0, 0.0), res);
    f.traj = evolve(real_space_matrix(mb, gb, BoundarySpec::open()), initial_state(gb, packet), gb, opts);
    f.rev = analyze_reversal(f.traj);

    f.pass_a = f.a.report.count(SkinLabel::Left) > 0;
    for (std::size_t k = 0; k < f.b.es.size(); ++k) {
      if (f.b.es.eigenvalues(static_cast<Eigen::Index>(k)).imag() > 0.0 && f.b.report.x_ipr[k] < 0.0) {
        ++f.b1_amplified_left;
      }
    }
    f.dominant = dominant_index(f.b.es.eigenvalues);
    f.pass_b1 = f.b1_amplified_left > 0 && f.b.report.labels[f.dominant] == SkinLabel::Left;
    const double quarter = 0.25 * (Lb - 1);
    const bool reversed_side = f.rev.initial_direction > 0 ? f.rev.final_x <= 1.0 + quarter
                                                           : f.rev.final_x >= Lb - quarter;
    f.pass_b2 = f.rev.turnaround_time && f.rev.crossing_time && *f.rev.turnaround_time >= 100.0 &&
                *f.rev.turnaround_time <= 400.0 && reversed_side;
    return f;
  });

  ExperimentOutput out = make_output(c);
  Reliability rel;
  ResultTable table("readings",
                    {{"reading", ""},
                     {"a_n_left", "modes"},
                     {"a_n_right", "modes"},
                     {"b1_n_amplified_left", "modes"},
                     {"b1_dominant_re_E", "hopping"},
                     {"b1_dominant_im_E", "hopping"},
                     {"b1_dominant_x_ipr", "1"},
                     {"b1_dominant_label", ""},
                     {"b2_initial_direction", ""},
                     {"b2_turnaround_time", "1/hopping"},
                     {"b2_crossing_time", "1/hopping"},
                     {"b2_final_x_cm", "cells"},
                     {"pass_a", ""},
                     {"pass_b1", ""},
                     {"pass_b2", ""},
                     {"pass_all", ""},
                     {"unreliable", ""}});
  ResultTable modes("modes", with_mode_columns({{"reading", ""}, {"panel", ""}}));
  ResultTable loops("loops", with_loop_columns({{"reading", ""}, {"panel", ""}}));
  ResultTable traj("trajectory", {{"reading", ""}, {"t", "1/hopping"}, {"x_cm", "cells"}, {"log_norm", "1"}});
  Json passing = nullptr;
  Json per_reading = Json::array();
  for (const auto& f : results) {
    const std::string name = to_string(f.reading);
    rel.note(name + " panel a", f.a.es);
    rel.note(name + " panel b", f.b.es);
    const cplx dom = f.b.es.eigenvalues(static_cast<Eigen::Index>(f.dominant));
    const bool all = f.pass_a && f.pass_b1 && f.pass_b2;
    if (all && passing.is_null()) passing = name;
    table.add_row({name, Cell(static_cast<long long>(f.a.report.count(SkinLabel::Left))),
                   Cell(static_cast<long long>(f.a.report.count(SkinLabel::Right))),
                   Cell(static_cast<long long>(f.b1_amplified_left)), dom.real(), dom.imag(),
                   f.b.report.x_ipr[f.dominant], to_string(f.b.report.labels[f.dominant]),
                   Cell(static_cast<long long>(f.rev.initial_direction)),
                   f.rev.turnaround_time.value_or(kNaN), f.rev.crossing_time.value_or(kNaN), f.rev.final_x,
                   f.pass_a, f.pass_b1, f.pass_b2, all, !(f.a.es.reliable && f.b.es.reliable)});
    add_mode_rows(modes, {name, std::string("a")}, f.a);
    add_mode_rows(modes, {name, std::string("b")}, f.b);
    add_loop_rows(loops, {name, std::string("a")}, f.loop_a);
    add_loop_rows(loops, {name, std::string("b")}, f.loop_b);
    for (std::size_t k = 0; k < f.traj.size(); k += static_cast<std::size_t>(stride)) {
      traj.add_row({name, f.traj.times[k], f.traj.x_cm[k], f.traj.log_norms[k]});
    }
    per_reading.push_back({{"reading", name},
                           {"pass_a", f.pass_a},
                           {"pass_b1", f.pass_b1},
                           {"pass_b2", f.pass_b2},
                           {"turnaround_time", maybe(f.rev.turnaround_time)},
                           {"crossing_time", maybe(f.rev.crossing_time)},
                           {"final_x_cm", f.rev.final_x}});
  }
  out.tables = {table, modes, loops, traj};
  out.summary["readings"] = per_reading;
  out.summary["passing_reading"] = passing;
  finish(out, rel);

  out.plots = [results = std::move(results), tau]() {
    std::vector<PlotFile> files;
    std::vector<SpectrumPanel> panels;
    LinePanel xcm{"x_cm(t)", "t", "x_cm", {}, {}};
    for (const auto& f : results) {
      const std::string name = to_string(f.reading);
      panels.push_back({name + " panel a", spectrum_points(f.a), loop_polylines(f.loop_a)});
      panels.push_back({name + " panel b", spectrum_points(f.b), loop_polylines(f.loop_b)});
      LineSeries s{name, {}, {}, false};
      for (std::size_t k = 0; k < f.traj.size(); k += 50) {
        s.x.push_back(f.traj.times[k]);
        s.y.push_back(f.traj.x_cm[k]);
      }
      xcm.series.push_back(s);
      if (f.rev.turnaround_time) xcm.vlines.push_back(*f.rev.turnaround_time);
    }
    files.push_back({"spectra.svg", spectrum_svg("three-band chain", panels, tau, 2)});
    files.push_back({"trajectory.svg", line_svg("wavepacket center of mass", {xcm}, 1)});
    return files;
  };
  return out;
}

// ---------------------------------------------------------------- fig4 / appB

namespace {

ExperimentOutput run_beta_sweep(const ExperimentConfig& c, const std::string& plot_title) {
  const double tau = c.real("analysis.tau");
  const double tau_imag = c.real("analysis.tau_imag");
  const HoppingModel model = kagome_from(c);
  const Geometry geom(positive_int(c, "geometry.L_x"), positive_int(c, "geometry.L_y"), 3);
  struct Point {
    double by, bx;
  };
  std::vector<Point> points;
  for (double by : c.reals("boundary.beta_y")) {
    for (double bx : c.reals("boundary.beta_x")) points.push_back({by, bx});
  }
  for (const auto& p : points) BoundarySpec(p.bx, p.by);  // validate before the heavy work
  auto results = parallel_map(points.size(), workers_of(c), [&](std::size_t i) {
    return solve(model, geom, BoundarySpec(points[i].bx, points[i].by), tau);
  });

  ExperimentOutput out = make_output(c);
  Reliability rel;
  ResultTable summary("summary", {{"beta_y", "1"},
                                  {"beta_x", "1"},
                                  {"n_left", "modes"},
                                  {"n_right", "modes"},
                                  {"n_bulk", "modes"},
                                  {"n_left_real_line", "modes"},
                                  {"max_im_E_left", "hopping"},
                                  {"max_im_E_right", "hopping"},
                                  {"dominant_label", ""},
                                  {"dominant_re_E", "hopping"},
                                  {"dominant_im_E", "hopping"},
                                  {"max_residual", "1"},
                                  {"unreliable", ""}});
  ResultTable modes("modes", with_mode_columns({{"beta_y", "1"}, {"beta_x", "1"}}));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Spectrum& s = results[i];
    rel.note(label_name(points[i].by, "beta_y") + " " + label_name(points[i].bx, "beta_x"), s.es);
    std::vector<double> im_left, im_right;
    long long real_line = 0;
    for (std::size_t k = 0; k < s.es.size(); ++k) {
      const double im = s.es.eigenvalues(static_cast<Eigen::Index>(k)).imag();
      if (s.report.labels[k] == SkinLabel::Left) {
        im_left.push_back(im);
        if (std::abs(im) < tau_imag) ++real_line;
      }
      if (s.report.labels[k] == SkinLabel::Right) im_right.push_back(im);
    }
    const std::size_t d = dominant_index(s.es.eigenvalues);
    const cplx dom = s.es.eigenvalues(static_cast<Eigen::Index>(d));
    summary.add_row({points[i].by, points[i].bx, Cell(static_cast<long long>(im_left.size())),
                     Cell(static_cast<long long>(im_right.size())),
                     Cell(static_cast<long long>(s.report.count(SkinLabel::Bulk))), Cell(real_line),
                     max_or_nan(im_left), max_or_nan(im_right), to_string(s.report.labels[d]), dom.real(),
                     dom.imag(), s.es.max_residual, !s.es.reliable});
    add_mode_rows(modes, {points[i].by, points[i].bx}, s);
  }
  out.tables = {summary, modes};
  finish(out, rel);

  out.plots = [points, results = std::move(results), tau, plot_title]() {
    // per beta_y panel: beta_x = 0 thick on top of the thin beta_x > 0 layer
    std::vector<SpectrumPanel> panels;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::string title = "beta_y=" + format_number(points[i].by);
      auto it = std::find_if(panels.begin(), panels.end(), [&](const SpectrumPanel& p) { return p.title == title; });
      if (it == panels.end()) {
        panels.push_back({title, {}, {}});
        it = panels.end() - 1;
      }
      const auto pts = spectrum_points(results[i], points[i].bx != 0.0);
      it->points.insert(it->points.end(), pts.begin(), pts.end());
    }
    return std::vector<PlotFile>{{"spectra.svg", spectrum_svg(plot_title, panels, tau, 5)}};
  };
  return out;
}

}  // namespace

ExperimentOutput run_fig4(const ExperimentConfig& c) {
  return run_beta_sweep(c, "Kagome spectra as the y boundary opens");
}

ExperimentOutput run_appB(const ExperimentConfig& c) {
  ExperimentOutput out = run_beta_sweep(c, "Kagome full spectra, beta_y sweep");
  // global dominance: is the argmax-Im-E mode Left at each beta_y with beta_x = 0
  Json dominance = Json::array();
  const ResultTable& s = out.table("summary");
  const auto bys = s.numbers("beta_y");
  const auto bxs = s.numbers("beta_x");
  const auto labels = s.texts("dominant_label");
  for (std::size_t i = 0; i < s.row_count(); ++i) {
    if (bxs[i] != 0.0) continue;
    dominance.push_back({{"beta_y", bys[i]}, {"dominant_label", labels[i]}});
  }
  out.summary["dominant_mode_x_obc"] = dominance;
  return out;
}

// ---------------------------------------------------------------- fig5

ExperimentOutput run_fig5(const ExperimentConfig& c) {
  const double tau = c.real("analysis.tau");
  const HoppingModel model = kagome_from(c);
  const Geometry geom(positive_int(c, "geometry.L_x"), positive_int(c, "geometry.L_y"), 3);
  const double x0 = c.real("dynamics.x0") == 0.0 ? static_cast<double>((geom.Lx + 1) / 2) : c.real("dynamics.x0");
  const double y0 = c.real("dynamics.y0") == 0.0 ? static_cast<double>((geom.Ly + 1) / 2) : c.real("dynamics.y0");
  const int stride = positive_int(c, "dynamics.record_stride");
  EvolveOptions opts;
  opts.dt = c.real("dynamics.dt");
  opts.T = c.real("dynamics.T");
  opts.snapshot_times = c.reals("dynamics.snapshot_times");
  if (opts.snapshot_times.empty()) opts.snapshot_times = default_snapshot_times(opts.T);
  const WavepacketState psi0 = initial_state(geom, packet_from(c, x0, y0));
  const double bx = c.real("boundary.beta_x");
  const std::vector<std::pair<std::string, BoundarySpec>> runs{
      {"y_periodic", BoundarySpec(bx, c.real("boundary.beta_y_periodic"))},
      {"y_open", BoundarySpec(bx, c.real("boundary.beta_y_open"))}};
  const bool spectra = c.flag("analysis.spectra");

  struct Result {
    Trajectory traj;
    std::optional<Spectrum> s;
  };
  // trajectories first, spectra afterwards, so the cheap part is never starved
  auto trajs = parallel_map(runs.size(), workers_of(c), [&](std::size_t i) {
    return evolve(real_space_matrix(model, geom, runs[i].second), psi0, geom, opts);
  });
  std::vector<std::optional<Spectrum>> specs(runs.size());
  if (spectra) {
    auto solved = parallel_map(runs.size(), workers_of(c),
                               [&](std::size_t i) { return solve(model, geom, runs[i].second, tau); });
    for (std::size_t i = 0; i < runs.size(); ++i) specs[i] = std::move(solved[i]);
  }

  ExperimentOutput out = make_output(c);
  Reliability rel;
  const Trajectory& tp = trajs[0];
  const Trajectory& to = trajs[1];
  const auto onset = divergence_onset(tp, to, c.real("analysis.divergence_threshold"));
  const ReversalInfo rp = analyze_reversal(tp);
  const ReversalInfo ro = analyze_reversal(to);

  ResultTable traj("trajectories", {{"t", "1/hopping"},
                                    {"x_cm_y_periodic", "cells"},
                                    {"x_cm_y_open", "cells"},
                                    {"y_cm_y_periodic", "cells"},
                                    {"y_cm_y_open", "cells"},
                                    {"log_norm_y_periodic", "1"},
                                    {"log_norm_y_open", "1"}});
  for (std::size_t k = 0; k < tp.size(); k += static_cast<std::size_t>(stride)) {
    traj.add_row({tp.times[k], tp.x_cm[k], to.x_cm[k], tp.y_cm.empty() ? kNaN : tp.y_cm[k],
                  to.y_cm.empty() ? kNaN : to.y_cm[k], tp.log_norms[k], to.log_norms[k]});
  }
  ResultTable snaps("snapshots", {{"run", ""}, {"t", "1/hopping"}, {"log_norm", "1"}, {"x", "cells"},
                                  {"y", "cells"}, {"density", "1"}});
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const auto& snap : trajs[r].snapshots) {
      for (int y = 1; y <= geom.Ly; ++y) {
        for (int x = 1; x <= geom.Lx; ++x) {
          double d = 0.0;
          for (int b = 0; b < geom.bands; ++b) d += snap.density(static_cast<Eigen::Index>(geom.index(x, y, b)));
          snaps.add_row({runs[r].first, snap.t, snap.log_norm, Cell(static_cast<long long>(x)),
                         Cell(static_cast<long long>(y)), d});
        }
      }
    }
  }
  ResultTable modes("modes", with_mode_columns({{"run", ""}}));
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (!specs[r]) continue;
    rel.note(runs[r].first, specs[r]->es);
    add_mode_rows(modes, {runs[r].first}, *specs[r]);
  }
  out.tables = {traj, snaps, modes};

  auto describe = [](const ReversalInfo& r) {
    return Json{{"initial_direction", r.initial_direction},
                {"turnaround_time", maybe(r.turnaround_time)},
                {"crossing_time", maybe(r.crossing_time)},
                {"extreme_x_cm", r.extreme_x},
                {"final_x_cm", r.final_x}};
  };
  out.summary["x0"] = x0;
  out.summary["y0"] = y0;
  out.summary["divergence_onset"] = maybe(onset);
  out.summary["y_periodic"] = describe(rp);
  out.summary["y_open"] = describe(ro);
  out.summary["snapshot_times"] = opts.snapshot_times;
  finish(out, rel);

  out.plots = [tp, to, onset, specs = std::move(specs), tau, geom]() {
    std::vector<PlotFile> files;
    LinePanel panel{"x_cm(t)", "t", "x_cm", {}, {}};
    LineSeries a{"y periodic", {}, {}, false}, b{"y open", {}, {}, false};
    for (std::size_t k = 0; k < tp.size(); k += 10) {
      a.x.push_back(tp.times[k]);
      a.y.push_back(tp.x_cm[k]);
      b.x.push_back(to.times[k]);
      b.y.push_back(to.x_cm[k]);
    }
    panel.series = {a, b};
    if (onset) panel.vlines.push_back(*onset);
    files.push_back({"trajectories.svg", line_svg("Kagome wavepacket", {panel}, 1)});
    std::vector<SpectrumPanel> sp;
    if (specs[0]) sp.push_back({"x-OBC, y-PBC", spectrum_points(*specs[0]), {}});
    if (specs[1]) sp.push_back({"x,y-OBC", spectrum_points(*specs[1]), {}});
    if (!sp.empty()) files.push_back({"spectra.svg", spectrum_svg("Kagome spectra", sp, tau, 2)});
    (void)geom;
    return files;
  };
  return out;
}

// ---------------------------------------------------------------- appA

ExperimentOutput run_appA(const ExperimentConfig& c) {
  const double tau = c.real("analysis.tau");
  const int Lx = positive_int(c, "geometry.L_x");
  const int N = as_int(c.integer("model.N"), "N");
  const double r = c.real("model.r");
  struct Point {
    double t0;
    int Ly;
  };
  std::vector<Point> points;
  for (double t0 : c.reals("model.t_0")) {
    for (long long ly : c.integers("geometry.L_y")) points.push_back({t0, as_int(ly, "L_y")});
  }
  struct Result {
    Spectrum s;
    std::size_t dominant;
    Eigen::VectorXd profile;
  };
  auto results = parallel_map(points.size(), workers_of(c), [&](std::size_t i) {
    const Geometry geom(Lx, points[i].Ly, 1);
    Spectrum s = solve(size_model(points[i].t0, r, N), geom, BoundarySpec::open(), tau, true);
    const std::size_t d = dominant_index(s.es.eigenvalues);
    Eigen::VectorXd p = y_marginal_density(s.es.vectors.col(static_cast<Eigen::Index>(d)), geom);
    s.es.vectors.resize(0, 0);
    return Result{std::move(s), d, std::move(p)};
  });

  ExperimentOutput out = make_output(c);
  Reliability rel;
  ResultTable summary("summary", {{"t_0", "hopping"},
                                  {"L_y", "cells"},
                                  {"dominant_re_E", "hopping"},
                                  {"dominant_im_E", "hopping"},
                                  {"dominant_x_ipr", "1"},
                                  {"peak_x", "cells"},
                                  {"peak_height", "1"},
                                  {"side", ""},
                                  {"residual", "1"},
                                  {"unreliable", ""}});
  ResultTable profiles("profiles", {{"t_0", "hopping"}, {"L_y", "cells"}, {"x", "cells"}, {"density", "1"}});
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Result& res = results[i];
    rel.note(label_name(points[i].t0, "t_0") + " L_y=" + std::to_string(points[i].Ly), res.s.es);
    Eigen::Index peak = 0;
    const double height = res.profile.maxCoeff(&peak);
    const double px = static_cast<double>(peak + 1);
    const std::string side = px > 2.0 * Lx / 3.0 ? "right" : (px <= Lx / 3.0 ? "left" : "middle");
    const cplx e = res.s.es.eigenvalues(static_cast<Eigen::Index>(res.dominant));
    summary.add_row({points[i].t0, Cell(static_cast<long long>(points[i].Ly)), e.real(), e.imag(),
                     res.s.report.x_ipr[res.dominant], Cell(static_cast<long long>(peak + 1)), height, side,
                     res.s.es.residuals(static_cast<Eigen::Index>(res.dominant)), !res.s.es.reliable});
    for (Eigen::Index x = 0; x < res.profile.size(); ++x) {
      profiles.add_row({points[i].t0, Cell(static_cast<long long>(points[i].Ly)), Cell(static_cast<long long>(x + 1)),
                        res.profile(x)});
    }
  }
  out.tables = {summary, profiles};
  finish(out, rel);

  out.plots = [points, results = std::move(results)]() {
    std::vector<LinePanel> panels;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::string title = "L_y=" + std::to_string(points[i].Ly);
      auto it = std::find_if(panels.begin(), panels.end(), [&](const LinePanel& p) { return p.title == title; });
      if (it == panels.end()) {
        panels.push_back({title, "x", "sum_y |psi|^2", {}, {}});
        it = panels.end() - 1;
      }
      LineSeries s{"t_0=" + format_number(points[i].t0), {}, {}, false};
      for (Eigen::Index x = 0; x < results[i].profile.size(); ++x) {
        s.x.push_back(static_cast<double>(x + 1));
        s.y.push_back(results[i].profile(x));
      }
      it->series.push_back(s);
    }
    return std::vector<PlotFile>{{"profiles.svg", line_svg("dominant-mode profiles", panels, 4)}};
  };
  return out;
}

// ---------------------------------------------------------------- appC

ExperimentOutput run_appC(const ExperimentConfig& c) {
  const double tau = c.real("analysis.tau");
  const int res = positive_int(c, "analysis.loop_resolution");
  const auto& lxs = c.integers("geometry.L_x");
  const auto& lys = c.integers("geometry.L_y");
  if (lxs.size() != lys.size()) throw InvalidArgument("geometry.L_x and geometry.L_y must pair up");
  const HoppingModel model = kagome_from(c);
  std::vector<Geometry> shapes;
  for (std::size_t i = 0; i < lxs.size(); ++i) shapes.emplace_back(as_int(lxs[i], "L_x"), as_int(lys[i], "L_y"), 3);

  auto results = parallel_map(shapes.size(), workers_of(c),
                              [&](std::size_t i) { return solve(model, shapes[i], BoundarySpec::open(), tau); });

  ExperimentOutput out = make_output(c);
  Reliability rel;
  ResultTable summary("summary", {{"L_x", "cells"}, {"L_y", "cells"}, {"sites", "sites"}, {"n_left", "modes"},
                                  {"n_right", "modes"}, {"n_bulk", "modes"}, {"left_fraction", "1"},
                                  {"mean_x_ipr", "1"}, {"max_residual", "1"}, {"unreliable", ""}});
  ResultTable modes("modes", with_mode_columns({{"L_x", "cells"}, {"L_y", "cells"}}));
  ResultTable loops("loops", {{"L_x", "cells"}, {"L_y", "cells"}, {"n_y", ""}, {"k_y", "rad"}, {"band", ""},
                              {"k_x", "rad"}, {"re_E", "hopping"}, {"im_E", "hopping"}});
  std::vector<SpectrumPanel> panels;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const Geometry& g = shapes[i];
    const Spectrum& s = results[i];
    rel.note("L_x=" + std::to_string(g.Lx) + " L_y=" + std::to_string(g.Ly), s.es);
    const auto nl = s.report.count(SkinLabel::Left);
    summary.add_row({Cell(static_cast<long long>(g.Lx)), Cell(static_cast<long long>(g.Ly)),
                     Cell(static_cast<long long>(g.size())), Cell(static_cast<long long>(nl)),
                     Cell(static_cast<long long>(s.report.count(SkinLabel::Right))),
                     Cell(static_cast<long long>(s.report.count(SkinLabel::Bulk))),
                     static_cast<double>(nl) / static_cast<double>(s.es.size()), s.report.mean_x_ipr,
                     s.es.max_residual, !s.es.reliable});
    const std::vector<Cell> prefix{Cell(static_cast<long long>(g.Lx)), Cell(static_cast<long long>(g.Ly))};
    add_mode_rows(modes, prefix, s);
    SpectrumPanel panel{"L_x=" + std::to_string(g.Lx) + " L_y=" + std::to_string(g.Ly), spectrum_points(s), {}};
    // PBC loops at the allowed k_y
    for (int ny = 0; ny < g.Ly; ++ny) {
      const double ky = 2.0 * kPi * ny / g.Ly;
      std::vector<std::vector<std::pair<double, double>>> lines(3);
      for (int j = 0; j <= res; ++j) {
        const double kx = 2.0 * kPi * j / res;
        const CVector e = eigenvalues_only(bloch_matrix(model, kx, ky));
        for (Eigen::Index b = 0; b < e.size(); ++b) {
          if (j < res) {
            loops.add_row({prefix[0], prefix[1], Cell(static_cast<long long>(ny)), ky, Cell(static_cast<long long>(b)),
                           kx, e(b).real(), e(b).imag()});
          }
          lines[static_cast<std::size_t>(b)].emplace_back(e(b).real(), e(b).imag());
        }
      }
      // band sorting is by Re E, not continuity, so draw points not lines
      for (const auto& line : lines) {
        for (const auto& [re, im] : line) panel.points.push_back({re, im, kNaN, true});
      }
    }
    panels.push_back(std::move(panel));
  }
  out.tables = {summary, modes, loops};
  finish(out, rel);
  out.plots = [panels = std::move(panels), tau]() {
    return std::vector<PlotFile>{{"spectra.svg", spectrum_svg("aspect ratio comparison", panels, tau, 2)}};
  };
  return out;
}

// ---------------------------------------------------------------- appD

ExperimentOutput run_appD(const ExperimentConfig& c) {
  const bool path_a = c.id() == "appD_pathA";
  const double tau = c.real("analysis.tau");
  const HoppingModel model = kagome_from(c);
  const Geometry geom(positive_int(c, "geometry.L_x"), positive_int(c, "geometry.L_y"), 3);
  const auto& sweep = c.reals("boundary.sweep");
  if (sweep.size() < 2) throw InvalidArgument("boundary.sweep needs at least two values");
  std::vector<BoundarySpec> bcs;
  for (double v : sweep) {
    bcs.push_back(path_a ? BoundarySpec(c.real("boundary.beta_x"), v) : BoundarySpec(v, c.real("boundary.beta_y")));
  }
  auto results = parallel_map(bcs.size(), workers_of(c),
                              [&](std::size_t i) { return solve(model, geom, bcs[i], tau); });

  ExperimentOutput out = make_output(c);
  Reliability rel;
  ResultTable steps("steps", {{"step", ""},
                              {"beta_x", "1"},
                              {"beta_y", "1"},
                              {"n_left", "modes"},
                              {"n_right", "modes"},
                              {"n_bulk", "modes"},
                              {"diameter", "hopping"},
                              {"hausdorff_prev", "hopping"},
                              {"hausdorff_prev_normalized", "1"},
                              {"max_residual", "1"},
                              {"unreliable", ""}});
  ResultTable modes("modes", with_mode_columns({{"step", ""}, {"beta_x", "1"}, {"beta_y", "1"}}));
  std::vector<double> diam;
  Json n_left = Json::array();
  double max_consecutive = 0.0;
  for (std::size_t i = 0; i < bcs.size(); ++i) {
    const Spectrum& s = results[i];
    rel.note(label_name(bcs[i].beta_x, "beta_x") + " " + label_name(bcs[i].beta_y, "beta_y"), s.es);
    diam.push_back(spectral_diameter(s.es.eigenvalues));
    double h = kNaN, hn = kNaN;
    if (i > 0) {
      h = hausdorff_distance(results[i - 1].es.eigenvalues, s.es.eigenvalues);
      hn = h / std::max(diam[i - 1], diam[i]);
      max_consecutive = std::max(max_consecutive, hn);
    }
    const auto nl = s.report.count(SkinLabel::Left);
    n_left.push_back(nl);
    steps.add_row({Cell(static_cast<long long>(i)), bcs[i].beta_x, bcs[i].beta_y, Cell(static_cast<long long>(nl)),
                   Cell(static_cast<long long>(s.report.count(SkinLabel::Right))),
                   Cell(static_cast<long long>(s.report.count(SkinLabel::Bulk))), diam[i], h, hn, s.es.max_residual,
                   !s.es.reliable});
    add_mode_rows(modes, {Cell(static_cast<long long>(i)), bcs[i].beta_x, bcs[i].beta_y}, s);
  }
  const double end_to_end = hausdorff_distance(results.front().es.eigenvalues, results.back().es.eigenvalues);
  out.tables = {steps, modes};
  out.summary["path"] = path_a ? "A" : "B";
  out.summary["end_to_end_hausdorff"] = end_to_end;
  out.summary["end_to_end_hausdorff_normalized"] = end_to_end / std::max(diam.front(), diam.back());
  out.summary["max_consecutive_hausdorff_normalized"] = max_consecutive;
  out.summary["n_left"] = n_left;
  finish(out, rel);

  out.plots = [bcs, results = std::move(results), tau, path_a]() {
    std::vector<SpectrumPanel> panels;
    for (std::size_t i = 0; i < bcs.size(); ++i) {
      panels.push_back({label_name(path_a ? bcs[i].beta_y : bcs[i].beta_x, path_a ? "beta_y" : "beta_x"),
                        spectrum_points(results[i]), {}});
    }
    return std::vector<PlotFile>{
        {"spectra.svg", spectrum_svg(path_a ? "path A: beta_x fixed, beta_y swept" : "path B: beta_y = 0, beta_x swept",
                                     panels, tau, 5)}};
  };
  return out;
}

}  // namespace nhse
