#include "cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "nhse/error.hpp"
#include "nhse/experiments.hpp"

namespace nhse::cli {

namespace {

struct ModelFlags {
  std::string model = "one_band";
  int Lx = 0;
  int Ly = 0;
  double beta_x = 0.0;
  double beta_y = 0.0;
  std::vector<std::string> sets;
  std::string reading = "scale";
  std::string out;
};

struct EvolveFlags {
  double dt = 0.01;
  double T = 10.0;
  double x0 = 0.0;
  double y0 = 0.0;
  std::string packet = "delta";
  double sigma = 1.0;
  std::string propagator = "rk4";
  int stride = 1;
};

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InvalidArgument(what + ": '" + text + "' is not a number");
  return v;
}

void add_model_flags(CLI::App* cmd, ModelFlags& f, double& tau) {
  cmd->add_option("--model", f.model, "Model name (see list-models)")
      ->capture_default_str()
      ->check(CLI::IsMember(model_names()));
  cmd->add_option("--Lx", f.Lx, "Lattice length in cells (0 = model default)")->capture_default_str();
  cmd->add_option("--Ly", f.Ly, "Lattice width in cells (0 = model default)")->capture_default_str();
  cmd->add_option("--beta-x", f.beta_x, "x boundary factor in [0,1] (1 = periodic, 0 = open)")
      ->capture_default_str();
  cmd->add_option("--beta-y", f.beta_y, "y boundary factor in [0,1] (1 = periodic, 0 = open)")
      ->capture_default_str();
  cmd->add_option("--set", f.sets, "Model parameter override name=value in hopping units, repeatable");
  cmd->add_option("--reading", f.reading, "How t_c enters the 3-band and Kagome models: scale or replace")
      ->capture_default_str()
      ->check(CLI::IsMember({"scale", "replace"}));
  cmd->add_option("--tau", tau, "x-IPR band classified as bulk (dimensionless)")->capture_default_str();
  cmd->add_option("--out", f.out, "Output directory (empty = CSV on stdout)")->capture_default_str();
}

HoppingModel build_model(const ModelFlags& f) {
  ParamMap params;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("--set expects name=value, got '" + s + "'");
    const std::string key = s.substr(0, eq);
    params[key] = parse_double(s.substr(eq + 1), "--set " + key);
  }
  return make_model(f.model, params, parse_coupling_reading(f.reading));
}

Geometry build_geometry(const ModelFlags& f, const HoppingModel& model) {
  const auto ext = model_default_extent(f.model);
  return Geometry(f.Lx > 0 ? f.Lx : ext[0], f.Ly > 0 ? f.Ly : ext[1], model.bands());
}

// stdout when dir is empty, else <dir>/<name>
void emit(const ResultTable& table, const std::string& dir, std::ostream& out) {
  const std::string csv = table.to_csv();
  if (dir.empty()) {
    out << csv;
    return;
  }
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / (table.name() + ".csv");
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << csv;
  if (!file) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "wrote " << path.string() << " (" << table.row_count() << " rows)\n";
}

int cmd_spectrum(const ModelFlags& f, double tau, std::ostream& out, std::ostream& err) {
  const HoppingModel model = build_model(f);
  const Geometry geom = build_geometry(f, model);
  const BoundarySpec bc(f.beta_x, f.beta_y);
  const EigenSystem es = eigendecompose(real_space_matrix(model, geom, bc), geom);
  const SkinReport report = classify_modes(es, tau);
  ResultTable table("spectrum", {{"index", ""}, {"re_E", "hopping"}, {"im_E", "hopping"}, {"x_ipr", "1"},
                                 {"x_center", "cells"}, {"label", ""}, {"residual", "1"}, {"unreliable", ""}});
  for (std::size_t i = 0; i < es.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    table.add_row({Cell(static_cast<long long>(i)), es.eigenvalues(k).real(), es.eigenvalues(k).imag(),
                   report.x_ipr[i], report.x_center[i], to_string(report.labels[i]), es.residuals(k),
                   !es.reliable});
  }
  emit(table, f.out, out);
  err << "mean x-IPR " << format_number(report.mean_x_ipr) << ", left " << report.count(SkinLabel::Left)
      << ", right " << report.count(SkinLabel::Right) << ", bulk " << report.count(SkinLabel::Bulk) << "\n";
  if (!es.reliable) {
    err << "error: eigen-residual " << format_number(es.max_residual) << " exceeds " << format_number(kResidualBound)
        << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_evolve(const ModelFlags& f, const EvolveFlags& e, std::ostream& out, std::ostream& err) {
  if (e.stride < 1) throw InvalidArgument("--stride must be at least 1");
  const HoppingModel model = build_model(f);
  const Geometry geom = build_geometry(f, model);
  const BoundarySpec bc(f.beta_x, f.beta_y);
  const double x0 = e.x0 == 0.0 ? static_cast<double>((geom.Lx + 1) / 2) : e.x0;
  const double y0 = e.y0 == 0.0 ? static_cast<double>((geom.Ly + 1) / 2) : e.y0;
  const WavepacketState psi0 = initial_state(geom, {parse_packet_kind(e.packet), x0, y0, e.sigma});
  EvolveOptions opts;
  opts.dt = e.dt;
  opts.T = e.T;
  if (e.propagator == "expm") {
    opts.propagator = Propagator::Expm;
  } else if (e.propagator != "rk4") {
    throw InvalidArgument("unknown propagator '" + e.propagator + "'");
  }
  const Trajectory traj = evolve(real_space_matrix(model, geom, bc), psi0, geom, opts);
  ResultTable table("trajectory", {{"t", "1/hopping"}, {"x_cm", "cells"}, {"y_cm", "cells"}, {"log_norm", "1"}});
  for (std::size_t k = 0; k < traj.size(); k += static_cast<std::size_t>(e.stride)) {
    table.add_row({traj.times[k], traj.x_cm[k], traj.y_cm.empty() ? 1.0 : traj.y_cm[k], traj.log_norms[k]});
  }
  emit(table, f.out, out);
  const ReversalInfo rev = analyze_reversal(traj);
  err << "final x_cm " << format_number(rev.final_x) << ", initial direction " << rev.initial_direction;
  if (rev.turnaround_time && rev.crossing_time) {
    err << ", reversal: turnaround t=" << format_number(*rev.turnaround_time) << ", crossing t="
        << format_number(*rev.crossing_time);
  } else {
    err << ", no reversal";
  }
  err << "\n";
  return kExitOk;
}

int cmd_experiment(const std::string& id, const std::string& config_path, const std::vector<std::string>& sets,
                   const std::string& outdir, bool no_plots, bool dry_run, std::ostream& out,
                   std::ostream& err) {
  ExperimentConfig config = default_config(id);
  if (!config_path.empty()) config.load_yaml_file(config_path);
  for (const auto& s : sets) config.apply_override(s);
  if (!outdir.empty()) config.set("output.dir", outdir);
  if (no_plots) config.set("output.plots", false);
  if (dry_run) {
    out << config.to_json().dump(2) << "\n";
    return kExitOk;
  }
  const ExperimentOutput result = run_experiment(config);
  const WrittenFiles files = write_experiment(result, config, config.text("output.dir"), config.flag("output.plots"));
  out << "wrote " << files.files.size() << " files to " << files.directory.string() << "\n";
  for (const auto& e : files.plot_errors) err << "warning: plot failed: " << e << "\n";
  if (!result.reliable) {
    for (const auto& p : result.unreliable_points) err << "unreliable: " << p << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

void list_models(std::ostream& out) {
  for (const auto& name : model_names()) {
    const auto ext = model_default_extent(name);
    out << name << "  (default " << ext[0] << "x" << ext[1] << ")";
    for (const auto& [key, value] : model_defaults(name)) out << "  " << key << "=" << format_number(value);
    out << "\n";
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Non-Hermitian skin effect lattice simulations", "nhse");
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  std::string id, config_path, outdir;
  std::vector<std::string> sets;
  bool no_plots = false, dry_run = false;
  auto* exp = app.add_subcommand("experiment", "Run a named experiment and write CSV tables, plots and a manifest");
  exp->add_option("id", id, "Experiment id")->required()->check(CLI::IsMember(experiment_ids()));
  exp->add_option("--config", config_path, "YAML config file (sections model, geometry, boundary, dynamics, "
                                           "output, analysis)")
      ->check(CLI::ExistingFile);
  exp->add_option("--set", sets, "Config override section.key=value, applied after --config, repeatable");
  exp->add_option("--out", outdir, "Output root directory (default: output.dir, results)");
  exp->add_flag("--no-plots", no_plots, "Skip SVG plots");
  exp->add_flag("--dry-run", dry_run, "Print the resolved config as JSON and exit");

  ModelFlags spec_flags;
  double spec_tau = kDefaultTau;
  auto* spec = app.add_subcommand("spectrum", "Eigenvalues, x-IPR and skin labels of one finite lattice");
  add_model_flags(spec, spec_flags, spec_tau);

  ModelFlags evo_flags;
  EvolveFlags evo;
  double evo_tau = kDefaultTau;
  auto* ev = app.add_subcommand("evolve", "Wavepacket center-of-mass trajectory on one finite lattice");
  add_model_flags(ev, evo_flags, evo_tau);
  ev->remove_option(ev->get_option("--tau"));
  ev->add_option("--dt", evo.dt, "Time step in 1/hopping")->capture_default_str();
  ev->add_option("--T", evo.T, "Evolution time in 1/hopping")->capture_default_str();
  ev->add_option("--x0", evo.x0, "Packet x cell (0 = middle)")->capture_default_str();
  ev->add_option("--y0", evo.y0, "Packet y cell (0 = middle)")->capture_default_str();
  ev->add_option("--packet", evo.packet, "Packet shape: delta or gaussian")
      ->capture_default_str()
      ->check(CLI::IsMember({"delta", "gaussian"}));
  ev->add_option("--sigma", evo.sigma, "Gaussian width in cells")->capture_default_str();
  ev->add_option("--propagator", evo.propagator, "rk4 or expm")
      ->capture_default_str()
      ->check(CLI::IsMember({"rk4", "expm"}));
  ev->add_option("--stride", evo.stride, "Write every n-th step")->capture_default_str();

  auto* lm = app.add_subcommand("list-models", "Models with their default parameters and lattice");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*exp) return cmd_experiment(id, config_path, sets, outdir, no_plots, dry_run, out, err);
    if (*spec) return cmd_spectrum(spec_flags, spec_tau, out, err);
    if (*ev) return cmd_evolve(evo_flags, evo, out, err);
    if (*lm) {
      list_models(out);
      return kExitOk;
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace nhse::cli
