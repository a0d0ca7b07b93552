#include "nhse/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "nhse/error.hpp"

namespace nhse {

namespace {

CMatrix zero_block(int bands) { return CMatrix::Zero(bands, bands); }

CMatrix scalar_block(cplx value) {
  CMatrix m(1, 1);
  m(0, 0) = value;
  return m;
}

int require_integer(double value, const std::string& key) {
  if (std::abs(value - std::round(value)) > 1e-12) {
    throw InvalidArgument("model parameter '" + key + "' must be an integer, got " +
                          std::to_string(value));
  }
  return static_cast<int>(std::lround(value));
}

// Wrap a 0-based coordinate into [0, extent); returns false when it was outside.
bool wrap(int& coord, int extent) {
  if (coord >= 0 && coord < extent) return true;
  coord = ((coord % extent) + extent) % extent;
  return false;
}

}  // namespace

CouplingReading parse_coupling_reading(const std::string& text) {
  if (text == "scale") return CouplingReading::Scale;
  if (text == "replace") return CouplingReading::Replace;
  throw InvalidArgument("unknown t_c reading '" + text + "' (expected scale or replace)");
}

std::string to_string(CouplingReading reading) {
  return reading == CouplingReading::Scale ? "scale" : "replace";
}

HoppingModel::HoppingModel(std::string name, int bands, int dim, ParamMap params)
    : name_(std::move(name)), bands_(bands), dim_(dim), params_(std::move(params)) {
  if (bands_ < 1) throw InvalidArgument("model band count must be positive");
  if (dim_ != 1 && dim_ != 2) throw InvalidArgument("model dimension must be 1 or 2");
}

void HoppingModel::add_term(Displacement d, const CMatrix& block) {
  if (block.rows() != bands_ || block.cols() != bands_) {
    std::ostringstream msg;
    msg << "hopping block is " << block.rows() << "x" << block.cols() << ", model '"
        << name_ << "' has " << bands_ << " bands";
    throw InvalidArgument(msg.str());
  }
  if (dim_ == 1 && d[1] != 0) {
    throw InvalidArgument("1D model '" + name_ + "' cannot carry a y displacement");
  }
  auto [it, inserted] = terms_.try_emplace(d, block);
  if (!inserted) it->second += block;
}

double HoppingModel::param(const std::string& key) const {
  auto it = params_.find(key);
  if (it == params_.end()) {
    throw InvalidArgument("model '" + name_ + "' has no parameter '" + key + "'");
  }
  return it->second;
}

std::vector<HoppingTerm> HoppingModel::terms() const {
  std::vector<HoppingTerm> out;
  out.reserve(terms_.size());
  for (const auto& [d, block] : terms_) out.push_back({d, block});
  return out;
}

CMatrix HoppingModel::block(Displacement d) const {
  auto it = terms_.find(d);
  return it == terms_.end() ? zero_block(bands_) : it->second;
}

int HoppingModel::max_abs_dx() const {
  int m = 0;
  for (const auto& [d, block] : terms_) m = std::max(m, std::abs(d[0]));
  return m;
}

int HoppingModel::max_abs_dy() const {
  int m = 0;
  for (const auto& [d, block] : terms_) m = std::max(m, std::abs(d[1]));
  return m;
}

Geometry::Geometry(int lx, int ly, int b) : Lx(lx), Ly(ly), bands(b) {
  if (Lx < 1 || Ly < 1 || bands < 1) {
    throw InvalidArgument("geometry extents and band count must be positive");
  }
}

std::size_t Geometry::index(int x, int y, int b) const {
  if (x < 1 || x > Lx || y < 1 || y > Ly || b < 0 || b >= bands) {
    throw InvalidArgument("site (" + std::to_string(x) + ", " + std::to_string(y) + ", " +
                          std::to_string(b) + ") outside the lattice");
  }
  return (static_cast<std::size_t>(y - 1) * Lx + static_cast<std::size_t>(x - 1)) * bands +
         static_cast<std::size_t>(b);
}

int Geometry::x_of(std::size_t site) const {
  return static_cast<int>((site / bands) % static_cast<std::size_t>(Lx)) + 1;
}

int Geometry::y_of(std::size_t site) const {
  return static_cast<int>((site / bands) / static_cast<std::size_t>(Lx)) + 1;
}

BoundarySpec::BoundarySpec(double bx, double by) : beta_x(bx), beta_y(by) {
  auto check = [](double beta, const char* name) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
      throw InvalidArgument(std::string(name) + " must lie in [0, 1], got " +
                            std::to_string(beta));
    }
  };
  check(beta_x, "beta_x");
  check(beta_y, "beta_y");
}

HoppingModel one_band_model(double r, int N) {
  if (r < 0.0) throw InvalidArgument("one_band_model: r must be >= 0");
  if (N < 0) throw InvalidArgument("one_band_model: N must be >= 0");
  HoppingModel model("one_band", 1, 1, {{"r", r}, {"N", static_cast<double>(N)}});
  model.add_term({1, 0}, scalar_block(1.0));
  model.add_term({-1, 0}, scalar_block(1.0));
  model.add_term({N, 0}, scalar_block(r));
  return model;
}

HoppingModel size_model(double t0, double r, int N) {
  if (N < 2) {
    throw InvalidArgument("size_model: N must be >= 2 (got " + std::to_string(N) +
                          "); N = 0, 1 reduce to the one-band chain");
  }
  HoppingModel model("size", 1, 2, {{"t_0", t0}, {"r", r}, {"N", static_cast<double>(N)}});
  model.add_term({1, 0}, scalar_block(1.0));
  model.add_term({-1, 0}, scalar_block(1.0));
  model.add_term({0, 1}, scalar_block(t0));
  model.add_term({0, -1}, scalar_block(t0));
  model.add_term({N, 1}, scalar_block(r));
  return model;
}

HoppingModel benchmark_model(double t0, double kappa_x) {
  if (kappa_x < 0.0) throw InvalidArgument("benchmark_model: kappa_x must be >= 0");
  HoppingModel model("benchmark", 1, 2, {{"t_0", t0}, {"kappa_x", kappa_x}});
  model.add_term({1, 0}, scalar_block(std::exp(kappa_x)));
  model.add_term({-1, 0}, scalar_block(std::exp(-kappa_x)));
  model.add_term({0, 1}, scalar_block(t0));
  model.add_term({0, -1}, scalar_block(t0));
  return model;
}

namespace {

// Effective u_y / v_y entries once t_c is applied.
struct ThirdOrbitalCoupling {
  double uy;
  double vy;
};

ThirdOrbitalCoupling third_orbital(double u_y, double v_y, double t_c,
                                   CouplingReading reading) {
  if (reading == CouplingReading::Replace) return {t_c, t_c};
  return {t_c * u_y, t_c * v_y};
}

}  // namespace

HoppingModel three_band_model(const ThreeBandParams& p) {
  HoppingModel model("three_band", 3, 1,
                     {{"u_x", p.u_x},
                      {"v_x", p.v_x},
                      {"u_y", p.u_y},
                      {"v_y", p.v_y},
                      {"gamma", p.gamma},
                      {"t_c", p.t_c}});
  const auto c = third_orbital(p.u_y, p.v_y, p.t_c, p.reading);

  CMatrix onsite = zero_block(3);
  onsite.diagonal().setConstant(cplx(0.0, -p.gamma));
  onsite(0, 1) = p.v_x;
  onsite(1, 0) = p.u_x;
  onsite(0, 2) = c.uy;
  onsite(1, 2) = c.uy;
  onsite(2, 0) = c.vy;
  onsite(2, 1) = c.vy;
  model.add_term({0, 0}, onsite);

  // orbital 2 of cell x -> orbital 1 of cell x+1 with u_x
  CMatrix right = zero_block(3);
  right(0, 1) = p.u_x;
  model.add_term({1, 0}, right);

  // orbital 1 of cell x -> orbital 2 of cell x-1 with v_x
  CMatrix left = zero_block(3);
  left(1, 0) = p.v_x;
  model.add_term({-1, 0}, left);
  return model;
}

HoppingModel kagome_model(const KagomeParams& p) {
  HoppingModel model("kagome", 3, 2,
                     {{"u_x", p.u_x}, {"v_x", p.v_x}, {"u_y", p.u_y}, {"v_y", p.v_y}, {"t_c", p.t_c}});
  const auto c = third_orbital(p.u_y, p.v_y, p.t_c, p.reading);

  CMatrix v = zero_block(3);
  v(0, 1) = p.v_x;
  v(1, 0) = p.u_x;
  v(0, 2) = c.uy;
  v(1, 2) = c.uy;
  v(2, 0) = c.vy;
  v(2, 1) = c.vy;
  model.add_term({0, 0}, v);

  CMatrix vx_plus = zero_block(3);
  vx_plus(1, 0) = p.v_x;
  model.add_term({-1, 0}, vx_plus);

  CMatrix vx_minus = zero_block(3);
  vx_minus(0, 1) = p.u_x;
  model.add_term({1, 0}, vx_minus);

  // V_y^+ carries the v_y entries, V_y^- the u_y entries
  CMatrix vy_plus = zero_block(3);
  vy_plus(0, 2) = c.vy;
  vy_plus(1, 2) = c.vy;
  model.add_term({0, -1}, vy_plus);

  CMatrix vy_minus = zero_block(3);
  vy_minus(2, 0) = c.uy;
  vy_minus(2, 1) = c.uy;
  model.add_term({0, 1}, vy_minus);
  return model;
}

CMatrix bloch_matrix(const HoppingModel& model, std::span<const double> k) {
  if (static_cast<int>(k.size()) != model.dim()) {
    throw InvalidArgument("bloch_matrix: momentum has " + std::to_string(k.size()) +
                          " components, model '" + model.name() + "' is " +
                          std::to_string(model.dim()) + "D");
  }
  CMatrix h = CMatrix::Zero(model.bands(), model.bands());
  for (const auto& term : model.terms()) {
    double phase = k[0] * term.displacement[0];
    if (model.dim() == 2) phase += k[1] * term.displacement[1];
    h += term.block * std::polar(1.0, phase);
  }
  return h;
}

CMatrix bloch_matrix(const HoppingModel& model, double kx, double ky) {
  const std::array<double, 2> k{kx, ky};
  return bloch_matrix(model, std::span<const double>(k.data(), model.dim()));
}

namespace {

void check_geometry(const HoppingModel& model, const Geometry& geom) {
  if (geom.bands != model.bands()) {
    throw InvalidArgument("geometry has " + std::to_string(geom.bands) + " bands, model '" +
                          model.name() + "' has " + std::to_string(model.bands()));
  }
  if (model.dim() == 1 && geom.Ly != 1) {
    throw InvalidArgument("1D model '" + model.name() + "' requires L_y = 1");
  }
  if (model.max_abs_dx() >= geom.Lx && model.max_abs_dx() > 0) {
    throw InvalidArgument("model '" + model.name() + "' hops " +
                          std::to_string(model.max_abs_dx()) + " cells in x but L_x = " +
                          std::to_string(geom.Lx) + "; hops may not wrap more than once");
  }
  if (model.max_abs_dy() >= geom.Ly && model.max_abs_dy() > 0) {
    throw InvalidArgument("model '" + model.name() + "' hops " +
                          std::to_string(model.max_abs_dy()) + " cells in y but L_y = " +
                          std::to_string(geom.Ly) + "; hops may not wrap more than once");
  }
}

// Calls emit(target_site, source_site, scale, block) for every placed block.
template <typename Emit>
void for_each_placement(const HoppingModel& model, const Geometry& geom,
                        const BoundarySpec& bc, Emit&& emit) {
  check_geometry(model, geom);
  const int B = geom.bands;
  for (const auto& term : model.terms()) {
    const auto [dx, dy] = term.displacement;
    for (int y = 0; y < geom.Ly; ++y) {
      for (int x = 0; x < geom.Lx; ++x) {
        int tx = x + dx;
        int ty = y + dy;
        double scale = 1.0;
        if (!wrap(tx, geom.Lx)) scale *= bc.beta_x;
        if (!wrap(ty, geom.Ly)) scale *= bc.beta_y;
        if (scale == 0.0) continue;
        const auto target = (static_cast<std::size_t>(ty) * geom.Lx + tx) * B;
        const auto source = (static_cast<std::size_t>(y) * geom.Lx + x) * B;
        emit(target, source, scale, term.block);
      }
    }
  }
}

}  // namespace

CMatrix real_space_matrix(const HoppingModel& model, const Geometry& geom,
                          const BoundarySpec& bc) {
  const auto n = static_cast<Eigen::Index>(geom.size());
  CMatrix h = CMatrix::Zero(n, n);
  const int B = geom.bands;
  for_each_placement(model, geom, bc,
                     [&](std::size_t target, std::size_t source, double scale, const CMatrix& block) {
                       h.block(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(source), B, B) +=
                           scale * block;
                     });
  return h;
}

SparseCMatrix real_space_sparse(const HoppingModel& model, const Geometry& geom,
                                const BoundarySpec& bc) {
  const auto n = static_cast<Eigen::Index>(geom.size());
  std::vector<Eigen::Triplet<cplx>> triplets;
  const int B = geom.bands;
  for_each_placement(model, geom, bc,
                     [&](std::size_t target, std::size_t source, double scale, const CMatrix& block) {
                       for (int i = 0; i < B; ++i) {
                         for (int j = 0; j < B; ++j) {
                           if (block(i, j) == cplx(0.0)) continue;
                           triplets.emplace_back(static_cast<Eigen::Index>(target) + i,
                                                 static_cast<Eigen::Index>(source) + j,
                                                 scale * block(i, j));
                         }
                       }
                     });
  SparseCMatrix h(n, n);
  h.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

CMatrix supercell_matrix(const HoppingModel& model, int Ly, double beta_y, double kx) {
  if (model.dim() == 1) {
    if (Ly != 1) throw InvalidArgument("supercell of a 1D model requires L_y = 1");
    return bloch_matrix(model, kx);
  }
  if (Ly < 1) throw InvalidArgument("supercell L_y must be positive");
  if (model.max_abs_dy() >= Ly && model.max_abs_dy() > 0) {
    throw InvalidArgument("supercell L_y = " + std::to_string(Ly) +
                          " is not larger than the model's y hop range");
  }
  const int B = model.bands();
  CMatrix h = CMatrix::Zero(static_cast<Eigen::Index>(Ly) * B, static_cast<Eigen::Index>(Ly) * B);
  for (const auto& term : model.terms()) {
    const cplx phase = std::polar(1.0, kx * term.displacement[0]);
    for (int y = 0; y < Ly; ++y) {
      int ty = y + term.displacement[1];
      double scale = 1.0;
      if (!wrap(ty, Ly)) scale = beta_y;
      if (scale == 0.0) continue;
      h.block(static_cast<Eigen::Index>(ty) * B, static_cast<Eigen::Index>(y) * B, B, B) +=
          (scale * phase) * term.block;
    }
  }
  return h;
}

ParamMap model_defaults(const std::string& name) {
  if (name == "one_band") return {{"r", 0.5}, {"N", 2.0}};
  if (name == "size") return {{"t_0", 0.1}, {"r", 0.5}, {"N", 3.0}};
  if (name == "benchmark") return {{"t_0", 0.1}, {"kappa_x", 0.013}};
  if (name == "three_band") {
    return {{"u_x", 1.1}, {"v_x", 1.0 / 1.1}, {"u_y", 1.0}, {"v_y", 1.0},
            {"gamma", 0.0005}, {"t_c", 0.5}};
  }
  if (name == "kagome") {
    return {{"u_x", 1.1}, {"v_x", 1.0 / 1.1}, {"u_y", 3.0}, {"v_y", 1.0 / 3.0}, {"t_c", 0.5}};
  }
  throw InvalidArgument("unknown model '" + name + "'");
}

std::vector<std::string> model_names() {
  return {"one_band", "size", "benchmark", "three_band", "kagome"};
}

std::array<int, 2> model_default_extent(const std::string& name) {
  if (name == "one_band") return {60, 1};
  if (name == "size" || name == "benchmark") return {60, 2};
  if (name == "three_band") return {20, 1};
  if (name == "kagome") return {120, 8};
  throw InvalidArgument("unknown model '" + name + "'");
}

HoppingModel make_model(const std::string& name, const ParamMap& params,
                        CouplingReading reading) {
  ParamMap p = model_defaults(name);
  for (const auto& [key, value] : params) {
    if (!p.contains(key)) {
      throw InvalidArgument("model '" + name + "' has no parameter '" + key + "'");
    }
    p[key] = value;
  }
  if (name == "one_band") return one_band_model(p["r"], require_integer(p["N"], "N"));
  if (name == "size") return size_model(p["t_0"], p["r"], require_integer(p["N"], "N"));
  if (name == "benchmark") return benchmark_model(p["t_0"], p["kappa_x"]);
  if (name == "three_band") {
    return three_band_model({p["u_x"], p["v_x"], p["u_y"], p["v_y"], p["gamma"], p["t_c"], reading});
  }
  return kagome_model({p["u_x"], p["v_x"], p["u_y"], p["v_y"], p["t_c"], reading});
}

}  // namespace nhse
