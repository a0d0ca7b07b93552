#pragma once

#include <array>
#include <complex>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace nhse {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using SparseCMatrix = Eigen::SparseMatrix<cplx>;
using ParamMap = std::map<std::string, double>;

/// Cell displacement (dx, dy) = target cell - source cell. dy is always 0 for 1D models.
using Displacement = std::array<int, 2>;

struct HoppingTerm {
  Displacement displacement{};
  CMatrix block;  ///< B x B, row = target orbital, column = source orbital
};

/// How the coupling scale t_c enters the third-orbital entries of the 3-band and
/// Kagome models.
enum class CouplingReading {
  Scale,    ///< entries are t_c * u_y and t_c * v_y
  Replace,  ///< entries are t_c (u_y and v_y ignored)
};

CouplingReading parse_coupling_reading(const std::string& text);
std::string to_string(CouplingReading reading);

/// Multi-band tight-binding model stored as displacement-indexed hopping blocks.
///
/// Bloch convention: H(k) = sum_d block_d * exp(+i k.d). A term with displacement d
/// moves amplitude from cell r to cell r + d, so d = (+1, 0) hops toward larger x.
/// Terms sharing a displacement are merged by block addition.
class HoppingModel {
 public:
  HoppingModel(std::string name, int bands, int dim, ParamMap params = {});

  void add_term(Displacement d, const CMatrix& block);

  const std::string& name() const { return name_; }
  int bands() const { return bands_; }
  int dim() const { return dim_; }
  const ParamMap& params() const { return params_; }
  double param(const std::string& key) const;

  /// Terms ordered by displacement (lexicographic), which keeps matrix assembly
  /// deterministic.
  std::vector<HoppingTerm> terms() const;
  std::size_t term_count() const { return terms_.size(); }

  /// Block for displacement d, or a zero block when absent.
  CMatrix block(Displacement d) const;

  int max_abs_dx() const;
  int max_abs_dy() const;

 private:
  std::string name_;
  int bands_;
  int dim_;
  ParamMap params_;
  std::map<Displacement, CMatrix> terms_;
};

/// Lattice extents in cells. Site index convention (1-based cells, 0-based orbital):
/// index(x, y, b) = ((y - 1) * Lx + (x - 1)) * B + b.
struct Geometry {
  int Lx = 1;
  int Ly = 1;
  int bands = 1;

  Geometry() = default;
  Geometry(int lx, int ly, int b);

  std::size_t cells() const { return static_cast<std::size_t>(Lx) * Ly; }
  std::size_t size() const { return cells() * bands; }
  std::size_t index(int x, int y, int b) const;
  /// Cell x coordinate (1-based) of a site index.
  int x_of(std::size_t site) const;
  int y_of(std::size_t site) const;
};

/// Boundary interpolation: beta = 1 is periodic, beta = 0 open. Wraparound blocks are
/// scaled by beta.
struct BoundarySpec {
  double beta_x = 0.0;
  double beta_y = 0.0;

  BoundarySpec() = default;
  BoundarySpec(double bx, double by);

  static BoundarySpec open() { return {0.0, 0.0}; }
  static BoundarySpec periodic() { return {1.0, 1.0}; }
};

// Models. The parameter names stored in params() match the config keys.

/// 1D chain with symmetric nearest-neighbour hops plus a rightward hop r over N cells.
HoppingModel one_band_model(double r, int N);

/// 2D extension: unit x hops, t_0 y hops, and a hop r across (N, 1).
HoppingModel size_model(double t0, double r, int N);

/// 2D benchmark with intrinsic x skin depth 1/kappa_x.
HoppingModel benchmark_model(double t0, double kappa_x);

struct ThreeBandParams {
  double u_x = 1.1;
  double v_x = 1.0 / 1.1;
  double u_y = 1.0;
  double v_y = 1.0;
  double gamma = 0.0;
  double t_c = 1.0;
  CouplingReading reading = CouplingReading::Scale;
};

/// Three-orbital chain. Intra-cell block carries -i gamma on the diagonal, v_x and
/// u_x between orbitals 1 and 2, and the third-orbital couplings; the x hops follow
/// the real-space placement where u_x > v_x amplifies toward +x.
HoppingModel three_band_model(const ThreeBandParams& p);

struct KagomeParams {
  double u_x = 1.1;
  double v_x = 1.0 / 1.1;
  double u_y = 3.0;
  double v_y = 1.0 / 3.0;
  double t_c = 1.0;
  CouplingReading reading = CouplingReading::Scale;
};

/// Kagome lattice: on-site V, x blocks V_x^+ (d = (-1, 0)) and V_x^- (d = (+1, 0)),
/// y blocks V_y^+ (d = (0, -1)) and V_y^- (d = (0, +1)).
HoppingModel kagome_model(const KagomeParams& p);

/// Bloch matrix sum_d block_d exp(i k.d). k.size() must equal model.dim().
CMatrix bloch_matrix(const HoppingModel& model, std::span<const double> k);
CMatrix bloch_matrix(const HoppingModel& model, double kx, double ky = 0.0);

/// Real-space matrix with beta-scaled wraparound blocks (beta_x * beta_y for hops
/// wrapping both directions). Throws InvalidArgument if a hop spans the whole
/// lattice in some direction.
CMatrix real_space_matrix(const HoppingModel& model, const Geometry& geom,
                          const BoundarySpec& bc);

SparseCMatrix real_space_sparse(const HoppingModel& model, const Geometry& geom,
                                const BoundarySpec& bc);

/// Matrix of the effective 1D chain along x at momentum kx: x is Fourier transformed
/// (fully periodic), y kept in real space over Ly cells with boundary factor beta_y.
/// Dimension Ly * B. For 1D models (Ly must be 1) this is the Bloch matrix.
CMatrix supercell_matrix(const HoppingModel& model, int Ly, double beta_y, double kx);

/// Build a model by name from a parameter map; missing keys take the defaults listed
/// by model_defaults(). Known names: one_band, size, benchmark, three_band, kagome.
HoppingModel make_model(const std::string& name, const ParamMap& params,
                        CouplingReading reading = CouplingReading::Scale);

ParamMap model_defaults(const std::string& name);
std::vector<std::string> model_names();
/// Default lattice (Lx, Ly) used by the CLI for a model.
std::array<int, 2> model_default_extent(const std::string& name);

}  // namespace nhse
