#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "nhse/lattice.hpp"

namespace nhse {

/// Residual bound above which a decomposition is flagged unreliable.
inline constexpr double kResidualBound = 1e-8;
/// Default x-IPR classification threshold.
inline constexpr double kDefaultTau = 1e-3;

/// Full right eigensystem of a real-space matrix, sorted by (Re E, Im E).
struct EigenSystem {
  CVector eigenvalues;
  CMatrix vectors;                 ///< column i is the unit-norm right vector of eigenvalue i
  Eigen::VectorXd residuals;       ///< ||H psi - E psi||_2 / ||H||_F
  Geometry geom;
  double max_residual = 0.0;
  bool reliable = true;            ///< max_residual <= kResidualBound

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// Dense non-symmetric eigendecomposition. Matrices that are real up to a uniform
/// imaginary diagonal shift take the real LAPACK path. Throws NumericalError on
/// non-finite input and InvalidArgument on a size mismatch with geom.
EigenSystem eigendecompose(const CMatrix& m, const Geometry& geom);

/// Eigenvalues only, same ordering as eigendecompose.
CVector eigenvalues_only(const CMatrix& m);

void sort_spectrum(CVector& values);

struct XIpr {
  double value = 0.0;
  double x_center = 0.0;
};

/// Signed normalized inverse participation ratio along x. Positive means the state
/// sits toward x = L_x.
XIpr x_ipr(const Eigen::Ref<const CVector>& psi, const Geometry& geom);

/// Eigenvalues closer than this (relative to max(1, max|E|)) form one degenerate cluster.
inline constexpr double kDegeneracyTolerance = 1e-9;

/// x-IPR of every mode. Inside a degenerate cluster the solver's basis is arbitrary,
/// so it is replaced: if the cluster's mean density (over an orthonormal basis of its
/// span) is x-mirror symmetric, every member gets that density's x-IPR; otherwise the
/// members take the basis that diagonalizes the position operator projected onto
/// the span.
std::vector<XIpr> mode_x_ipr(const EigenSystem& es);

double mean_x_ipr(const EigenSystem& es);

enum class SkinLabel { Right, Left, Bulk };
std::string to_string(SkinLabel label);

struct SkinReport {
  std::vector<double> x_ipr;
  std::vector<double> x_center;
  std::vector<SkinLabel> labels;
  double mean_x_ipr = 0.0;
  double tau = kDefaultTau;

  std::size_t count(SkinLabel label) const;
};

SkinReport classify_modes(const EigenSystem& es, double tau = kDefaultTau);
SkinLabel label_for(double x_ipr_value, double tau);

/// Index of max Im E; ties by larger Re E, then lower index.
std::size_t dominant_index(const CVector& eigenvalues);

struct DominantMode {
  std::size_t index = 0;
  cplx energy;
  CVector psi;
};
DominantMode dominant_mode(const EigenSystem& es);

/// p(x) = sum over y and orbitals of |psi|^2, normalized to sum 1. Entry x-1 holds cell x.
Eigen::VectorXd y_marginal_density(const Eigen::Ref<const CVector>& psi, const Geometry& geom);

/// Largest pairwise distance of a point set (convex hull based).
double spectral_diameter(const std::vector<cplx>& points);
double spectral_diameter(const CVector& points);

/// max(sup_a inf_b |a-b|, sup_b inf_a |a-b|).
double hausdorff_distance(const CVector& a, const CVector& b);

/// Minimum-cost perfect matching between equal-size sets (Hungarian algorithm on
/// |a_i - b_j|). Returns the largest matched distance.
double matched_max_distance(const CVector& a, const CVector& b);

/// Branch energies of the effective 1D chain (x periodic, y kept in real space) over
/// k_x in [0, 2 pi).
struct SpectralLoop {
  std::vector<double> k_samples;
  std::vector<std::vector<cplx>> branch_energies;  ///< [sample][branch]
  bool closed = true;  ///< the last sample connects back to k = 0 within the jump threshold
  double max_jump = 0.0;

  std::vector<cplx> points() const;
  std::size_t branches() const { return branch_energies.empty() ? 0 : branch_energies.front().size(); }
};

/// geom supplies L_y, bc supplies beta_y; beta_x plays no role (x is always periodic).
SpectralLoop pbc_loop(const HoppingModel& model, const Geometry& geom, const BoundarySpec& bc,
                      int resolution);

/// Evaluator kx -> H_supercell(kx).
using SupercellFn = std::function<CMatrix(double)>;

struct WindingResult {
  int winding = 0;
  double raw = 0.0;
  double loop_distance = 0.0;
};

/// Winding of det(H(kx) - E0) around zero as kx runs over [0, 2 pi). The loop supplies
/// the on-loop guard (distance must exceed 1e-6 times its diameter).
WindingResult winding_number(const SupercellFn& h, const SpectralLoop& loop, cplx e0,
                             int resolution);
WindingResult winding_number(const HoppingModel& model, int Ly, double beta_y, cplx e0,
                             int resolution);

struct CorrespondenceReport {
  std::size_t checked = 0;
  std::size_t skipped = 0;  ///< near the loop, zero winding, or below tau
  std::size_t violations = 0;
  int orientation = 1;      ///< +1: positive winding goes with Right
};

/// Sign relation between winding about each OBC eigenvalue and its x-IPR sign,
/// calibrated on the N = 1 chain.
int correspondence_orientation();

CorrespondenceReport winding_skin_correspondence(const HoppingModel& model,
                                                 const Geometry& geom, int resolution,
                                                 double tau = kDefaultTau);

}  // namespace nhse
