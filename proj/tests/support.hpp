#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nhse/lattice.hpp"
#include "nhse/spectral.hpp"

namespace nhse::testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Independent eigenvalue oracle (Eigen's complex QR iteration, no LAPACK).
inline CVector oracle_eigenvalues(const CMatrix& m) {
  Eigen::ComplexEigenSolver<CMatrix> solver(m, false);
  return solver.eigenvalues();
}

/// Union of Bloch eigenvalues over the momenta allowed by a fully periodic lattice.
inline CVector quantized_bloch_spectrum(const HoppingModel& model, const Geometry& geom) {
  CVector out(static_cast<Eigen::Index>(geom.size()));
  Eigen::Index k = 0;
  for (int ny = 0; ny < geom.Ly; ++ny) {
    for (int nx = 0; nx < geom.Lx; ++nx) {
      const double kx = kTwoPi * nx / geom.Lx;
      const double ky = kTwoPi * ny / geom.Ly;
      const CVector e = oracle_eigenvalues(bloch_matrix(model, kx, model.dim() == 2 ? ky : 0.0));
      for (Eigen::Index b = 0; b < e.size(); ++b) out(k++) = e(b);
    }
  }
  return out;
}

inline double max_abs_imag(const CVector& v) { return v.imag().cwiseAbs().maxCoeff(); }

}  // namespace nhse::testing
