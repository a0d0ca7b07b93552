#include "nhse/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <tuple>
#include <sstream>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "nhse/error.hpp"

namespace nhse {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool spectrum_less(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

void check_finite(const CMatrix& m) {
  if (!m.allFinite()) throw NumericalError("matrix has non-finite entries");
}

// If m = A + i*c*I with A real, returns c.
std::optional<double> uniform_imaginary_shift(const CMatrix& m) {
  const double c = m(0, 0).imag();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double im = m(i, j).imag();
      if (i == j ? im != c : im != 0.0) return std::nullopt;
    }
  }
  return c;
}

struct RawEigen {
  CVector values;
  CMatrix vectors;  // empty when not requested
};

RawEigen real_geev(const Eigen::MatrixXd& a, bool want_vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXd work = a;
  Eigen::VectorXd wr(n), wi(n);
  Eigen::MatrixXd vr(want_vectors ? n : 1, want_vectors ? n : 1);
  double dummy = 0.0;
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n, work.data(), n, wr.data(),
                    wi.data(), &dummy, 1, vr.data(), want_vectors ? n : 1);
  if (info != 0) throw NumericalError("dgeev failed with info = " + std::to_string(info));

  RawEigen out;
  out.values.resize(n);
  for (lapack_int i = 0; i < n; ++i) out.values(i) = cplx(wr(i), wi(i));
  if (!want_vectors) return out;
  out.vectors.resize(n, n);
  for (lapack_int j = 0; j < n; ++j) {
    if (wi(j) == 0.0) {
      out.vectors.col(j) = vr.col(j).cast<cplx>();
    } else {
      // conjugate pair stored as (re, im) columns
      const CVector v = vr.col(j).cast<cplx>() + cplx(0.0, 1.0) * vr.col(j + 1).cast<cplx>();
      out.vectors.col(j) = v;
      out.vectors.col(j + 1) = v.conjugate();
      ++j;
    }
  }
  return out;
}

RawEigen complex_geev(const CMatrix& m, bool want_vectors) {
  const auto n = static_cast<lapack_int>(m.rows());
  CMatrix work = m;
  CVector w(n);
  CMatrix vr(want_vectors ? n : 1, want_vectors ? n : 1);
  cplx dummy;
  const lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n, work.data(), n, w.data(),
                    &dummy, 1, vr.data(), want_vectors ? n : 1);
  if (info != 0) throw NumericalError("zgeev failed with info = " + std::to_string(info));
  RawEigen out;
  out.values = std::move(w);
  if (want_vectors) out.vectors = std::move(vr);
  return out;
}

RawEigen raw_eigen(const CMatrix& m, bool want_vectors) {
  if (m.rows() != m.cols()) throw InvalidArgument("eigendecomposition needs a square matrix");
  check_finite(m);
  if (m.rows() == 0) return {};
  if (const auto shift = uniform_imaginary_shift(m)) {
    RawEigen out = real_geev(m.real(), want_vectors);
    out.values.array() += cplx(0.0, *shift);
    return out;
  }
  return complex_geev(m, want_vectors);
}

std::vector<Eigen::Index> sorted_order(const CVector& values) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return spectrum_less(values(a), values(b));
  });
  return order;
}

double wrap_phase(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace

void sort_spectrum(CVector& values) {
  std::sort(values.data(), values.data() + values.size(), spectrum_less);
}

EigenSystem eigendecompose(const CMatrix& m, const Geometry& geom) {
  if (static_cast<std::size_t>(m.rows()) != geom.size()) {
    std::ostringstream msg;
    msg << "matrix dimension " << m.rows() << " does not match geometry size " << geom.size();
    throw InvalidArgument(msg.str());
  }
  RawEigen raw = raw_eigen(m, true);
  const auto n = m.rows();
  const auto order = sorted_order(raw.values);

  EigenSystem es;
  es.geom = geom;
  es.eigenvalues.resize(n);
  es.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    es.eigenvalues(i) = raw.values(src);
    CVector v = raw.vectors.col(src);
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericalError("eigenvector " + std::to_string(i) + " has zero or non-finite norm");
    }
    v /= norm;
    // fix the global phase: largest component real positive
    Eigen::Index imax = 0;
    v.cwiseAbs2().maxCoeff(&imax);
    v *= std::conj(v(imax)) / std::abs(v(imax));
    es.vectors.col(i) = v;
  }

  const SparseCMatrix sparse = m.sparseView();
  const double scale = m.norm();
  CMatrix r = sparse * es.vectors;
  r -= es.vectors * es.eigenvalues.asDiagonal();
  es.residuals = r.colwise().norm().transpose();
  if (scale > 0.0) es.residuals /= scale;
  es.max_residual = n > 0 ? es.residuals.maxCoeff() : 0.0;
  es.reliable = es.max_residual <= kResidualBound;
  return es;
}

CVector eigenvalues_only(const CMatrix& m) {
  CVector values = raw_eigen(m, false).values;
  sort_spectrum(values);
  return values;
}

namespace {

XIpr density_x_ipr(const Eigen::VectorXd& p, const Geometry& geom) {
  const double total = p.sum();
  if (!(total > 0.0)) throw InvalidArgument("x_ipr of a zero vector");

  double xsum = 0.0;
  for (Eigen::Index s = 0; s < p.size(); ++s) {
    xsum += geom.x_of(static_cast<std::size_t>(s)) * p(s);
  }
  const double xc = xsum / total;
  const bool degenerate = geom.Lx - xc < 1e-9 * geom.Lx;
  // xc can round onto L_x; keep the other (vanishing) terms finite
  const double den = std::max(geom.Lx - xc, std::numeric_limits<double>::epsilon() * geom.Lx);

  double acc = 0.0;
  for (Eigen::Index s = 0; s < p.size(); ++s) {
    if (p(s) == 0.0) continue;
    const int x = geom.x_of(static_cast<std::size_t>(s));
    const double w = (degenerate && x == geom.Lx) ? 1.0 : (x - xc) / den;
    acc += w * p(s) * p(s);
  }
  return {acc / (total * total), xc};
}

// Groups of (numerically) equal eigenvalues; eigenvalues arrive sorted by Re E.
std::vector<std::vector<std::size_t>> degenerate_clusters(const CVector& e) {
  const auto n = static_cast<std::size_t>(e.size());
  const double delta = kDegeneracyTolerance * std::max(1.0, n > 0 ? e.cwiseAbs().maxCoeff() : 0.0);
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const cplx a = e(static_cast<Eigen::Index>(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx b = e(static_cast<Eigen::Index>(j));
      if (b.real() - a.real() > delta) break;
      if (std::abs(b - a) <= delta) parent[find(j)] = find(i);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups) {
    if (members.size() > 1) out.push_back(std::move(members));
  }
  return out;
}

}  // namespace

XIpr x_ipr(const Eigen::Ref<const CVector>& psi, const Geometry& geom) {
  if (static_cast<std::size_t>(psi.size()) != geom.size()) {
    throw InvalidArgument("state length does not match geometry");
  }
  return density_x_ipr(psi.cwiseAbs2(), geom);
}

namespace {

// Column sums of p and p^2 agree under x -> L_x + 1 - x, which is all the x-IPR sees.
bool mirror_symmetric(const Eigen::VectorXd& p, const Geometry& geom) {
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(geom.Lx), m2 = Eigen::VectorXd::Zero(geom.Lx);
  for (Eigen::Index s = 0; s < p.size(); ++s) {
    const int x = geom.x_of(static_cast<std::size_t>(s)) - 1;
    m1(x) += p(s);
    m2(x) += p(s) * p(s);
  }
  const double tol1 = 1e-8 * m1.cwiseAbs().maxCoeff(), tol2 = 1e-8 * m2.cwiseAbs().maxCoeff();
  for (int x = 0; x < geom.Lx; ++x) {
    if (std::abs(m1(x) - m1(geom.Lx - 1 - x)) > tol1 || std::abs(m2(x) - m2(geom.Lx - 1 - x)) > tol2) return false;
  }
  return true;
}

}  // namespace

std::vector<XIpr> mode_x_ipr(const EigenSystem& es) {
  const std::size_t n = es.size();
  std::vector<XIpr> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x_ipr(es.vectors.col(static_cast<Eigen::Index>(i)), es.geom);
  for (const auto& members : degenerate_clusters(es.eigenvalues)) {
    CMatrix span(es.vectors.rows(), static_cast<Eigen::Index>(members.size()));
    for (std::size_t c = 0; c < members.size(); ++c) {
      span.col(static_cast<Eigen::Index>(c)) = es.vectors.col(static_cast<Eigen::Index>(members[c]));
    }
    Eigen::ColPivHouseholderQR<CMatrix> qr(span);
    qr.setThreshold(1e-8);
    const Eigen::Index rank = std::max<Eigen::Index>(qr.rank(), 1);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(span.rows(), rank);
    const Eigen::VectorXd p = q.cwiseAbs2().rowwise().sum() / static_cast<double>(rank);
    if (mirror_symmetric(p, es.geom)) {
      // no preferred side: the whole eigenspace shares its mixed-state value
      const XIpr shared = density_x_ipr(p, es.geom);
      for (std::size_t i : members) out[i] = shared;
      continue;
    }
    // otherwise resolve the eigenspace into its maximally x-localized basis
    Eigen::VectorXd x(span.rows());
    for (Eigen::Index s = 0; s < x.size(); ++s) x(s) = es.geom.x_of(static_cast<std::size_t>(s));
    const CMatrix projected = q.adjoint() * x.asDiagonal() * q;
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(projected);
    const CMatrix basis = q * solver.eigenvectors();
    for (Eigen::Index c = 0; c < rank; ++c) out[members[static_cast<std::size_t>(c)]] = x_ipr(basis.col(c), es.geom);
  }
  return out;
}

double mean_x_ipr(const EigenSystem& es) {
  if (es.size() == 0) return 0.0;
  double sum = 0.0;
  for (const XIpr& r : mode_x_ipr(es)) sum += r.value;
  return sum / static_cast<double>(es.size());
}

std::string to_string(SkinLabel label) {
  switch (label) {
    case SkinLabel::Right: return "right";
    case SkinLabel::Left: return "left";
    case SkinLabel::Bulk: return "bulk";
  }
  return "bulk";
}

std::size_t SkinReport::count(SkinLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

SkinLabel label_for(double value, double tau) {
  if (value > tau) return SkinLabel::Right;
  if (value < -tau) return SkinLabel::Left;
  return SkinLabel::Bulk;
}

SkinReport classify_modes(const EigenSystem& es, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("classification threshold tau must be positive");
  SkinReport report;
  report.tau = tau;
  const std::size_t n = es.size();
  report.x_ipr.reserve(n);
  report.x_center.reserve(n);
  report.labels.reserve(n);
  double sum = 0.0;
  const std::vector<XIpr> values = mode_x_ipr(es);
  for (std::size_t i = 0; i < n; ++i) {
    const XIpr& r = values[i];
    report.x_ipr.push_back(r.value);
    report.x_center.push_back(r.x_center);
    report.labels.push_back(label_for(r.value, tau));
    sum += r.value;
  }
  report.mean_x_ipr = n > 0 ? sum / static_cast<double>(n) : 0.0;
  return report;
}

std::size_t dominant_index(const CVector& eigenvalues) {
  if (eigenvalues.size() == 0) throw InvalidArgument("dominant mode of an empty spectrum");
  std::size_t best = 0;
  for (std::size_t i = 1; i < static_cast<std::size_t>(eigenvalues.size()); ++i) {
    const cplx e = eigenvalues(static_cast<Eigen::Index>(i));
    const cplx b = eigenvalues(static_cast<Eigen::Index>(best));
    if (e.imag() > b.imag() || (e.imag() == b.imag() && e.real() > b.real())) best = i;
  }
  return best;
}

DominantMode dominant_mode(const EigenSystem& es) {
  const std::size_t i = dominant_index(es.eigenvalues);
  return {i, es.eigenvalues(static_cast<Eigen::Index>(i)),
          es.vectors.col(static_cast<Eigen::Index>(i))};
}

Eigen::VectorXd y_marginal_density(const Eigen::Ref<const CVector>& psi, const Geometry& geom) {
  if (static_cast<std::size_t>(psi.size()) != geom.size()) {
    throw InvalidArgument("state length does not match geometry");
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(geom.Lx);
  for (Eigen::Index s = 0; s < psi.size(); ++s) {
    p(geom.x_of(static_cast<std::size_t>(s)) - 1) += std::norm(psi(s));
  }
  const double total = p.sum();
  if (!(total > 0.0)) throw InvalidArgument("marginal density of a zero vector");
  return p / total;
}

double spectral_diameter(const std::vector<cplx>& points) {
  if (points.size() < 2) return 0.0;
  // Andrew's monotone chain, then brute force over hull vertices.
  std::vector<cplx> pts = points;
  std::sort(pts.begin(), pts.end(), spectrum_less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return std::abs(pts.front() - pts.back());
  auto cross = [](cplx o, cplx a, cplx b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) -
           (a.imag() - o.imag()) * (b.real() - o.real());
  };
  std::vector<cplx> hull(2 * pts.size());
  std::size_t k = 0;
  for (const cplx& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) best = std::max(best, std::abs(hull[i] - hull[j]));
  }
  return best;
}

double spectral_diameter(const CVector& points) {
  return spectral_diameter(std::vector<cplx>(points.data(), points.data() + points.size()));
}

namespace {

double directed_hausdorff(const CVector& a, const CVector& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b.size(); ++j) nearest = std::min(nearest, std::norm(a(i) - b(j)));
    worst = std::max(worst, nearest);
  }
  return std::sqrt(worst);
}

}  // namespace

double hausdorff_distance(const CVector& a, const CVector& b) {
  if (a.size() == 0 || b.size() == 0) throw InvalidArgument("Hausdorff distance of an empty set");
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

double matched_max_distance(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) throw InvalidArgument("matching needs equal-size sets");
  const auto n = static_cast<std::size_t>(a.size());
  if (n == 0) return 0.0;
  // Hungarian algorithm (potentials, 1-based arrays).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  auto cost = [&](std::size_t i, std::size_t j) {
    return std::abs(a(static_cast<Eigen::Index>(i - 1)) - b(static_cast<Eigen::Index>(j - 1)));
  };
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double worst = 0.0;
  for (std::size_t j = 1; j <= n; ++j) worst = std::max(worst, cost(p[j], j));
  return worst;
}

std::vector<cplx> SpectralLoop::points() const {
  std::vector<cplx> out;
  for (const auto& row : branch_energies) out.insert(out.end(), row.begin(), row.end());
  return out;
}

namespace {

// Greedy nearest-pair assignment of next onto prev; returns next reordered.
std::vector<cplx> match_branches(const std::vector<cplx>& prev, const std::vector<cplx>& next) {
  const std::size_t n = prev.size();
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  pairs.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) pairs.emplace_back(std::norm(prev[i] - next[j]), i, j);
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<cplx> out(n);
  std::vector<char> done_prev(n, 0), done_next(n, 0);
  std::size_t assigned = 0;
  for (const auto& [d, i, j] : pairs) {
    if (done_prev[i] || done_next[j]) continue;
    out[i] = next[j];
    done_prev[i] = done_next[j] = 1;
    if (++assigned == n) break;
  }
  return out;
}

double max_branch_jump(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<cplx> sample_loop(const HoppingModel& model, int Ly, double beta_y, double kx) {
  const CVector e = eigenvalues_only(supercell_matrix(model, Ly, beta_y, kx));
  return {e.data(), e.data() + e.size()};
}

constexpr int kMaxLoopRefinements = 6;

}  // namespace

SpectralLoop pbc_loop(const HoppingModel& model, const Geometry& geom, const BoundarySpec& bc,
                      int resolution) {
  if (resolution < 2) throw InvalidArgument("loop resolution must be at least 2");
  const int Ly = model.dim() == 1 ? 1 : geom.Ly;
  std::vector<double> ks;
  std::vector<std::vector<cplx>> raw;
  for (int j = 0; j < resolution; ++j) {
    const double k = 2.0 * kPi * j / resolution;
    ks.push_back(k);
    raw.push_back(sample_loop(model, Ly, bc.beta_y, k));
  }
  std::vector<cplx> all;
  for (const auto& r : raw) all.insert(all.end(), r.begin(), r.end());
  const double threshold = 0.05 * spectral_diameter(all);

  SpectralLoop loop;
  for (int pass = 0;; ++pass) {
    // match along k in order
    loop.k_samples = ks;
    loop.branch_energies.assign(raw.size(), {});
    loop.branch_energies[0] = raw[0];
    for (std::size_t j = 1; j < raw.size(); ++j) {
      loop.branch_energies[j] = match_branches(loop.branch_energies[j - 1], raw[j]);
    }
    if (pass == kMaxLoopRefinements || threshold == 0.0) break;

    std::vector<double> new_ks;
    std::vector<std::vector<cplx>> new_raw;
    bool refined = false;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      new_ks.push_back(ks[j]);
      new_raw.push_back(raw[j]);
      if (j + 1 < ks.size() &&
          max_branch_jump(loop.branch_energies[j], loop.branch_energies[j + 1]) > threshold) {
        const double mid = 0.5 * (ks[j] + ks[j + 1]);
        new_ks.push_back(mid);
        new_raw.push_back(sample_loop(model, Ly, bc.beta_y, mid));
        refined = true;
      }
    }
    if (!refined) break;
    ks = std::move(new_ks);
    raw = std::move(new_raw);
  }

  loop.max_jump = 0.0;
  for (std::size_t j = 0; j + 1 < loop.branch_energies.size(); ++j) {
    loop.max_jump =
        std::max(loop.max_jump, max_branch_jump(loop.branch_energies[j], loop.branch_energies[j + 1]));
  }
  // closure: last sample against the (possibly permuted) k = 0 set
  const auto wrapped = match_branches(loop.branch_energies.back(), loop.branch_energies.front());
  loop.closed = max_branch_jump(loop.branch_energies.back(), wrapped) <= threshold;
  return loop;
}

namespace {

double det_phase(const SupercellFn& h, double k, cplx e0) {
  CMatrix m = h(k);
  m.diagonal().array() -= e0;
  if (m.rows() == 1) return std::arg(m(0, 0));
  Eigen::PartialPivLU<CMatrix> lu(m);
  const CMatrix& packed = lu.matrixLU();
  double phase = lu.permutationP().determinant() < 0 ? kPi : 0.0;
  for (Eigen::Index i = 0; i < packed.rows(); ++i) phase += std::arg(packed(i, i));
  return phase;
}

constexpr int kMaxWindingDepth = 12;

double accumulate(const SupercellFn& h, cplx e0, double k0, double k1, double p0, double p1,
                  int depth) {
  const double step = wrap_phase(p1 - p0);
  if (std::abs(step) <= kPi / 2) return step;
  if (depth >= kMaxWindingDepth) {
    throw NumericalError("winding phase unwrap failed after " + std::to_string(kMaxWindingDepth) +
                         " refinements");
  }
  const double km = 0.5 * (k0 + k1);
  const double pm = det_phase(h, km, e0);
  return accumulate(h, e0, k0, km, p0, pm, depth + 1) + accumulate(h, e0, km, k1, pm, p1, depth + 1);
}

}  // namespace

WindingResult winding_number(const SupercellFn& h, const SpectralLoop& loop, cplx e0,
                             int resolution) {
  if (resolution < 2) throw InvalidArgument("winding resolution must be at least 2");
  const auto pts = loop.points();
  const double diameter = spectral_diameter(pts);
  double dist = std::numeric_limits<double>::infinity();
  for (const cplx& p : pts) dist = std::min(dist, std::abs(p - e0));
  if (!(dist > 1e-6 * diameter)) {
    std::ostringstream msg;
    msg << "reference energy " << e0 << " lies on the spectral loop (distance " << dist << ")";
    throw NumericalError(msg.str());
  }
  double total = 0.0;
  double prev_k = 0.0;
  double prev_p = det_phase(h, 0.0, e0);
  const double first_p = prev_p;
  for (int j = 1; j <= resolution; ++j) {
    const double k = 2.0 * kPi * j / resolution;
    const double p = j == resolution ? first_p : det_phase(h, k, e0);
    total += accumulate(h, e0, prev_k, k, prev_p, p, 0);
    prev_k = k;
    prev_p = p;
  }
  WindingResult result;
  result.raw = total / (2.0 * kPi);
  result.winding = static_cast<int>(std::lround(result.raw));
  result.loop_distance = dist;
  if (std::abs(result.raw - result.winding) >= 0.01) {
    throw NumericalError("winding number not integral: " + std::to_string(result.raw));
  }
  return result;
}

WindingResult winding_number(const HoppingModel& model, int Ly, double beta_y, cplx e0,
                             int resolution) {
  const Geometry geom(1, model.dim() == 1 ? 1 : Ly, model.bands());
  const SpectralLoop loop = pbc_loop(model, geom, BoundarySpec(1.0, beta_y), resolution);
  const int ly = geom.Ly;
  return winding_number([&](double k) { return supercell_matrix(model, ly, beta_y, k); }, loop, e0,
                        resolution);
}

namespace {

CorrespondenceReport correspondence_counts(const HoppingModel& model, const Geometry& geom,
                                           int resolution, double tau, int orientation) {
  const int Ly = model.dim() == 1 ? 1 : geom.Ly;
  const EigenSystem es = eigendecompose(real_space_matrix(model, geom, BoundarySpec::open()), geom);
  const SkinReport report = classify_modes(es, tau);
  const SpectralLoop loop = pbc_loop(model, geom, BoundarySpec(1.0, 0.0), resolution);
  const SupercellFn h = [&](double k) { return supercell_matrix(model, Ly, 0.0, k); };

  CorrespondenceReport out;
  out.orientation = orientation;
  for (std::size_t i = 0; i < es.size(); ++i) {
    if (report.labels[i] == SkinLabel::Bulk) {
      ++out.skipped;
      continue;
    }
    WindingResult w;
    try {
      w = winding_number(h, loop, es.eigenvalues(static_cast<Eigen::Index>(i)), resolution);
    } catch (const NumericalError&) {
      ++out.skipped;
      continue;
    }
    if (w.winding == 0) {
      ++out.skipped;
      continue;
    }
    ++out.checked;
    const int skin_sign = report.labels[i] == SkinLabel::Right ? 1 : -1;
    const int wind_sign = w.winding > 0 ? 1 : -1;
    if (skin_sign != orientation * wind_sign) ++out.violations;
  }
  return out;
}

}  // namespace

int correspondence_orientation() {
  static const int orientation = [] {
    const HoppingModel model = one_band_model(0.5, 1);
    const Geometry geom(20, 1, 1);
    const EigenSystem es = eigendecompose(real_space_matrix(model, geom, BoundarySpec::open()), geom);
    const SkinReport report = classify_modes(es, kDefaultTau);
    const std::size_t mid = es.size() / 2;
    const int w = winding_number(model, 1, 0.0, es.eigenvalues(static_cast<Eigen::Index>(mid)), 256).winding;
    if (w == 0 || report.labels[mid] == SkinLabel::Bulk) {
      throw NumericalError("winding orientation calibration failed");
    }
    const int skin = report.labels[mid] == SkinLabel::Right ? 1 : -1;
    return skin * (w > 0 ? 1 : -1);
  }();
  return orientation;
}

CorrespondenceReport winding_skin_correspondence(const HoppingModel& model, const Geometry& geom,
                                                 int resolution, double tau) {
  return correspondence_counts(model, geom, resolution, tau, correspondence_orientation());
}

}  // namespace nhse
