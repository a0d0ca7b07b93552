#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nhse/error.hpp"
#include "nhse/spectral.hpp"
#include "support.hpp"

using namespace nhse;
using nhse::testing::kTwoPi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kPi = std::numbers::pi;

CVector profile(const Geometry& g, const std::function<double(int)>& amp) {
  CVector psi(static_cast<Eigen::Index>(g.size()));
  for (int y = 1; y <= g.Ly; ++y) {
    for (int x = 1; x <= g.Lx; ++x) {
      for (int b = 0; b < g.bands; ++b) psi(static_cast<Eigen::Index>(g.index(x, y, b))) = amp(x);
    }
  }
  return psi;
}

// direct summation of the signed x-IPR, kept independent of the library code
double brute_x_ipr(const CVector& psi, const Geometry& g) {
  long double norm = 0, xs = 0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const long double p = std::norm(psi(i));
    norm += p;
    xs += p * g.x_of(static_cast<std::size_t>(i));
  }
  const long double xc = xs / norm;
  long double acc = 0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const long double p = std::norm(psi(i));
    acc += (g.x_of(static_cast<std::size_t>(i)) - xc) / (g.Lx - xc) * p * p;
  }
  return static_cast<double>(acc / (norm * norm));
}

}  // namespace

TEST_CASE("eigendecomposition basics", "[spectral]") {
  SECTION("identity") {
    const EigenSystem es = eigendecompose(CMatrix::Identity(5, 5), Geometry(5, 1, 1));
    for (Eigen::Index i = 0; i < 5; ++i) {
      CHECK(std::abs(es.eigenvalues(i) - 1.0) < 1e-15);
      CHECK(es.residuals(i) < 1e-15);
    }
    CHECK(es.reliable);
  }
  SECTION("open one-band N = 1 chain is similar to a symmetric chain") {
    for (double r : {0.2, 0.5, 1.0}) {
      const Geometry g(20, 1, 1);
      const EigenSystem es = eigendecompose(real_space_matrix(one_band_model(r, 1), g, BoundarySpec::open()), g);
      CVector expected(20);
      for (int n = 1; n <= 20; ++n) expected(n - 1) = 2.0 * std::sqrt(1.0 + r) * std::cos(n * kPi / 21.0);
      CHECK(matched_max_distance(es.eigenvalues, expected) < 1e-8);
      CHECK(nhse::testing::max_abs_imag(es.eigenvalues) < 1e-8);
      CHECK(es.reliable);
    }
  }
  SECTION("periodic one-band chain") {
    const Geometry g(20, 1, 1);
    const EigenSystem es = eigendecompose(real_space_matrix(one_band_model(0.5, 1), g, BoundarySpec(1, 0)), g);
    CVector expected(20);
    for (int n = 0; n < 20; ++n) {
      const double k = kTwoPi * n / 20;
      expected(n) = 2.0 * std::cos(k) + 0.5 * std::exp(cplx(0, k));
    }
    CHECK(matched_max_distance(es.eigenvalues, expected) < 1e-10);
  }
  SECTION("errors") {
    CMatrix bad = CMatrix::Identity(3, 3);
    bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(eigendecompose(bad, Geometry(3, 1, 1)), NumericalError);
    CHECK_THROWS_AS(eigendecompose(CMatrix::Identity(3, 3), Geometry(4, 1, 1)), InvalidArgument);
  }
}

TEST_CASE("eigensystems agree with an independent solver", "[spectral][property]") {
  std::mt19937 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const int dim = 12 + 5 * trial;
    CMatrix m(dim, dim);
    const bool real_shift = trial % 2 == 0;
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) m(i, j) = real_shift ? cplx(n(rng), 0.0) : cplx(n(rng), n(rng));
    }
    if (real_shift) m.diagonal().array() += cplx(0.0, -0.3);
    const Geometry g(dim, 1, 1);
    const EigenSystem es = eigendecompose(m, g);
    INFO("trial " << trial);
    CHECK(matched_max_distance(es.eigenvalues, nhse::testing::oracle_eigenvalues(m)) < 1e-9);
    CHECK(es.reliable);
    for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i) {
      CHECK_THAT(es.vectors.col(i).norm(), WithinAbs(1.0, 1e-12));
      const double res = (m * es.vectors.col(i) - es.eigenvalues(i) * es.vectors.col(i)).norm() / m.norm();
      CHECK_THAT(es.residuals(i), WithinAbs(res, 1e-12));
      if (i > 0) {
        const cplx a = es.eigenvalues(i - 1), b = es.eigenvalues(i);
        CHECK((a.real() < b.real() || (a.real() == b.real() && a.imag() <= b.imag())));
      }
    }
    CVector only = eigenvalues_only(m);
    CHECK((only - es.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("x-IPR", "[spectral]") {
  SECTION("mirror-symmetric moduli give zero") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int lx : {5, 8, 31}) {
      const Geometry g(lx, 2, 3);
      std::vector<double> half(static_cast<std::size_t>(lx));
      for (auto& h : half) h = u(rng);
      const CVector psi = profile(g, [&](int x) { return std::min(half[x - 1], half[lx - x]); });
      CHECK(std::abs(x_ipr(psi, g).value) < 1e-12);
      CHECK_THAT(x_ipr(psi, g).x_center, WithinAbs((lx + 1) / 2.0, 1e-12));
    }
  }
  SECTION("uniform state") {
    const Geometry g(10, 3, 1);
    CHECK(std::abs(x_ipr(CVector::Ones(30), g).value) < 1e-15);
  }
  SECTION("left-decaying exponential matches direct summation") {
    const Geometry g(100, 1, 1);
    const CVector psi = profile(g, [](int x) { return std::exp(-(x - 1.0)); });
    const double v = x_ipr(psi, g).value;
    CHECK(v < 0.0);
    CHECK(v > -0.01);
    CHECK_THAT(v, WithinRel(brute_x_ipr(psi, g), 1e-12));
  }
  SECTION("sign semantics") {
    for (double kappa : {0.2, 0.5, 1.5}) {
      const Geometry g(60, 1, 2);
      const CVector right = profile(g, [&](int x) { return std::exp(kappa * (x - 1)); });
      const CVector left = profile(g, [&](int x) { return std::exp(kappa * (g.Lx - x)); });
      CHECK(x_ipr(right, g).value > 0.0);
      CHECK(x_ipr(left, g).value < 0.0);
      CHECK_THAT(x_ipr(right, g).value, WithinRel(brute_x_ipr(right, g), 1e-10));
    }
  }
  SECTION("state fully on the last column hits the guard") {
    const Geometry g(10, 1, 1);
    CVector psi = CVector::Zero(10);
    psi(9) = 1.0;
    const XIpr r = x_ipr(psi, g);
    CHECK(r.value == 1.0);
    CHECK(r.x_center == 10.0);
  }
  SECTION("errors") {
    CHECK_THROWS_AS(x_ipr(CVector::Zero(4), Geometry(4, 1, 1)), InvalidArgument);
    CHECK_THROWS_AS(x_ipr(CVector::Ones(5), Geometry(4, 1, 1)), InvalidArgument);
  }
}

TEST_CASE("classification and mean x-IPR", "[spectral]") {
  SECTION("threshold rule") {
    CHECK(label_for(2e-3, 1e-3) == SkinLabel::Right);
    CHECK(label_for(-2e-3, 1e-3) == SkinLabel::Left);
    CHECK(label_for(1e-3, 1e-3) == SkinLabel::Bulk);
    CHECK(label_for(-1e-3, 1e-3) == SkinLabel::Bulk);
    CHECK(to_string(SkinLabel::Left) == "left");
  }
  SECTION("Hermitian open chain is all bulk with zero mean") {
    const Geometry g(40, 1, 1);
    const EigenSystem es = eigendecompose(real_space_matrix(one_band_model(0.0, 2), g, BoundarySpec::open()), g);
    const SkinReport rep = classify_modes(es);
    CHECK(rep.count(SkinLabel::Bulk) == 40);
    CHECK(std::abs(rep.mean_x_ipr) < 1e-8);
    CHECK(std::abs(mean_x_ipr(es)) < 1e-8);
  }
  SECTION("N = 1 chain is all right") {
    const Geometry g(60, 1, 1);
    const EigenSystem es = eigendecompose(real_space_matrix(one_band_model(0.5, 1), g, BoundarySpec::open()), g);
    const SkinReport rep = classify_modes(es);
    CHECK(rep.count(SkinLabel::Right) == 60);
    double sum = 0.0;
    for (double v : rep.x_ipr) sum += v;
    CHECK_THAT(rep.mean_x_ipr, WithinAbs(sum / 60.0, 1e-15));
  }
  SECTION("N = 1 mean grows with r") {
    const Geometry g(60, 1, 1);
    double prev = -1.0;
    for (int i = 1; i <= 10; ++i) {
      const double r = 0.2 * i;
      const double m = mean_x_ipr(eigendecompose(real_space_matrix(one_band_model(r, 1), g, BoundarySpec::open()), g));
      CHECK(m > prev);
      prev = m;
    }
  }
  SECTION("tau must be positive") {
    const EigenSystem es = eigendecompose(CMatrix::Identity(2, 2), Geometry(2, 1, 1));
    CHECK_THROWS_AS(classify_modes(es, 0.0), InvalidArgument);
  }
}

TEST_CASE("x-IPR of degenerate eigenspaces", "[spectral]") {
  SECTION("nondegenerate modes use their own eigenvector") {
    const Geometry g(30, 1, 1);
    const EigenSystem es = eigendecompose(real_space_matrix(one_band_model(0.7, 2), g, BoundarySpec::open()), g);
    const auto values = mode_x_ipr(es);
    for (std::size_t i = 0; i < es.size(); ++i) {
      CHECK(values[i].value == x_ipr(es.vectors.col(static_cast<Eigen::Index>(i)), g).value);
    }
  }
  SECTION("result does not depend on the basis chosen inside a cluster") {
    // periodic Hermitian ring: +k and -k share an energy
    const Geometry g(12, 1, 1);
    const EigenSystem es = eigendecompose(real_space_matrix(one_band_model(0.0, 1), g, BoundarySpec(1.0, 0.0)), g);
    const auto before = mode_x_ipr(es);
    // pair 1 and 2 (E = -2 cos(2 pi / 12)) are degenerate; rotate them
    EigenSystem rotated = es;
    REQUIRE(std::abs(es.eigenvalues(1) - es.eigenvalues(2)) < 1e-12);
    const double th = 0.37;
    const cplx ph = std::polar(1.0, 1.1);
    rotated.vectors.col(1) = std::cos(th) * es.vectors.col(1) + ph * std::sin(th) * es.vectors.col(2);
    rotated.vectors.col(2) = -std::sin(th) * es.vectors.col(1) + ph * std::cos(th) * es.vectors.col(2);
    const auto after = mode_x_ipr(rotated);
    for (std::size_t i = 0; i < es.size(); ++i) CHECK_THAT(after[i].value, WithinAbs(before[i].value, 1e-14));
    // translation invariance: the cluster density is uniform
    for (const auto& v : before) CHECK(std::abs(v.value) < 1e-14);
  }
  SECTION("an asymmetric pair of edge states is resolved, not averaged") {
    const Geometry g(20, 1, 1);
    CVector left = CVector::Zero(20), right = CVector::Zero(20);
    for (int x = 1; x <= 20; ++x) {
      left(x - 1) = std::pow(0.3, x - 1);
      right(x - 1) = std::pow(0.6, 20 - x);
    }
    left.normalize();
    right.normalize();
    EigenSystem es;
    es.geom = g;
    es.eigenvalues = CVector::Constant(2, cplx(-1.5, 0.0));
    es.vectors.resize(20, 2);
    // hand the pair over in a mixed basis
    es.vectors.col(0) = (left + 0.8 * right).normalized();
    es.vectors.col(1) = (left - 1.3 * right).normalized();
    const auto values = mode_x_ipr(es);
    const double a = x_ipr(left, g).value, b = x_ipr(right, g).value;
    CHECK_THAT(std::min(values[0].value, values[1].value), WithinAbs(std::min(a, b), 1e-6));
    CHECK_THAT(std::max(values[0].value, values[1].value), WithinAbs(std::max(a, b), 1e-6));
  }
  SECTION("single cosine standing wave is not zero on its own") {
    const Geometry g(12, 1, 1);
    CVector psi(12);
    for (int x = 1; x <= 12; ++x) psi(x - 1) = std::cos(kTwoPi * x / 12.0 + 0.4);
    CHECK(std::abs(x_ipr(psi, g).value) > 1e-6);
  }
}

TEST_CASE("dominant mode and marginal density", "[spectral]") {
  SECTION("tie rules") {
    CVector e(4);
    e << cplx(0, 1), cplx(2, 1), cplx(-1, 0.5), cplx(2, 1);
    CHECK(dominant_index(e) == 1);
    CVector f(3);
    f << cplx(1, 0), cplx(1, 0), cplx(0, 0);
    CHECK(dominant_index(f) == 0);
    CHECK_THROWS_AS(dominant_index(CVector()), InvalidArgument);
  }
  SECTION("dominant mode carries its vector") {
    const Geometry g(12, 1, 3);
    const EigenSystem es = eigendecompose(
        real_space_matrix(three_band_model({1.1, 1.0 / 1.1, 1, 1, 0.0005, 0.5, CouplingReading::Scale}), g,
                          BoundarySpec::open()),
        g);
    const DominantMode d = dominant_mode(es);
    for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i) CHECK(es.eigenvalues(i).imag() <= d.energy.imag());
    CHECK((d.psi - es.vectors.col(static_cast<Eigen::Index>(d.index))).norm() == 0.0);
  }
  SECTION("uniform marginal") {
    const Geometry g(8, 3, 2);
    const Eigen::VectorXd p = y_marginal_density(CVector::Ones(48) / std::sqrt(48.0), g);
    REQUIRE(p.size() == 8);
    for (Eigen::Index x = 0; x < 8; ++x) CHECK_THAT(p(x), WithinAbs(1.0 / 8, 1e-15));
  }
  SECTION("marginal sums to one") {
    std::mt19937 rng(2);
    std::normal_distribution<double> n;
    const Geometry g(9, 4, 3);
    CVector psi(static_cast<Eigen::Index>(g.size()));
    for (auto& v : psi) v = cplx(n(rng), n(rng));
    CHECK_THAT(y_marginal_density(psi, g).sum(), WithinAbs(1.0, 1e-14));
  }
}

TEST_CASE("set distances", "[spectral]") {
  CVector a(3), b(3);
  a << cplx(0, 0), cplx(1, 0), cplx(0, 1);
  b << cplx(0, 1.1), cplx(0, 0), cplx(1, 0);
  CHECK_THAT(hausdorff_distance(a, b), WithinAbs(0.1, 1e-15));
  CHECK_THAT(matched_max_distance(a, b), WithinAbs(0.1, 1e-15));
  CHECK(hausdorff_distance(a, a) == 0.0);
  CHECK_THAT(spectral_diameter(a), WithinAbs(std::sqrt(2.0), 1e-15));
  CVector one(1);
  one << cplx(3, 3);
  CHECK(spectral_diameter(one) == 0.0);
  CHECK_THROWS_AS(matched_max_distance(a, one), InvalidArgument);

  // brute-force diameter of a random cloud
  std::mt19937 rng(9);
  std::normal_distribution<double> n;
  std::vector<cplx> pts(200);
  for (auto& p : pts) p = cplx(n(rng), n(rng));
  double best = 0.0;
  for (const auto& p : pts) {
    for (const auto& q : pts) best = std::max(best, std::abs(p - q));
  }
  CHECK_THAT(spectral_diameter(pts), WithinAbs(best, 1e-12));
}

TEST_CASE("PBC spectral loops", "[spectral]") {
  SECTION("analytic one-band curve") {
    const SpectralLoop loop = pbc_loop(one_band_model(0.5, 3), Geometry(60, 1, 1), BoundarySpec::open(), 256);
    REQUIRE(loop.branches() == 1);
    REQUIRE(loop.k_samples.size() >= 256);
    for (std::size_t j = 0; j < loop.k_samples.size(); ++j) {
      const double k = loop.k_samples[j];
      if (j > 0) CHECK(k > loop.k_samples[j - 1]);
      CHECK(k >= 0.0);
      CHECK(k < kTwoPi);
      const cplx expect = 2.0 * std::cos(k) + 0.5 * std::exp(cplx(0, 3 * k));
      CHECK(std::abs(loop.branch_energies[j][0] - expect) < 1e-12);
    }
    CHECK(loop.closed);
  }
  SECTION("supercell branch count") {
    const SpectralLoop loop = pbc_loop(size_model(0.1, 0.5, 3), Geometry(60, 2, 1), BoundarySpec(1, 1), 64);
    CHECK(loop.branches() == 2);
    CHECK(loop.points().size() == 2 * loop.k_samples.size());
  }
  SECTION("branches move continuously") {
    const auto m = kagome_model({1.1, 1.0 / 1.1, 3.0, 1.0 / 3.0, 0.5, CouplingReading::Scale});
    const SpectralLoop loop = pbc_loop(m, Geometry(120, 4, 3), BoundarySpec(0, 0), 128);
    CHECK(loop.branches() == 12);
    CHECK(loop.max_jump <= 0.05 * spectral_diameter(loop.points()) + 1e-12);
  }
}

TEST_CASE("winding numbers", "[spectral]") {
  const auto chain = one_band_model(0.5, 1);
  SECTION("ellipse encloses the origin once") {
    CHECK(winding_number(chain, 1, 0.0, cplx(0, 0), 256).winding == 1);
  }
  SECTION("far outside is zero") {
    for (const auto& model : {chain, one_band_model(1.0, 3)}) {
      CHECK(winding_number(model, 1, 0.0, cplx(10, 3), 256).winding == 0);
    }
    const auto k = kagome_model({1.1, 1.0 / 1.1, 3.0, 1.0 / 3.0, 0.5, CouplingReading::Scale});
    CHECK(winding_number(k, 3, 0.0, cplx(50, 0), 128).winding == 0);
  }
  SECTION("point on the loop is rejected") {
    CHECK_THROWS_AS(winding_number(chain, 1, 0.0, cplx(2.5, 0.0), 256), NumericalError);
  }
  SECTION("resolution independence and integrality") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const auto model = one_band_model(1.0, 3);
    int accepted = 0;
    for (int i = 0; i < 40; ++i) {
      const cplx e0(u(rng), u(rng));
      try {
        const WindingResult a = winding_number(model, 1, 0.0, e0, 64);
        const WindingResult b = winding_number(model, 1, 0.0, e0, 128);
        CHECK(a.winding == b.winding);
        CHECK(std::abs(a.raw - a.winding) < 0.01);
        ++accepted;
      } catch (const NumericalError&) {
        // too close to the loop
      }
    }
    CHECK(accepted > 30);
  }
  SECTION("N = 2 epicycles carry the opposite winding") {
    // lobes with reversed winding exist for small r
    for (double r : {0.2, 0.5}) {
      const auto model = one_band_model(r, 2);
      int pos = 0, neg = 0;
      for (int i = -30; i <= 30; ++i) {
        for (int j = -30; j <= 30; ++j) {
          const cplx e0(0.1 * i + 0.0013, 0.1 * j + 0.0007);
          try {
            const int w = winding_number(model, 1, 0.0, e0, 256).winding;
            pos += w > 0;
            neg += w < 0;
          } catch (const NumericalError&) {
          }
        }
      }
      INFO("r = " << r);
      CHECK(pos > 0);
      CHECK(neg > 0);
    }
  }
}

TEST_CASE("winding-skin correspondence", "[spectral]") {
  CHECK(correspondence_orientation() == 1);
  for (const auto& [r, N] : std::vector<std::pair<double, int>>{{0.5, 1}, {0.5, 2}, {1.0, 3}}) {
    const CorrespondenceReport rep =
        winding_skin_correspondence(one_band_model(r, N), Geometry(60, 1, 1), 512, kDefaultTau);
    INFO("r " << r << " N " << N << " checked " << rep.checked << " skipped " << rep.skipped);
    CHECK(rep.violations == 0);
    CHECK(rep.checked > 0);
  }
}
