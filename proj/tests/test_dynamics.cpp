#include <catch_amalgamated.hpp>

#include <cmath>

#include "nhse/dynamics.hpp"
#include "nhse/error.hpp"
#include "nhse/spectral.hpp"

using namespace nhse;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

HoppingModel fig3b_model() {
  return three_band_model({1.1, 1.0 / 1.1, 1.0, 1.0, 0.0005, 0.5, CouplingReading::Scale});
}

Trajectory synthetic(const std::vector<double>& xs) {
  Trajectory t;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    t.times.push_back(static_cast<double>(i));
    t.x_cm.push_back(xs[i]);
    t.log_norms.push_back(0.0);
  }
  return t;
}

}  // namespace

TEST_CASE("initial states", "[dynamics]") {
  SECTION("delta cell spreads over the orbitals") {
    const Geometry g(20, 1, 3);
    const WavepacketState s = initial_state(g, {PacketKind::DeltaCell, 7, 1, 1.0});
    for (int b = 0; b < 3; ++b) {
      CHECK_THAT(std::norm(s.amplitudes(static_cast<Eigen::Index>(g.index(7, 1, b)))), WithinAbs(1.0 / 3, 1e-15));
    }
    CHECK_THAT(s.amplitudes.norm(), WithinAbs(1.0, 1e-15));
    CHECK(center_of_mass(s.amplitudes, g).x == 7.0);
    CHECK(s.log_norm == 0.0);
  }
  SECTION("narrow Gaussian tends to the delta cell") {
    const Geometry g(15, 3, 3);
    const auto delta = initial_state(g, {PacketKind::DeltaCell, 8, 2, 1.0});
    const auto narrow = initial_state(g, {PacketKind::Gaussian, 8, 2, 0.05});
    CHECK((delta.amplitudes - narrow.amplitudes).norm() < 1e-12);
  }
  SECTION("centered Gaussian has x_cm = x0") {
    const Geometry g(21, 5, 2);
    const auto s = initial_state(g, {PacketKind::Gaussian, 11, 3, 2.5});
    const CenterOfMass c = center_of_mass(s.amplitudes, g);
    CHECK_THAT(c.x, WithinAbs(11.0, 1e-12));
    CHECK_THAT(c.y, WithinAbs(3.0, 1e-12));
  }
  SECTION("errors") {
    const Geometry g(10, 2, 1);
    CHECK_THROWS_AS(initial_state(g, {PacketKind::DeltaCell, 11, 1, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(initial_state(g, {PacketKind::DeltaCell, 5, 0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(initial_state(g, {PacketKind::Gaussian, 5, 1, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(parse_packet_kind("square"), InvalidArgument);
    CHECK(parse_packet_kind("gaussian") == PacketKind::Gaussian);
  }
}

TEST_CASE("center of mass", "[dynamics]") {
  const Geometry g(9, 4, 2);
  const CVector uniform = CVector::Ones(static_cast<Eigen::Index>(g.size())) / std::sqrt(double(g.size()));
  CHECK_THAT(center_of_mass(uniform, g).x, WithinAbs(5.0, 1e-12));
  CHECK_THAT(center_of_mass(uniform, g).y, WithinAbs(2.5, 1e-12));

  CVector psi(static_cast<Eigen::Index>(g.size())), mirrored(psi.size());
  for (int y = 1; y <= g.Ly; ++y) {
    for (int x = 1; x <= g.Lx; ++x) {
      for (int b = 0; b < g.bands; ++b) {
        const cplx v(std::sin(x * 1.3 + y), 0.2 * b + 0.1 * x);
        psi(static_cast<Eigen::Index>(g.index(x, y, b))) = v;
        mirrored(static_cast<Eigen::Index>(g.index(g.Lx + 1 - x, y, b))) = v;
      }
    }
  }
  psi.normalize();
  mirrored.normalize();
  CHECK_THAT(center_of_mass(mirrored, g).x, WithinAbs(g.Lx + 1 - center_of_mass(psi, g).x, 1e-12));
}

TEST_CASE("evolution", "[dynamics]") {
  SECTION("Hermitian evolution keeps the norm") {
    const Geometry g(20, 1, 1);
    const CMatrix h = real_space_matrix(one_band_model(0.0, 2), g, BoundarySpec::open());
    EvolveOptions o;
    o.T = 100.0;
    const Trajectory t = evolve(h, initial_state(g, {PacketKind::DeltaCell, 6, 1, 1}), g, o);
    for (double ln : t.log_norms) CHECK(std::abs(ln) < 1e-8);
  }
  SECTION("eigenvector evolves by a phase and Im E growth") {
    const Geometry g(10, 1, 3);
    const CMatrix h = real_space_matrix(fig3b_model(), g, BoundarySpec::open());
    const EigenSystem es = eigendecompose(h, g);
    for (std::size_t idx : {dominant_index(es.eigenvalues), std::size_t{0}}) {
      WavepacketState s{es.vectors.col(static_cast<Eigen::Index>(idx)), 0.0, 0.0};
      EvolveOptions o;
      o.T = 20.0;
      const Trajectory t = evolve(h, s, g, o);
      const double im = es.eigenvalues(static_cast<Eigen::Index>(idx)).imag();
      for (std::size_t k = 0; k < t.size(); ++k) {
        CHECK_THAT(t.x_cm[k], WithinAbs(t.x_cm[0], 1e-9));
        CHECK(std::abs(t.log_norms[k] - im * t.times[k]) <= 1e-6 * std::max(t.times[k], 1e-3));
      }
    }
  }
  SECTION("time grid, bounds and snapshots") {
    const Geometry g(12, 3, 3);
    const CMatrix h = real_space_matrix(kagome_model({}), g, BoundarySpec(0, 0));
    EvolveOptions o;
    o.dt = 0.03;
    o.T = 1.0;
    o.snapshot_times = {0.0, 0.5, 1.0};
    const Trajectory t = evolve(h, initial_state(g, {PacketKind::DeltaCell, 6, 2, 1}), g, o);
    CHECK(t.times.front() == 0.0);
    CHECK_THAT(t.times.back(), WithinAbs(1.0, 1e-12));
    CHECK(t.size() == 35);
    for (std::size_t k = 1; k < t.size(); ++k) CHECK(t.times[k] > t.times[k - 1]);
    CHECK(t.x_cm.size() == t.size());
    CHECK(t.y_cm.size() == t.size());
    CHECK(t.log_norms.size() == t.size());
    for (double x : t.x_cm) {
      CHECK(x >= 1.0);
      CHECK(x <= 12.0);
    }
    REQUIRE(t.snapshots.size() == 3);
    for (const auto& s : t.snapshots) CHECK_THAT(s.density.sum(), WithinAbs(1.0, 1e-12));
    CHECK(t.snapshots[0].t == 0.0);
    CHECK_THAT(t.snapshots[1].t, WithinAbs(0.51, 1e-12));
    CHECK_THAT(t.final_state.amplitudes.norm(), WithinAbs(1.0, 1e-12));
    CHECK_THAT(t.final_state.t, WithinAbs(1.0, 1e-12));
  }
  SECTION("1D runs have no y track") {
    const Geometry g(10, 1, 1);
    EvolveOptions o;
    const Trajectory t = evolve(real_space_matrix(one_band_model(0.5, 1), g, BoundarySpec::open()),
                                initial_state(g, {PacketKind::DeltaCell, 5, 1, 1}), g, o);
    CHECK(t.y_cm.empty());
  }
  SECTION("RK4 and the exact exponential agree") {
    const Geometry g(20, 1, 3);
    const CMatrix h = real_space_matrix(fig3b_model(), g, BoundarySpec::open());
    const auto psi0 = initial_state(g, {PacketKind::DeltaCell, 7, 1, 1});
    EvolveOptions o;
    o.T = 30.0;
    const Trajectory a = evolve(h, psi0, g, o);
    o.propagator = Propagator::Expm;
    const Trajectory b = evolve(h, psi0, g, o);
    CHECK(std::abs(a.x_cm.back() - b.x_cm.back()) < 1e-4);
    CHECK(std::abs(a.log_norms.back() - b.log_norms.back()) < 1e-6);
    CHECK(convergence_delta(h, psi0, g, 0.01, 30.0) < 1e-4);
  }
  SECTION("errors") {
    const Geometry g(10, 1, 1);
    const CMatrix h = real_space_matrix(one_band_model(0.5, 1), g, BoundarySpec::open());
    const auto psi0 = initial_state(g, {PacketKind::DeltaCell, 5, 1, 1});
    EvolveOptions o;
    o.dt = 0.0;
    CHECK_THROWS_AS(evolve(h, psi0, g, o), InvalidArgument);
    o.dt = -0.1;
    CHECK_THROWS_AS(evolve(h, psi0, g, o), InvalidArgument);
    o.dt = 0.1;
    o.T = 0.05;
    CHECK_THROWS_AS(evolve(h, psi0, g, o), InvalidArgument);
    o.T = 1.0;
    o.snapshot_times = {2.0};
    CHECK_THROWS_AS(evolve(h, psi0, g, o), InvalidArgument);
    o.snapshot_times.clear();
    CHECK_THROWS_AS(evolve(CMatrix::Identity(5, 5), psi0, g, o), InvalidArgument);
    CHECK_THROWS_AS(evolve(CMatrix::Identity(10, 10) * 1e300, psi0, g, o), NumericalError);
  }
}

TEST_CASE("long-time growth follows the dominant mode", "[dynamics]") {
  const Geometry g(20, 1, 3);
  const CMatrix h = real_space_matrix(fig3b_model(), g, BoundarySpec::open());
  const EigenSystem es = eigendecompose(h, g);
  const DominantMode dom = dominant_mode(es);
  // the exact propagator allows long steps, so the asymptotic regime is reachable
  EvolveOptions o;
  o.T = 1e5;
  o.dt = 1.0;
  o.propagator = Propagator::Expm;
  const Trajectory t = evolve(h, initial_state(g, {PacketKind::DeltaCell, 7, 1, 1}), g, o);
  // growth rate over the second half
  const std::size_t mid = t.size() / 2;
  const double rate = (t.log_norms.back() - t.log_norms[mid]) / (t.times.back() - t.times[mid]);
  CHECK_THAT(rate, WithinRel(dom.energy.imag(), 0.02));
  const double final_sign = x_ipr(t.final_state.amplitudes, g).value;
  const double dom_sign = x_ipr(dom.psi, g).value;
  CHECK(final_sign * dom_sign > 0.0);
}

TEST_CASE("reversal analysis", "[dynamics]") {
  SECTION("drift, turnaround and crossing") {
    const ReversalInfo r = analyze_reversal(synthetic({5, 5.2, 6, 8, 9, 8.5, 7, 5.5, 4.9, 3, 2}));
    CHECK(r.initial_direction == 1);
    REQUIRE(r.turnaround_time);
    CHECK(*r.turnaround_time == 4.0);
    REQUIRE(r.crossing_time);
    CHECK(*r.crossing_time == 8.0);
    CHECK(r.extreme_x == 9.0);
    CHECK(r.final_x == 2.0);
  }
  SECTION("drift without return") {
    const ReversalInfo r = analyze_reversal(synthetic({5, 4, 3, 2, 2.5, 3, 4}));
    CHECK(r.initial_direction == -1);
    CHECK_FALSE(r.crossing_time);
    CHECK_FALSE(r.turnaround_time);
  }
  SECTION("no drift") {
    const ReversalInfo r = analyze_reversal(synthetic({5, 5.1, 4.9, 5.2}));
    CHECK(r.initial_direction == 0);
    CHECK_FALSE(r.crossing_time);
  }
  SECTION("divergence onset") {
    const Trajectory a = synthetic({1, 2, 3, 4, 5});
    const Trajectory b = synthetic({1, 2.05, 3.09, 4.2, 6});
    REQUIRE(divergence_onset(a, b));
    CHECK(*divergence_onset(a, b) == 3.0);
    CHECK_FALSE(divergence_onset(a, a));
    CHECK_THROWS_AS(divergence_onset(a, synthetic({1, 2})), InvalidArgument);
  }
}
