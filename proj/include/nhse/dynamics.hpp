#pragma once

#include <optional>
#include <vector>

#include "nhse/lattice.hpp"

namespace nhse {

/// Normalized state plus the accumulated log of its physical norm.
struct WavepacketState {
  CVector amplitudes;
  double log_norm = 0.0;
  double t = 0.0;
};

enum class PacketKind { DeltaCell, Gaussian };

struct PacketSpec {
  PacketKind kind = PacketKind::DeltaCell;
  double x0 = 1.0;  ///< cell units, 1-based
  double y0 = 1.0;
  double sigma = 1.0;  ///< Gaussian width in cells
};

PacketKind parse_packet_kind(const std::string& text);
std::string to_string(PacketKind kind);

/// DeltaCell puts equal weight on the B orbitals of cell (x0, y0) (rounded); Gaussian
/// uses exp(-((x-x0)^2 + (y-y0)^2) / (4 sigma^2)) on every orbital.
WavepacketState initial_state(const Geometry& geom, const PacketSpec& spec);

struct CenterOfMass {
  double x = 0.0;
  double y = 0.0;
};

CenterOfMass center_of_mass(const Eigen::Ref<const CVector>& amplitudes, const Geometry& geom);

struct Snapshot {
  double t = 0.0;
  double log_norm = 0.0;
  Eigen::VectorXd density;  ///< |psi|^2 over sites, sums to 1
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> x_cm;
  std::vector<double> y_cm;  ///< empty when L_y = 1
  std::vector<double> log_norms;
  std::vector<Snapshot> snapshots;
  WavepacketState final_state;

  std::size_t size() const { return times.size(); }
};

enum class Propagator { RK4, Expm };

struct EvolveOptions {
  double dt = 0.01;
  double T = 1.0;
  std::vector<double> snapshot_times;
  Propagator propagator = Propagator::RK4;
};

/// Integrates i dPsi/dt = H Psi from psi0.t to psi0.t + T with per-step renormalization.
/// Snapshot requests are served at the nearest step. Throws NumericalError on
/// non-finite amplitudes.
Trajectory evolve(const CMatrix& h, const WavepacketState& psi0, const Geometry& geom,
                  const EvolveOptions& options);

/// |x_cm(T; dt) - x_cm(T; dt/2)|.
double convergence_delta(const CMatrix& h, const WavepacketState& psi0, const Geometry& geom,
                         double dt, double T, Propagator propagator = Propagator::RK4);

/// Displacement (cells) that counts as the packet having left its start.
inline constexpr double kDriftThreshold = 0.5;

struct ReversalInfo {
  int initial_direction = 0;            ///< +1 toward L_x, -1 toward 1, 0 never drifted
  std::optional<double> turnaround_time;  ///< time of the extremal excursion along the initial drift
  std::optional<double> crossing_time;    ///< first later time x_cm passes back over its start
  double extreme_x = 0.0;
  double final_x = 0.0;
};

/// A reversal is a turnaround followed by a crossing back past x_cm(0).
ReversalInfo analyze_reversal(const Trajectory& traj);

/// First time |x_cm^a - x_cm^b| exceeds threshold; trajectories must share their time grid.
std::optional<double> divergence_onset(const Trajectory& a, const Trajectory& b,
                                       double threshold = 0.1);

}  // namespace nhse
