#include "nhse/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "nhse/error.hpp"

namespace nhse {

PacketKind parse_packet_kind(const std::string& text) {
  if (text == "delta") return PacketKind::DeltaCell;
  if (text == "gaussian") return PacketKind::Gaussian;
  throw InvalidArgument("unknown packet kind '" + text + "' (expected delta or gaussian)");
}

std::string to_string(PacketKind kind) {
  return kind == PacketKind::DeltaCell ? "delta" : "gaussian";
}

WavepacketState initial_state(const Geometry& geom, const PacketSpec& spec) {
  if (spec.x0 < 1.0 || spec.x0 > geom.Lx || spec.y0 < 1.0 || spec.y0 > geom.Ly) {
    std::ostringstream msg;
    msg << "packet center (" << spec.x0 << ", " << spec.y0 << ") outside the " << geom.Lx << "x"
        << geom.Ly << " lattice";
    throw InvalidArgument(msg.str());
  }
  WavepacketState state;
  state.amplitudes = CVector::Zero(static_cast<Eigen::Index>(geom.size()));
  if (spec.kind == PacketKind::DeltaCell) {
    const int x = static_cast<int>(std::lround(spec.x0));
    const int y = static_cast<int>(std::lround(spec.y0));
    for (int b = 0; b < geom.bands; ++b) {
      state.amplitudes(static_cast<Eigen::Index>(geom.index(x, y, b))) = 1.0;
    }
  } else {
    if (!(spec.sigma > 0.0)) throw InvalidArgument("Gaussian packet needs sigma > 0");
    for (std::size_t s = 0; s < geom.size(); ++s) {
      const double dx = geom.x_of(s) - spec.x0;
      const double dy = geom.y_of(s) - spec.y0;
      state.amplitudes(static_cast<Eigen::Index>(s)) =
          std::exp(-(dx * dx + dy * dy) / (4.0 * spec.sigma * spec.sigma));
    }
  }
  const double norm = state.amplitudes.norm();
  if (!(norm > 0.0)) {
    // every Gaussian weight underflowed; the sigma -> 0 limit is the delta cell
    return initial_state(geom, {PacketKind::DeltaCell, spec.x0, spec.y0, spec.sigma});
  }
  state.amplitudes /= norm;
  return state;
}

CenterOfMass center_of_mass(const Eigen::Ref<const CVector>& amplitudes, const Geometry& geom) {
  if (static_cast<std::size_t>(amplitudes.size()) != geom.size()) {
    throw InvalidArgument("state length does not match geometry");
  }
  double total = 0.0, sx = 0.0, sy = 0.0;
  for (Eigen::Index s = 0; s < amplitudes.size(); ++s) {
    const double p = std::norm(amplitudes(s));
    total += p;
    sx += p * geom.x_of(static_cast<std::size_t>(s));
    sy += p * geom.y_of(static_cast<std::size_t>(s));
  }
  if (!(total > 0.0)) throw InvalidArgument("center of mass of a zero state");
  return {sx / total, sy / total};
}

namespace {

class Stepper {
 public:
  Stepper(const CMatrix& h, Propagator kind) : kind_(kind) {
    if (kind_ == Propagator::RK4) {
      sparse_ = h.sparseView();
    } else {
      dense_ = h;
    }
  }

  void step(CVector& psi, double dt) {
    const cplx mi(0.0, -1.0);
    if (kind_ == Propagator::RK4) {
      const CVector k1 = mi * (sparse_ * psi);
      const CVector k2 = mi * (sparse_ * (psi + (0.5 * dt) * k1));
      const CVector k3 = mi * (sparse_ * (psi + (0.5 * dt) * k2));
      const CVector k4 = mi * (sparse_ * (psi + dt * k3));
      psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      return;
    }
    if (!cached_dt_ || *cached_dt_ != dt) {
      propagator_ = (mi * dt * dense_).exp();
      cached_dt_ = dt;
    }
    psi = propagator_ * psi;
  }

 private:
  Propagator kind_;
  SparseCMatrix sparse_;
  CMatrix dense_;
  CMatrix propagator_;
  std::optional<double> cached_dt_;
};

}  // namespace

Trajectory evolve(const CMatrix& h, const WavepacketState& psi0, const Geometry& geom,
                  const EvolveOptions& options) {
  if (!(options.dt > 0.0) || !std::isfinite(options.dt)) {
    throw InvalidArgument("time step dt must be positive");
  }
  if (!(options.T >= options.dt) || !std::isfinite(options.T)) {
    throw InvalidArgument("evolution time T must be at least dt");
  }
  const auto n = static_cast<Eigen::Index>(geom.size());
  if (h.rows() != n || h.cols() != n || psi0.amplitudes.size() != n) {
    throw InvalidArgument("Hamiltonian, state and geometry dimensions disagree");
  }
  if (!h.allFinite()) throw NumericalError("Hamiltonian has non-finite entries");

  const auto steps = static_cast<long>(std::ceil(options.T / options.dt - 1e-9));
  std::vector<long> snap_steps;
  for (double ts : options.snapshot_times) {
    if (ts < 0.0 || ts > options.T + 1e-12) {
      throw InvalidArgument("snapshot time " + std::to_string(ts) + " outside [0, T]");
    }
    snap_steps.push_back(std::min(steps, static_cast<long>(std::lround(ts / options.dt))));
  }

  Stepper stepper(h, options.propagator);
  const bool track_y = geom.Ly > 1;
  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  WavepacketState state = psi0;
  const double norm0 = state.amplitudes.norm();
  if (!(norm0 > 0.0)) throw InvalidArgument("initial state is zero");
  state.amplitudes /= norm0;

  auto record = [&](long step) {
    const CenterOfMass cm = center_of_mass(state.amplitudes, geom);
    traj.times.push_back(state.t);
    traj.x_cm.push_back(cm.x);
    if (track_y) traj.y_cm.push_back(cm.y);
    traj.log_norms.push_back(state.log_norm);
    for (std::size_t i = 0; i < snap_steps.size(); ++i) {
      if (snap_steps[i] != step) continue;
      traj.snapshots.push_back({state.t, state.log_norm, state.amplitudes.cwiseAbs2()});
    }
  };

  record(0);
  const double t_start = state.t;
  for (long s = 1; s <= steps; ++s) {
    const double t_next = s == steps ? t_start + options.T : t_start + s * options.dt;
    stepper.step(state.amplitudes, t_next - state.t);
    const double norm = state.amplitudes.norm();
    if (!std::isfinite(norm) || !(norm > 0.0)) {
      std::ostringstream msg;
      msg << "amplitudes became non-finite at t = " << t_next << " (step " << s << ")";
      throw NumericalError(msg.str());
    }
    state.amplitudes /= norm;
    state.log_norm += std::log(norm);
    state.t = t_next;
    record(s);
  }
  std::stable_sort(traj.snapshots.begin(), traj.snapshots.end(),
                   [](const Snapshot& a, const Snapshot& b) { return a.t < b.t; });
  traj.final_state = std::move(state);
  return traj;
}

double convergence_delta(const CMatrix& h, const WavepacketState& psi0, const Geometry& geom,
                         double dt, double T, Propagator propagator) {
  EvolveOptions coarse;
  coarse.dt = dt;
  coarse.T = T;
  coarse.propagator = propagator;
  EvolveOptions fine = coarse;
  fine.dt = 0.5 * dt;
  const double a = evolve(h, psi0, geom, coarse).x_cm.back();
  const double b = evolve(h, psi0, geom, fine).x_cm.back();
  return std::abs(a - b);
}

ReversalInfo analyze_reversal(const Trajectory& traj) {
  ReversalInfo info;
  if (traj.x_cm.empty()) return info;
  const double x0 = traj.x_cm.front();
  info.final_x = traj.x_cm.back();
  info.extreme_x = x0;

  std::size_t start = traj.size();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (std::abs(traj.x_cm[i] - x0) > kDriftThreshold) {
      start = i;
      info.initial_direction = traj.x_cm[i] > x0 ? 1 : -1;
      break;
    }
  }
  if (info.initial_direction == 0) return info;
  const int s = info.initial_direction;

  // first crossing back past the start after the drift
  std::size_t cross = traj.size();
  for (std::size_t i = start; i < traj.size(); ++i) {
    if (s * (traj.x_cm[i] - x0) < 0.0) {
      cross = i;
      break;
    }
  }
  std::size_t peak = start;
  for (std::size_t i = start; i < cross; ++i) {
    if (s * traj.x_cm[i] > s * traj.x_cm[peak]) peak = i;
  }
  info.extreme_x = traj.x_cm[peak];
  if (cross < traj.size()) {
    info.turnaround_time = traj.times[peak];
    info.crossing_time = traj.times[cross];
  }
  return info;
}

std::optional<double> divergence_onset(const Trajectory& a, const Trajectory& b, double threshold) {
  if (a.size() != b.size()) throw InvalidArgument("trajectories do not share a time grid");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-9) {
      throw InvalidArgument("trajectories do not share a time grid");
    }
    if (std::abs(a.x_cm[i] - b.x_cm[i]) > threshold) return a.times[i];
  }
  return std::nullopt;
}

}  // namespace nhse
