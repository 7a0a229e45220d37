#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tflow {

/// Triangular (Newell) flow-density relation Q(rho) = min{v rho, w (jam - rho)}.
///
/// Parameters are per lane. `scaled(lanes)` gives the diagram of a lane group,
/// which for the triangular shape only multiplies the jam density (and with it
/// the critical density and capacity).
template <typename Scalar>
struct FundamentalDiagram {
  Scalar v_free{15};
  Scalar wave_speed{5};
  Scalar jam_density{Scalar(0.15)};

  Scalar critical_density() const { return wave_speed * jam_density / (v_free + wave_speed); }
  Scalar capacity() const { return v_free * critical_density(); }
  Scalar max_speed() const { return std::max(v_free, wave_speed); }

  FundamentalDiagram scaled(Scalar factor) const { return {v_free, wave_speed, jam_density * factor}; }

  bool valid() const {
    return std::isfinite(v_free) && std::isfinite(wave_speed) && std::isfinite(jam_density) &&
           v_free > 0 && wave_speed > 0 && jam_density > 0;
  }

  friend bool operator==(const FundamentalDiagram&, const FundamentalDiagram&) = default;
};

using FundamentalDiagramd = FundamentalDiagram<double>;

/// Stationary flux. Requires 0 <= rho <= jam density (a relative slack of
/// 1e-12 absorbs rounding).
template <typename Scalar>
Scalar fundamental_flux(const FundamentalDiagram<Scalar>& fd, Scalar rho) {
  const Scalar slack = Scalar(1e-12) * fd.jam_density;
  if (!(rho >= -slack) || !(rho <= fd.jam_density + slack)) {
    throw std::domain_error("fundamental_flux: density outside [0, jam density]");
  }
  rho = std::clamp(rho, Scalar(0), fd.jam_density);
  return std::min(fd.v_free * rho, fd.wave_speed * (fd.jam_density - rho));
}

/// Linear startup ramp min(1, t / startup_time); a zero startup time disables it.
template <typename Scalar>
Scalar startup_ramp(Scalar time_since_green, Scalar startup_time) {
  if (time_since_green < 0) throw std::domain_error("startup_ramp: negative time since green");
  if (startup_time <= 0) return Scalar(1);
  return std::min(Scalar(1), time_since_green / startup_time);
}

/// Sending function min(v rho, q_max), optionally scaled by the startup ramp.
/// Densities above jam (possible inside an incident zone) are accepted.
template <typename Scalar>
Scalar demand(const FundamentalDiagram<Scalar>& fd, Scalar rho, Scalar ramp = Scalar(1)) {
  if (!(rho >= 0)) throw std::domain_error("demand: negative density");
  return std::min(fd.v_free * rho, fd.capacity()) * ramp;
}

template <typename Scalar>
Scalar demand(const FundamentalDiagram<Scalar>& fd, Scalar rho, Scalar time_since_green,
              Scalar startup_time) {
  return demand(fd, rho, startup_ramp(time_since_green, startup_time));
}

/// Receiving function min(q_max, w (jam - rho)), floored at zero.
template <typename Scalar>
Scalar supply(const FundamentalDiagram<Scalar>& fd, Scalar rho) {
  if (!(rho >= 0)) throw std::domain_error("supply: negative density");
  return std::clamp(fd.wave_speed * (fd.jam_density - rho), Scalar(0), fd.capacity());
}

/// Space-mean speed Q(rho)/rho; v_free at rho = 0.
template <typename Scalar>
Scalar speed(const FundamentalDiagram<Scalar>& fd, Scalar rho) {
  if (rho <= 0) return fd.v_free;
  if (rho >= fd.jam_density) return Scalar(0);
  return std::min(fd.v_free, fd.wave_speed * (fd.jam_density - rho) / rho);
}

}  // namespace tflow
