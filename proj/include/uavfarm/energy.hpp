#pragma once

#include <Eigen/Core>

#include "uavfarm/config.hpp"
#include "uavfarm/world.hpp"

/// Rotary-wing flight power plus compute, radio, camera and collection-link
/// power. All functions are pure; powers in watts, energies in joules.
namespace uavfarm::energy {

double dbm_to_watts(double dbm);

/// A_UAV = a_surf + n_prp * pi * r_prp^2.
double frontal_area(const PhysicalConstants& c);
/// Forward-flight drag coefficient c1 = rho * A * C_d / 2.
double drag_coefficient(const PhysicalConstants& c);
/// Induced-power coefficient c2 = m^2 / (eta * rho * n_prp * pi * r_prp^2).
double induced_coefficient(const PhysicalConstants& c);

/// Hover branch below v_th, c1|v|^2 + c2/|v| + m g |v| above.
double flight_power(const Eigen::Vector2d& velocity, const PhysicalConstants& c);
double hover_power(const PhysicalConstants& c);

double compute_power(const PhysicalConstants& c);

/// P_ut + P_ur, plus the camera for monitors and P_ec for collectors.
double comm_power(Role role, const PhysicalConstants& c);

/// Energy spent over one step of length dt at the state's velocity.
double step_energy(const UavState& state, const PhysicalConstants& c, double dt);

}  // namespace uavfarm::energy
