#include "uavfarm/energy.hpp"

#include <cmath>
#include <numbers>

namespace uavfarm::energy {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double frontal_area(const PhysicalConstants& c) {
  return c.a_surf + c.n_prp * std::numbers::pi * c.r_prp * c.r_prp;
}

double drag_coefficient(const PhysicalConstants& c) { return 0.5 * c.rho_air * frontal_area(c) * c.c_d; }

double induced_coefficient(const PhysicalConstants& c) {
  return c.m_uav * c.m_uav / (c.eta * c.rho_air * c.n_prp * std::numbers::pi * c.r_prp * c.r_prp);
}

double hover_power(const PhysicalConstants& c) {
  return c.m_uav * std::pow(c.g, 1.5) / (std::sqrt(2.0 * c.rho_air * frontal_area(c)) * c.eta);
}

double flight_power(const Eigen::Vector2d& velocity, const PhysicalConstants& c) {
  const double speed = velocity.norm();
  if (speed < c.v_th) return hover_power(c);
  return drag_coefficient(c) * speed * speed + induced_coefficient(c) / speed + c.m_uav * c.g * speed;
}

double compute_power(const PhysicalConstants& c) {
  return c.p_static + c.c_load * c.voltage * c.voltage * c.f_clock * c.alpha_act;
}

double comm_power(Role role, const PhysicalConstants& c) {
  double p = dbm_to_watts(c.p_ut_dbm) + dbm_to_watts(c.p_ur_dbm);
  if (role == Role::monitoring) p += c.p_cam;
  if (role == Role::collection) p += dbm_to_watts(c.p_ec_dbm);
  return p;
}

double step_energy(const UavState& state, const PhysicalConstants& c, double dt) {
  return (flight_power(state.velocity, c) + compute_power(c) + comm_power(state.role, c)) * dt;
}

}  // namespace uavfarm::energy
