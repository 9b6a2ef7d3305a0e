#include <doctest.h>

#include <cmath>

#include "uavfarm/energy.hpp"

using namespace uavfarm;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Straight from the table constants, no library helpers.
double oracle_area() { return 0.01 + 4 * kPi * 0.1 * 0.1; }
double oracle_hover() { return 0.2 * std::pow(9.8, 1.5) / (std::sqrt(2 * 1.225 * oracle_area()) * 0.8); }
double oracle_forward(double v) {
  const double c1 = 0.5 * 1.225 * oracle_area() * 0.5;
  const double c2 = 0.2 * 0.2 / (0.8 * 1.225 * 4 * kPi * 0.01);
  return c1 * v * v + c2 / v + 0.2 * 9.8 * v;
}

}  // namespace

TEST_CASE("coefficients match the closed forms") {
  const PhysicalConstants c;
  CHECK(energy::frontal_area(c) == doctest::Approx(0.135664).epsilon(1e-6));
  CHECK(energy::drag_coefficient(c) == doctest::Approx(0.0415471).epsilon(1e-6));
  CHECK(energy::induced_coefficient(c) == doctest::Approx(0.324807).epsilon(1e-6));
}

TEST_CASE("hover and forward flight power") {
  const PhysicalConstants c;
  CHECK(energy::hover_power(c) == doctest::Approx(oracle_hover()).epsilon(1e-12));
  CHECK(energy::hover_power(c) == doctest::Approx(13.30).epsilon(5e-4));
  CHECK(energy::flight_power({10, 0}, c) == doctest::Approx(oracle_forward(10)).epsilon(1e-12));
  CHECK(energy::flight_power({10, 0}, c) == doctest::Approx(23.79).epsilon(5e-4));
  CHECK(energy::flight_power({6, 8}, c) == energy::flight_power({10, 0}, c));
}

TEST_CASE("speeds below v_th use the hover branch") {
  const PhysicalConstants c;
  CHECK(energy::flight_power({0, 0}, c) == energy::hover_power(c));
  CHECK(energy::flight_power({0.05, 0.05}, c) == energy::hover_power(c));
  CHECK(energy::flight_power({0.1, 0}, c) == doctest::Approx(oracle_forward(0.1)));
}

TEST_CASE("compute and radio power") {
  const PhysicalConstants c;
  CHECK(energy::compute_power(c) == doctest::Approx(4 + 6.4e-9 * 25 * 2e8 * 0.5).epsilon(1e-12));
  CHECK(energy::compute_power(c) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(energy::comm_power(Role::communication, c) == doctest::Approx(0.2));
  CHECK(energy::comm_power(Role::monitoring, c) == doctest::Approx(2.7));
  CHECK(energy::comm_power(Role::collection, c) == doctest::Approx(10.2));
}

TEST_CASE("hovering communication UAV spends about 33.5 J per second") {
  const PhysicalConstants c;
  UavState u;
  u.role = Role::communication;
  CHECK(energy::step_energy(u, c, 1.0) == doctest::Approx(oracle_hover() + 20 + 0.2).epsilon(1e-12));
  CHECK(energy::step_energy(u, c, 2.0) == doctest::Approx(2 * energy::step_energy(u, c, 1.0)));
}

TEST_CASE("forward power has one interior minimum above v_th") {
  const PhysicalConstants c;
  // c2/v dominates just above v_th, the weight term m*g*v beyond the minimum
  double prev = energy::flight_power({0.02, 0}, c);
  bool turned = false;
  for (double v = 0.03; v <= 10.0; v += 0.01) {
    const double p = energy::flight_power({v, 0}, c);
    if (p > prev) turned = true;
    if (turned) CHECK(p >= prev);
    prev = p;
  }
  CHECK(turned);
  CHECK(energy::flight_power({0.05, 0}, c) > energy::flight_power({0.4, 0}, c));
  CHECK(energy::flight_power({2, 0}, c) > energy::flight_power({0.4, 0}, c));
}
