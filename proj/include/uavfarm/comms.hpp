#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "uavfarm/config.hpp"
#include "uavfarm/rng.hpp"
#include "uavfarm/world.hpp"

namespace uavfarm::comms {

/// Free-space loss (d in km, f in MHz, +32.44) plus the vegetation term
/// a1 * f_GHz^a2 * d_m^a3. Throws std::domain_error for d <= 0.
double path_loss(double distance_m, const LinkParams& params);

/// k_B * T * Bw, watts.
double thermal_noise(const LinkParams& params);

/// Power received from one sensor at the given distance, watts.
double received_power(double distance_m, const LinkParams& params);

/// Linear SINR at a UAV for `serving` with every sensor in `interferers`
/// transmitting concurrently. Distances are clamped to >= 1 m.
double sinr(const Eigen::Vector3d& uav_pos, std::size_t serving, std::span<const std::size_t> interferers,
            std::span<const Sensor> sensors, const LinkParams& params);

/// BPSK with Q(x) ~ exp(-x^2/2)/2, i.e. exp(-SINR)/2.
double ber(double sinr_linear);

/// 1 - (1 - ber)^(8 * packet_bytes).
double plr(double ber, int packet_bytes);

enum class CollectionOutcome { success, failure, out_of_range };

/// One upload attempt of sensor `ws` to a collection UAV. Out of range
/// consumes no randomness; otherwise exactly one uniform draw decides.
CollectionOutcome attempt_collection(const Eigen::Vector3d& uav_pos, std::size_t ws,
                                     std::span<const std::size_t> interferers, std::span<const Sensor> sensors,
                                     const LinkParams& params, Rng& rng);

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (server, client), sorted by client
  double total_cost = 0.0;

  /// Clients served by `server`, ascending.
  std::vector<int> clients_of(int server) const;
};

/// Minimum-cost assignment of every client to a server, with servers
/// replicated ceil(clients / servers) times. Among optimal assignments the
/// one that gives each client (in index order) the lowest server is chosen.
/// Throws std::invalid_argument on an empty, negative or non-finite matrix.
Assignment hungarian_assign(const Eigen::MatrixXd& cost);

/// eps1 * D_cg + eps2 * D_cf + eps3 * D_cc for communication UAV `server`.
double service_metric(int server, std::span<const Eigen::Vector3d> servers,
                      std::span<const Eigen::Vector3d> clients, const Assignment& assignment,
                      const ServiceWeights& weights);

}  // namespace uavfarm::comms
