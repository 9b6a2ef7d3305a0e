#include "uavfarm/comms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace uavfarm::comms {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

Eigen::Vector3d ground(const Sensor& s) { return {s.position.x(), s.position.y(), 0.0}; }

struct Solution {
  std::vector<int> slot_of_row;  // 0-based slot per client
  std::vector<double> u, v;      // duals, 1-based like the solver
  double cost = 0.0;
};

// Shortest-augmenting-path Hungarian method for rows <= columns.
// a is rows x cols; every row is matched to a distinct column. Infinite
// entries are forbidden pairs; nullopt when no full matching avoids them.
std::optional<Solution> solve_rectangular(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0 || delta == kInf) return std::nullopt;
      for (int j = 0; j <= m; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Solution s;
  s.slot_of_row.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) s.slot_of_row[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  for (int i = 0; i < n; ++i) s.cost += a(i, s.slot_of_row[static_cast<std::size_t>(i)]);
  s.u = std::move(u);
  s.v = std::move(v);
  return s;
}

}  // namespace

double path_loss(double distance_m, const LinkParams& params) {
  if (!(distance_m > 0.0)) throw std::domain_error("path_loss: distance must be positive");
  const double d_km = distance_m / 1000.0;
  const double f_mhz = params.f_c_ghz * 1000.0;
  const double free_space = 20.0 * std::log10(d_km) + 20.0 * std::log10(f_mhz) + 32.44;
  const double vegetation = params.a1 * std::pow(params.f_c_ghz, params.a2) * std::pow(distance_m, params.a3);
  return free_space + vegetation;
}

double thermal_noise(const LinkParams& params) {
  return params.k_boltzmann * params.t_kelvin * params.bandwidth_hz;
}

double received_power(double distance_m, const LinkParams& params) {
  return dbm_to_watts(params.p_wt_dbm + params.g_ws_dbi - path_loss(std::max(distance_m, 1.0), params));
}

double sinr(const Eigen::Vector3d& uav_pos, std::size_t serving, std::span<const std::size_t> interferers,
            std::span<const Sensor> sensors, const LinkParams& params) {
  if (serving >= sensors.size()) throw std::out_of_range("sinr: serving sensor index");
  const double signal = received_power((uav_pos - ground(sensors[serving])).norm(), params);
  double interference = 0.0;
  for (std::size_t k : interferers) {
    if (k == serving) continue;
    interference += received_power((uav_pos - ground(sensors[k])).norm(), params);
  }
  const double denom = interference + thermal_noise(params);
  if (!(denom > 0.0)) throw std::domain_error("sinr: interference plus noise must be positive");
  return signal / denom;
}

double ber(double sinr_linear) {
  // Q(sqrt(2 s)) with Q(x) ~ exp(-x^2 / 2) / 2
  return 0.5 * std::exp(-sinr_linear);
}

double plr(double ber, int packet_bytes) {
  const int bits = 8 * packet_bytes;
  return 1.0 - std::pow(1.0 - ber, bits);
}

CollectionOutcome attempt_collection(const Eigen::Vector3d& uav_pos, std::size_t ws,
                                     std::span<const std::size_t> interferers, std::span<const Sensor> sensors,
                                     const LinkParams& params, Rng& rng) {
  if ((uav_pos - ground(sensors[ws])).norm() > params.collect_radius) return CollectionOutcome::out_of_range;
  const double loss = plr(ber(sinr(uav_pos, ws, interferers, sensors, params)), params.packet_bytes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return unit(rng) >= loss ? CollectionOutcome::success : CollectionOutcome::failure;
}

std::vector<int> Assignment::clients_of(int server) const {
  std::vector<int> out;
  for (const auto& [s, c] : pairs) {
    if (s == server) out.push_back(c);
  }
  return out;
}

Assignment hungarian_assign(const Eigen::MatrixXd& cost) {
  const int n_servers = static_cast<int>(cost.rows());
  const int n_clients = static_cast<int>(cost.cols());
  if (n_servers == 0 || n_clients == 0) throw std::invalid_argument("hungarian_assign: empty cost matrix");
  if (!cost.allFinite() || (cost.array() < 0).any()) {
    throw std::invalid_argument("hungarian_assign: costs must be finite and non-negative");
  }
  const int replicas = (n_clients + n_servers - 1) / n_servers;
  const int slots = n_servers * replicas;
  const auto server_of = [replicas](int slot) { return slot / replicas; };

  // rows = clients, columns = replicated server slots
  Eigen::MatrixXd a(n_clients, slots);
  for (int c = 0; c < n_clients; ++c) {
    for (int j = 0; j < slots; ++j) a(c, j) = cost(server_of(j), c);
  }
  Solution best = *solve_rectangular(a);

  const double tol = 1e-9 * (1.0 + cost.maxCoeff()) * n_clients;
  const auto tight_servers = [&](const Solution& s, int c) {
    std::vector<int> out;
    for (int j = 0; j < slots; ++j) {
      const double reduced = a(c, j) - s.u[static_cast<std::size_t>(c + 1)] - s.v[static_cast<std::size_t>(j + 1)];
      if (reduced <= tol && (out.empty() || out.back() != server_of(j))) out.push_back(server_of(j));
    }
    return out;
  };

  bool tied = false;
  for (int c = 0; c < n_clients && !tied; ++c) tied = tight_servers(best, c).size() > 1;

  if (tied) {
    // Fix clients in order to the lowest server that still admits an optimum.
    const double optimum = best.cost;
    const Solution duals = best;
    Eigen::MatrixXd restricted = a;
    for (int c = 0; c < n_clients; ++c) {
      for (int s : tight_servers(duals, c)) {
        Eigen::MatrixXd trial = restricted;
        for (int j = 0; j < slots; ++j) {
          if (server_of(j) != s) trial(c, j) = kInf;
        }
        std::optional<Solution> sol = solve_rectangular(trial);
        if (sol && sol->cost <= optimum + tol) {
          restricted = std::move(trial);
          best = std::move(*sol);
          break;
        }
      }
    }
  }

  Assignment out;
  out.pairs.reserve(static_cast<std::size_t>(n_clients));
  for (int c = 0; c < n_clients; ++c) {
    const int s = server_of(best.slot_of_row[static_cast<std::size_t>(c)]);
    out.pairs.emplace_back(s, c);
    out.total_cost += cost(s, c);
  }
  return out;
}

double service_metric(int server, std::span<const Eigen::Vector3d> servers,
                      std::span<const Eigen::Vector3d> clients, const Assignment& assignment,
                      const ServiceWeights& weights) {
  const Eigen::Vector3d& me = servers[static_cast<std::size_t>(server)];
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  double farthest = 0.0;
  int served = 0;
  for (const auto& [s, c] : assignment.pairs) {
    if (s != server) continue;
    const auto& p = clients[static_cast<std::size_t>(c)];
    centroid += p;
    farthest = std::max(farthest, (p - me).norm());
    ++served;
  }
  const double d_cg = served > 0 ? (centroid / served - me).norm() : 0.0;
  const double d_cf = farthest;
  Eigen::Vector3d peers = Eigen::Vector3d::Zero();
  for (const auto& p : servers) peers += p;
  const double d_cc = (peers / static_cast<double>(servers.size()) - me).norm();
  return weights.eps1 * d_cg + weights.eps2 * d_cf + weights.eps3 * d_cc;
}

}  // namespace uavfarm::comms
