#include "mavf/netsim.hpp"

#include "mavf/error.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>
#include <tuple>

namespace mavf {

const std::vector<int>& NetworkGraph::neighbors(int id) const {
  static const std::vector<int> kEmpty;
  const auto it = adjacency.find(id);
  return it == adjacency.end() ? kEmpty : it->second;
}

namespace {

bool is_connected(const NetworkGraph& g) {
  if (g.nodes.empty()) return true;
  std::set<int> seen{g.nodes.front()};
  std::queue<int> frontier;
  frontier.push(g.nodes.front());
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (int w : g.neighbors(v)) {
      if (seen.insert(w).second) frontier.push(w);
    }
  }
  return seen.size() == g.nodes.size();
}

}  // namespace

NetworkGraph build_graph(std::span<const int> ids, std::span<const Eigen::Vector2d> positions,
                         const GraphSpec& spec) {
  if (ids.size() != positions.size()) throw std::invalid_argument("build_graph: ids and positions differ in length");
  NetworkGraph g;
  g.nodes.assign(ids.begin(), ids.end());
  std::sort(g.nodes.begin(), g.nodes.end());
  if (std::adjacent_find(g.nodes.begin(), g.nodes.end()) != g.nodes.end()) {
    throw ConfigError("nodes", "duplicate node id");
  }
  for (int id : g.nodes) g.adjacency[id];

  std::set<std::pair<int, int>> links;
  if (spec.mode == GraphSpec::Mode::kRadius) {
    if (!(spec.radius_m > 0.0)) throw ConfigError("graph.radius_m", "must be positive");
    for (std::size_t a = 0; a < ids.size(); ++a) {
      for (std::size_t b = a + 1; b < ids.size(); ++b) {
        const double dist = (positions[a] - positions[b]).norm();
        if (dist == 0.0) throw ConfigError("nodes", "coincident node positions in radius mode");
        if (dist <= spec.radius_m) links.emplace(std::min(ids[a], ids[b]), std::max(ids[a], ids[b]));
      }
    }
  } else {
    const std::set<int> known(g.nodes.begin(), g.nodes.end());
    for (std::size_t e = 0; e < spec.edges.size(); ++e) {
      const auto [i, j] = spec.edges[e];
      const std::string path = "graph.edges[" + std::to_string(e) + "]";
      if (!known.contains(i) || !known.contains(j)) throw ConfigError(path, "unknown node id");
      if (i == j) throw ConfigError(path, "self-loop");
      if (!links.emplace(std::min(i, j), std::max(i, j)).second) throw ConfigError(path, "duplicate edge");
    }
  }
  for (const auto& [i, j] : links) {
    g.edges.emplace_back(i, j);
    g.adjacency[i].push_back(j);
    g.adjacency[j].push_back(i);
  }
  for (auto& [id, nb] : g.adjacency) std::sort(nb.begin(), nb.end());
  g.connected = is_connected(g);
  return g;
}

double TransmissionStats::node_rate(std::size_t i) const {
  return decisions[i] == 0 ? 0.0 : static_cast<double>(transmits[i]) / static_cast<double>(decisions[i]);
}

double TransmissionStats::network_rate() const {
  if (node_ids.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < node_ids.size(); ++i) sum += node_rate(i);
  return sum / static_cast<double>(node_ids.size());
}

TransmissionStats account(std::span<const RoundLog> logs) {
  TransmissionStats s;
  std::map<int, std::pair<long, long>> counts;
  for (const auto& log : logs) {
    for (const auto& a : log.agents) {
      auto& c = counts[a.node];
      c.first += a.transmitted;
      c.second += a.decisions;
    }
  }
  for (const auto& [id, c] : counts) {
    s.node_ids.push_back(id);
    s.transmits.push_back(c.first);
    s.decisions.push_back(c.second);
  }
  return s;
}

Simulation::Simulation(const Scenario& scenario, std::uint64_t seed)
    : scenario_(scenario), model_(cv_model(scenario.delta, scenario.q_scale)), rng_(seed) {
  validate_scenario(scenario_);
  // Agents are kept in ascending id order.
  std::sort(scenario_.nodes.begin(), scenario_.nodes.end(),
            [](const Sensor& a, const Sensor& b) { return a.id < b.id; });

  std::vector<int> ids;
  std::vector<Eigen::Vector2d> positions;
  for (const auto& n : scenario_.nodes) {
    ids.push_back(n.id);
    positions.push_back(n.position);
  }
  graph_ = build_graph(ids, positions, scenario_.graph);

  for (const auto& m : scenario_.missions) requirement_[m.owner] = m.requirement_m * m.requirement_m;

  const RollingWindow start = initial_window(scenario_.horizon, scenario_.prior_mean, scenario_.prior_cov);
  for (const auto& n : scenario_.nodes) {
    AgentState a;
    a.id = n.id;
    a.estimate = start;
    a.prior = start;
    a.lambda = Vec::Zero(start.size());
    for (const auto& [owner, c] : requirement_) a.phi[owner] = 0.0;
    a.phi_reported = a.phi;
    for (int j : graph_.neighbors(n.id)) a.neighbors[j] = NeighborView{start, a.phi};
    agents_.push_back(std::move(a));
  }
  stats_.node_ids = ids;
  stats_.transmits.assign(ids.size(), 0);
  stats_.decisions.assign(ids.size(), 0);

  truth_ = scenario_.initial_truth;
  if (scenario_.trajectory.mode == TrajectorySpec::Mode::kWaypoints) {
    const auto& wp = scenario_.trajectory.waypoints;
    truth_(kPosX) = wp.front().x();
    truth_(kPosY) = wp.front().y();
    const Eigen::Vector2d dir = (wp[1] - wp[0]).normalized() * scenario_.trajectory.speed_mps;
    truth_(kPosX + 1) = dir.x();
    truth_(kPosY + 1) = dir.y();
  }
}

void Simulation::propagate_truth_step() {
  if (scenario_.trajectory.mode == TrajectorySpec::Mode::kModel) {
    truth_ = propagate_truth(model_, truth_, rng_);
    return;
  }
  const auto& wp = scenario_.trajectory.waypoints;
  double travel = scenario_.trajectory.speed_mps * scenario_.delta;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  while (waypoint_leg_ + 1 < wp.size()) {
    const Eigen::Vector2d leg = wp[waypoint_leg_ + 1] - wp[waypoint_leg_];
    const double remaining = leg.norm() - waypoint_offset_;
    velocity = leg.normalized() * scenario_.trajectory.speed_mps;
    if (travel < remaining) {
      waypoint_offset_ += travel;
      break;
    }
    travel -= remaining;
    ++waypoint_leg_;
    waypoint_offset_ = 0.0;
  }
  Eigen::Vector2d pos;
  if (waypoint_leg_ + 1 < wp.size()) {
    pos = wp[waypoint_leg_] + (wp[waypoint_leg_ + 1] - wp[waypoint_leg_]).normalized() * waypoint_offset_;
  } else {
    pos = wp.back();
    velocity.setZero();
  }
  truth_(kPosX) = pos.x();
  truth_(kPosY) = pos.y();
  truth_(kPosX + 1) = velocity.x();
  truth_(kPosY + 1) = velocity.y();
}

void Simulation::advance_all() {
  const int n = model_.state_dim();
  for (auto& a : agents_) {
    a.estimate = advance_window(a.estimate, model_);
    a.prior = advance_window(a.prior, model_);
    a.lambda = shift_window_vector(a.lambda, n);
    for (auto& [j, view] : a.neighbors) view.window = advance_window(view.window, model_);
  }
}

std::optional<MissionSpec> Simulation::mission_for(const AgentState& a) const {
  const auto it = requirement_.find(a.id);
  if (it == requirement_.end()) return std::nullopt;

  // Target: information-weighted fusion of the neighbors' newest positions.
  // g adds the trace of the fused covariance, so ||p - m||^2 + offset is the
  // expected squared error of p under the neighborhood belief. Neighbors share
  // most of their information through consensus, so unless the pool is a plain
  // sum their informations are averaged, as in the prior merge.
  const int n = model_.state_dim();
  const int H = scenario_.horizon;
  auto position_marginal = [&](const RollingWindow& w) {
    Eigen::Matrix2d cov;
    cov << w.cov(H * n + kPosX, H * n + kPosX), w.cov(H * n + kPosX, H * n + kPosY),
           w.cov(H * n + kPosY, H * n + kPosX), w.cov(H * n + kPosY, H * n + kPosY);
    return std::pair<Eigen::Vector2d, Eigen::Matrix2d>(
        Eigen::Vector2d(w.mean(H * n + kPosX), w.mean(H * n + kPosY)), cov);
  };
  Eigen::Vector2d target;
  Eigen::Matrix2d spread;
  if (a.neighbors.empty()) {
    std::tie(target, spread) = position_marginal(a.prior);
  } else {
    Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
    Eigen::Vector2d eta = Eigen::Vector2d::Zero();
    for (const auto& [j, view] : a.neighbors) {
      const auto [mean, cov] = position_marginal(view.window);
      const Eigen::Matrix2d inv = cov.inverse();
      info += inv;
      eta += inv * mean;
    }
    const double weight =
        scenario_.logop == LogopWeighting::kSum ? 1.0 : 1.0 / static_cast<double>(a.neighbors.size());
    spread = (weight * info).inverse();
    target = info.ldlt().solve(eta);
  }
  const double offset = scenario_.mission_uncertainty ? spread.trace() : 0.0;
  return newest_position_mission(a.id, it->second, H, n, target, offset);
}

RoundLog Simulation::run_round() {
  ++step_;
  advance_all();
  propagate_truth_step();

  const std::size_t count = agents_.size();
  // Sensing draws from the shared stream in ascending node id order.
  std::vector<std::optional<Vec>> raw(count);
  for (std::size_t i = 0; i < count; ++i) raw[i] = measure(scenario_.nodes[i], truth_, rng_);

  std::vector<StackedSystem> systems(count);
  std::vector<Mat> covariances(count);
  std::vector<std::optional<MissionSpec>> missions(count);
  RoundLog log;
  log.step = step_;
  log.agents.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const AgentState& a = agents_[i];
    std::optional<Measurement> meas;
    if (raw[i]) meas = linearize(scenario_.nodes[i], a.prior.tail(), *raw[i]);
    systems[i] = build_stacked(model_, meas, a.prior);
    covariances[i] = covariance_update(systems[i]);
    missions[i] = mission_for(a);
    log.agents[i].node = a.id;
    log.agents[i].measured = meas.has_value();
  }

  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < count; ++i) index[agents_[i].id] = i;
  std::vector<std::set<int>> heard(count);

  for (int inner = 0; inner < scenario_.inner_iters; ++inner) {
    std::vector<Outgoing> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      AgentState& a = agents_[i];
      const std::vector<Vec> nb = neighbor_means(a);
      Outgoing& o = out[i];
      if (missions[i]) {
        const MissionSpec& mission = *missions[i];
        const auto res = primal_update_mission(systems[i], scenario_.rho, a.lambda, a.estimate.mean, nb,
                                               mission, a.phi.at(a.id));
        o.x = res.x;
        o.mission_converged = res.converged;
        if (inner == 0) {
          a.phi[a.id] = mission_dual_update(a.phi.at(a.id), scenario_.rho, mission.value(a.estimate.mean), mission.c);
        }
        o.g_val = mission.value(o.x);
      } else {
        o.x = primal_update(systems[i], scenario_.rho, a.lambda, a.estimate.mean, nb);
      }

      std::vector<double> phi;
      for (const auto& [owner, value] : a.phi) phi.push_back(value);
      // The dual carried in the payload uses the fresh iterate against the current caches.
      const Vec lambda_next = dual_update(a.lambda, scenario_.rho, o.x, nb);
      const GaussianBelief actual = aggregate(o.x, covariances[i], lambda_next, phi);
      const GaussianBelief baseline =
          baseline_propagate(a, model_, scenario_.rho, missions[i] ? &*missions[i] : nullptr);
      o.decision = voi_decision(actual, baseline, CensorConfig{scenario_.gamma});
    }

    // Delivery barrier: payloads of this iteration reach neighbors together.
    std::vector<std::map<int, double>> sent_phi(count);
    for (std::size_t i = 0; i < count; ++i) sent_phi[i] = agents_[i].phi;

    for (std::size_t i = 0; i < count; ++i) {
      AgentState& a = agents_[i];
      a.estimate.mean = out[i].x;
      a.estimate.cov = covariances[i];
      if (out[i].decision.transmit) a.phi_reported = sent_phi[i];

      std::vector<std::map<int, double>> received_phi;
      for (int j : graph_.neighbors(a.id)) {
        const std::size_t s = index.at(j);
        if (!out[s].decision.transmit) continue;
        NeighborView& view = a.neighbors.at(j);
        view.window.mean = out[s].x;
        view.window.cov = covariances[s];
        view.phi = sent_phi[s];
        received_phi.push_back(sent_phi[s]);
        heard[i].insert(j);
      }
      a.phi = phi_consensus(a.id, a.phi, received_phi);
      a.lambda = dual_update(a.lambda, scenario_.rho, a.estimate.mean, neighbor_means(a));

      AgentRecord& rec = log.agents[i];
      rec.voi = out[i].decision.voi;
      rec.transmitted += out[i].decision.transmit ? 1 : 0;
      rec.decisions += 1;
      rec.g_val = out[i].g_val;
      rec.mission_converged = rec.mission_converged && out[i].mission_converged;
      stats_.transmits[i] += out[i].decision.transmit ? 1 : 0;
      stats_.decisions[i] += 1;
    }
  }

  for (std::size_t i = 0; i < count; ++i) {
    AgentState& a = agents_[i];
    std::vector<GaussianBelief> received;
    for (int j : heard[i]) {
      if (scenario_.logop == LogopWeighting::kNone) break;
      const NeighborView& view = a.neighbors.at(j);
      received.push_back(GaussianBelief{view.window.mean, view.window.cov});
    }
    const GaussianBelief merged = logop_merge(GaussianBelief{a.estimate.mean, a.estimate.cov}, received,
                                                     scenario_.logop == LogopWeighting::kNormalized);
    a.prior.mean = merged.mean;
    a.prior.cov = merged.cov;

    AgentRecord& rec = log.agents[i];
    const Vec tail = a.estimate.tail();
    rec.estimate = Eigen::Vector2d(tail(kPosX), tail(kPosY));
    rec.err_pos_m = (rec.estimate - Eigen::Vector2d(truth_(kPosX), truth_(kPosY))).norm();
    if (const auto it = a.phi.find(a.id); it != a.phi.end()) rec.phi_own = it->second;
    if (!a.phi.empty()) {
      rec.phi_min = a.phi.begin()->second;
      for (const auto& [owner, value] : a.phi) rec.phi_min = std::min(rec.phi_min, value);
    }
  }
  return log;
}

ConsensusTrace run_static_consensus(std::span<const StackedSystem> systems, const NetworkGraph& graph,
                                    double rho, int max_iters, double tol) {
  const std::size_t count = systems.size();
  if (count != graph.nodes.size()) throw std::invalid_argument("run_static_consensus: one system per node required");
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < count; ++i) index[graph.nodes[i]] = i;

  ConsensusTrace trace;
  std::vector<Vec> x(count), lambda(count);
  for (std::size_t i = 0; i < count; ++i) {
    x[i] = primal_update(systems[i], rho, Vec::Zero(systems[i].window_size), Vec::Zero(systems[i].window_size), {});
    lambda[i] = Vec::Zero(systems[i].window_size);
  }
  auto gather = [&](std::size_t i, const std::vector<Vec>& values) {
    std::vector<Vec> nb;
    for (int j : graph.neighbors(graph.nodes[i])) nb.push_back(values[index.at(j)]);
    return nb;
  };
  auto disagreement = [&] {
    double worst = 0.0;
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j) worst = std::max(worst, (x[i] - x[j]).norm());
    return worst;
  };
  for (int it = 0; it < max_iters; ++it) {
    std::vector<Vec> next(count);
    for (std::size_t i = 0; i < count; ++i) next[i] = primal_update(systems[i], rho, lambda[i], x[i], gather(i, x));
    x = std::move(next);
    for (std::size_t i = 0; i < count; ++i) lambda[i] = dual_update(lambda[i], rho, x[i], gather(i, x));
    trace.disagreement.push_back(disagreement());
    trace.iterations = it + 1;
    if (trace.disagreement.back() < tol) break;
  }
  trace.estimates = x;
  return trace;
}

}  // namespace mavf
