#include "mavf/scenario.hpp"

#include "mavf/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mavf {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.contains(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

double as_double(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  throw ConfigError(path, "expected a number");
}

long long as_int(const json& v, const std::string& path) {
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
  throw ConfigError(path, "expected an integer");
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

Vec as_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = as_double(v[i], index_path(path, i));
  return out;
}

template <typename F>
void optional_field(const json& obj, const char* key, const std::string& path, F&& apply) {
  if (const auto it = obj.find(key); it != obj.end()) apply(*it, join(path, key));
}

const json& required_field(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

std::vector<Eigen::Vector2d> load_waypoints(const std::filesystem::path& file, const std::string& path) {
  std::ifstream in(file);
  if (!in) throw ConfigError(path, "cannot open waypoint file " + file.string());
  std::vector<Eigen::Vector2d> out;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x = 0.0;
    double y = 0.0;
    const bool ok = static_cast<bool>(ss >> x >> y);
    if (!ok && first) {  // header row
      first = false;
      continue;
    }
    first = false;
    if (!ok) throw ConfigError(path, "malformed waypoint on line " + std::to_string(lineno));
    out.emplace_back(x, y);
  }
  return out;
}

json vector_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json number_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

int Scenario::node_index(int id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

Scenario default_scenario() {
  Scenario s;
  s.delta = 1.0;
  s.horizon = 3;
  s.rho = 3e-5;
  s.gamma = 0.0;
  s.gamma_grid = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  s.steps = 200;
  s.runs = 20;
  s.seed = 1;
  s.q_scale = 0.05;

  // Nodes straddle the nominal track from (1, 1) km heading north-east.
  struct Layout {
    SensorKind kind;
    double x;
    double y;
  };
  const Layout layout[] = {
      {SensorKind::kToa, 1500, 400},  {SensorKind::kDoa, 1700, 2100}, {SensorKind::kToa, 3100, 1800},
      {SensorKind::kDoa, 3000, 3400}, {SensorKind::kToa, 4700, 3000}, {SensorKind::kDoa, 4400, 4700},
      {SensorKind::kToa, 6300, 4300}, {SensorKind::kDoa, 5900, 6000}, {SensorKind::kToa, 7900, 5700},
      {SensorKind::kDoa, 7300, 7300},
  };
  int id = 0;
  for (const auto& l : layout) {
    Sensor n;
    n.id = id++;
    n.kind = l.kind;
    n.position = Eigen::Vector2d(l.x, l.y);
    n.noise_std = l.kind == SensorKind::kToa ? 30.0 : 0.05;
    n.sensing_range = 1250.0;
    s.nodes.push_back(n);
  }
  s.graph.mode = GraphSpec::Mode::kRadius;
  s.graph.radius_m = 3000.0;

  s.initial_truth = Vec(4);
  s.initial_truth << 1000.0, 35.0, 1000.0, 30.0;
  s.prior_mean = s.initial_truth;
  s.prior_cov = Vec(Eigen::Vector4d(50.0 * 50.0, 5.0 * 5.0, 50.0 * 50.0, 5.0 * 5.0)).asDiagonal();
  return s;
}

void validate_scenario(const Scenario& s) {
  auto positive = [](double v, const char* path) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path, "must be positive and finite");
  };
  positive(s.delta, "delta");
  positive(s.rho, "rho");
  if (s.horizon < 1) throw ConfigError("horizon", "must be >= 1");
  if (!(s.gamma >= 0.0)) throw ConfigError("gamma", "must be >= 0");
  for (std::size_t i = 0; i < s.gamma_grid.size(); ++i) {
    if (!(s.gamma_grid[i] >= 0.0)) throw ConfigError(index_path("gamma_grid", i), "must be >= 0");
    if (i > 0 && s.gamma_grid[i] < s.gamma_grid[i - 1]) throw ConfigError("gamma_grid", "must be sorted ascending");
  }
  if (s.steps < 0) throw ConfigError("steps", "must be >= 0");
  if (s.runs < 1) throw ConfigError("runs", "must be >= 1");
  if (!(s.q_scale >= 0.0) || !std::isfinite(s.q_scale)) throw ConfigError("q_scale", "must be >= 0");
  if (s.inner_iters < 1) throw ConfigError("inner_iters", "must be >= 1");
  if (s.threads < 0) throw ConfigError("threads", "must be >= 0");
  if (s.nodes.empty()) throw ConfigError("nodes", "at least one node required");

  std::set<int> ids;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& n = s.nodes[i];
    const std::string path = index_path("nodes", i);
    if (!ids.insert(n.id).second) throw ConfigError(path + ".id", "duplicate node id");
    if (!(n.noise_std > 0.0)) throw ConfigError(path + ".noise_std", "must be positive");
    if (!(n.sensing_range > 0.0)) throw ConfigError(path + ".sensing_range", "must be positive");
    if (!n.position.allFinite()) throw ConfigError(path, "position must be finite");
  }
  std::set<int> owners;
  for (std::size_t i = 0; i < s.missions.size(); ++i) {
    const std::string path = index_path("missions", i);
    if (!ids.contains(s.missions[i].owner)) throw ConfigError(path + ".owner", "unknown node id");
    if (!owners.insert(s.missions[i].owner).second) throw ConfigError(path + ".owner", "one mission per owner");
    if (!(s.missions[i].requirement_m > 0.0)) throw ConfigError(path + ".requirement_m", "must be positive");
  }
  for (std::size_t i = 0; i < s.flow_placements.size(); ++i) {
    const std::string path = index_path("flow_placements", i);
    if (!ids.contains(s.flow_placements[i].owner)) throw ConfigError(path + ".owner", "unknown node id");
    if (!(s.flow_placements[i].requirement_m > 0.0)) throw ConfigError(path + ".requirement_m", "must be positive");
  }
  if (s.initial_truth.size() != kStateDim || !s.initial_truth.allFinite()) {
    throw ConfigError("initial_truth", "expected 4 finite entries [x, vx, y, vy]");
  }
  if (s.prior_mean.size() != kStateDim || !s.prior_mean.allFinite()) throw ConfigError("prior.mean", "expected 4 finite entries");
  if (s.prior_cov.rows() != kStateDim || s.prior_cov.cols() != kStateDim) throw ConfigError("prior", "covariance must be 4x4");
  if (Eigen::LLT<Mat>(s.prior_cov).info() != Eigen::Success || !s.prior_cov.isApprox(s.prior_cov.transpose())) {
    throw ConfigError("prior", "covariance must be symmetric positive definite");
  }
  if (s.graph.mode == GraphSpec::Mode::kRadius && !(s.graph.radius_m > 0.0)) {
    throw ConfigError("graph.radius_m", "must be positive");
  }
  if (s.trajectory.mode == TrajectorySpec::Mode::kWaypoints) {
    if (s.trajectory.waypoints.size() < 2) throw ConfigError("trajectory.file", "need at least two waypoints");
    if (!(s.trajectory.speed_mps > 0.0)) throw ConfigError("trajectory.speed_mps", "must be positive");
    for (std::size_t i = 1; i < s.trajectory.waypoints.size(); ++i) {
      if (s.trajectory.waypoints[i] == s.trajectory.waypoints[i - 1]) {
        throw ConfigError("trajectory.file", "consecutive waypoints must differ");
      }
    }
  }
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "",
             {"delta", "horizon", "rho", "gamma", "gamma_grid", "steps", "runs", "seed", "q_scale", "inner_iters",
              "threads", "logop", "mission_uncertainty", "nodes", "graph", "missions", "flow_placements", "initial_truth", "prior", "trajectory"});

  Scenario s = default_scenario();
  optional_field(root, "delta", "", [&](const json& v, const std::string& p) { s.delta = as_double(v, p); });
  optional_field(root, "horizon", "", [&](const json& v, const std::string& p) { s.horizon = static_cast<int>(as_int(v, p)); });
  optional_field(root, "rho", "", [&](const json& v, const std::string& p) { s.rho = as_double(v, p); });
  optional_field(root, "gamma", "", [&](const json& v, const std::string& p) { s.gamma = as_double(v, p); });
  optional_field(root, "gamma_grid", "", [&](const json& v, const std::string& p) {
    const Vec g = as_vector(v, p);
    s.gamma_grid.assign(g.data(), g.data() + g.size());
  });
  optional_field(root, "steps", "", [&](const json& v, const std::string& p) { s.steps = static_cast<int>(as_int(v, p)); });
  optional_field(root, "runs", "", [&](const json& v, const std::string& p) { s.runs = static_cast<int>(as_int(v, p)); });
  optional_field(root, "seed", "", [&](const json& v, const std::string& p) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError(p, "expected a non-negative integer");
    }
    s.seed = v.get<std::uint64_t>();
  });
  optional_field(root, "q_scale", "", [&](const json& v, const std::string& p) { s.q_scale = as_double(v, p); });
  optional_field(root, "inner_iters", "", [&](const json& v, const std::string& p) { s.inner_iters = static_cast<int>(as_int(v, p)); });
  optional_field(root, "threads", "", [&](const json& v, const std::string& p) { s.threads = static_cast<int>(as_int(v, p)); });
  optional_field(root, "mission_uncertainty", "", [&](const json& v, const std::string& p) {
    if (!v.is_boolean()) throw ConfigError(p, "expected a boolean");
    s.mission_uncertainty = v.get<bool>();
  });
  optional_field(root, "logop", "", [&](const json& v, const std::string& p) {
    const auto name = as_string(v, p);
    if (name == "normalized") {
      s.logop = LogopWeighting::kNormalized;
    } else if (name == "sum") {
      s.logop = LogopWeighting::kSum;
    } else if (name == "none") {
      s.logop = LogopWeighting::kNone;
    } else {
      throw ConfigError(p, "expected \"normalized\", \"sum\" or \"none\"");
    }
  });

  optional_field(root, "nodes", "", [&](const json& v, const std::string& p) {
    if (!v.is_array()) throw ConfigError(p, "expected an array");
    s.nodes.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string np = index_path(p, i);
      const json& n = v[i];
      check_keys(n, np, {"id", "kind", "x", "y", "noise_std", "sensing_range"});
      Sensor sensor;
      sensor.id = static_cast<int>(as_int(required_field(n, "id", np), join(np, "id")));
      const auto kind_name = as_string(required_field(n, "kind", np), join(np, "kind"));
      const auto kind = parse_sensor_kind(kind_name);
      if (!kind) throw ConfigError(join(np, "kind"), "expected TOA, DOA or POSITION, got " + kind_name);
      sensor.kind = *kind;
      sensor.position = Eigen::Vector2d(as_double(required_field(n, "x", np), join(np, "x")),
                                        as_double(required_field(n, "y", np), join(np, "y")));
      sensor.noise_std = as_double(required_field(n, "noise_std", np), join(np, "noise_std"));
      sensor.sensing_range = 1250.0;
      optional_field(n, "sensing_range", np, [&](const json& r, const std::string& rp) { sensor.sensing_range = as_double(r, rp); });
      s.nodes.push_back(sensor);
    }
  });

  optional_field(root, "graph", "", [&](const json& v, const std::string& p) {
    check_keys(v, p, {"mode", "radius_m", "edges"});
    const auto mode = as_string(required_field(v, "mode", p), join(p, "mode"));
    s.graph = GraphSpec{};
    if (mode == "radius") {
      s.graph.mode = GraphSpec::Mode::kRadius;
      s.graph.radius_m = as_double(required_field(v, "radius_m", p), join(p, "radius_m"));
      if (v.contains("edges")) throw ConfigError(join(p, "edges"), "not allowed in radius mode");
    } else if (mode == "edges") {
      s.graph.mode = GraphSpec::Mode::kEdges;
      const std::string ep = join(p, "edges");
      const json& edges = required_field(v, "edges", p);
      if (!edges.is_array()) throw ConfigError(ep, "expected an array of [i, j] pairs");
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string eip = index_path(ep, i);
        if (!edges[i].is_array() || edges[i].size() != 2) throw ConfigError(eip, "expected [i, j]");
        s.graph.edges.emplace_back(static_cast<int>(as_int(edges[i][0], eip)), static_cast<int>(as_int(edges[i][1], eip)));
      }
      if (v.contains("radius_m")) throw ConfigError(join(p, "radius_m"), "not allowed in edges mode");
    } else {
      throw ConfigError(join(p, "mode"), "expected radius or edges");
    }
  });

  auto parse_missions = [&](const json& v, const std::string& p, bool with_label) {
    if (!v.is_array()) throw ConfigError(p, "expected an array");
    std::vector<FlowPlacement> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string mp = index_path(p, i);
      if (with_label) {
        check_keys(v[i], mp, {"label", "owner", "requirement_m"});
      } else {
        check_keys(v[i], mp, {"owner", "requirement_m"});
      }
      FlowPlacement f;
      f.label = with_label ? as_string(required_field(v[i], "label", mp), join(mp, "label")) : std::string{};
      f.owner = static_cast<int>(as_int(required_field(v[i], "owner", mp), join(mp, "owner")));
      f.requirement_m = as_double(required_field(v[i], "requirement_m", mp), join(mp, "requirement_m"));
      out.push_back(f);
    }
    return out;
  };
  optional_field(root, "missions", "", [&](const json& v, const std::string& p) {
    s.missions.clear();
    for (const auto& f : parse_missions(v, p, false)) s.missions.push_back(MissionConfig{f.owner, f.requirement_m});
  });
  optional_field(root, "flow_placements", "", [&](const json& v, const std::string& p) {
    s.flow_placements = parse_missions(v, p, true);
  });

  optional_field(root, "initial_truth", "", [&](const json& v, const std::string& p) { s.initial_truth = as_vector(v, p); });
  optional_field(root, "prior", "", [&](const json& v, const std::string& p) {
    check_keys(v, p, {"mean", "cov_diag", "cov"});
    s.prior_mean = as_vector(required_field(v, "mean", p), join(p, "mean"));
    if (v.contains("cov_diag") == v.contains("cov")) throw ConfigError(p, "give exactly one of cov_diag or cov");
    if (v.contains("cov_diag")) {
      s.prior_cov = as_vector(v.at("cov_diag"), join(p, "cov_diag")).asDiagonal();
    } else {
      const std::string cp = join(p, "cov");
      const json& rows = v.at("cov");
      if (!rows.is_array()) throw ConfigError(cp, "expected a 4x4 nested array");
      s.prior_cov = Mat(rows.size(), rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const Vec row = as_vector(rows[r], index_path(cp, r));
        if (row.size() != static_cast<Eigen::Index>(rows.size())) throw ConfigError(index_path(cp, r), "row length mismatch");
        s.prior_cov.row(static_cast<Eigen::Index>(r)) = row.transpose();
      }
    }
  });
  optional_field(root, "trajectory", "", [&](const json& v, const std::string& p) {
    check_keys(v, p, {"mode", "file", "speed_mps"});
    const auto mode = as_string(required_field(v, "mode", p), join(p, "mode"));
    s.trajectory = TrajectorySpec{};
    if (mode == "model") {
      s.trajectory.mode = TrajectorySpec::Mode::kModel;
    } else if (mode == "waypoints") {
      s.trajectory.mode = TrajectorySpec::Mode::kWaypoints;
      s.trajectory.file = as_string(required_field(v, "file", p), join(p, "file"));
      optional_field(v, "speed_mps", p, [&](const json& sp, const std::string& spp) { s.trajectory.speed_mps = as_double(sp, spp); });
      std::filesystem::path file(s.trajectory.file);
      if (file.is_relative()) file = base_dir / file;
      s.trajectory.waypoints = load_waypoints(file, join(p, "file"));
    } else {
      throw ConfigError(join(p, "mode"), "expected model or waypoints");
    }
  });

  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.parent_path());
}

std::string scenario_to_json(const Scenario& s) {
  json root;
  root["delta"] = s.delta;
  root["horizon"] = s.horizon;
  root["rho"] = s.rho;
  root["gamma"] = number_json(s.gamma);
  json grid = json::array();
  for (double g : s.gamma_grid) grid.push_back(number_json(g));
  root["gamma_grid"] = grid;
  root["steps"] = s.steps;
  root["runs"] = s.runs;
  root["seed"] = s.seed;
  root["q_scale"] = s.q_scale;
  root["inner_iters"] = s.inner_iters;
  root["threads"] = s.threads;
  root["mission_uncertainty"] = s.mission_uncertainty;
  root["logop"] = s.logop == LogopWeighting::kSum ? "sum" : s.logop == LogopWeighting::kNone ? "none" : "normalized";
  json nodes = json::array();
  for (const auto& n : s.nodes) {
    nodes.push_back({{"id", n.id}, {"kind", std::string(to_string(n.kind))}, {"x", n.position.x()},
                     {"y", n.position.y()}, {"noise_std", n.noise_std}, {"sensing_range", n.sensing_range}});
  }
  root["nodes"] = nodes;
  if (s.graph.mode == GraphSpec::Mode::kRadius) {
    root["graph"] = {{"mode", "radius"}, {"radius_m", s.graph.radius_m}};
  } else {
    json edges = json::array();
    for (const auto& [i, j] : s.graph.edges) edges.push_back({i, j});
    root["graph"] = {{"mode", "edges"}, {"edges", edges}};
  }
  json missions = json::array();
  for (const auto& m : s.missions) missions.push_back({{"owner", m.owner}, {"requirement_m", m.requirement_m}});
  root["missions"] = missions;
  json flows = json::array();
  for (const auto& f : s.flow_placements) {
    flows.push_back({{"label", f.label}, {"owner", f.owner}, {"requirement_m", f.requirement_m}});
  }
  root["flow_placements"] = flows;
  root["initial_truth"] = vector_json(s.initial_truth);
  json cov = json::array();
  for (Eigen::Index r = 0; r < s.prior_cov.rows(); ++r) cov.push_back(vector_json(s.prior_cov.row(r).transpose()));
  root["prior"] = {{"mean", vector_json(s.prior_mean)}, {"cov", cov}};
  if (s.trajectory.mode == TrajectorySpec::Mode::kModel) {
    root["trajectory"] = {{"mode", "model"}};
  } else {
    root["trajectory"] = {{"mode", "waypoints"}, {"file", s.trajectory.file}, {"speed_mps", s.trajectory.speed_mps}};
  }
  return root.dump(2) + "\n";
}

}  // namespace mavf
