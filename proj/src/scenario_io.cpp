#include "offload/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace offload {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    const YAML::Mark mark = node.Mark();
    if (mark.is_null()) throw ScenarioError(fmt::format("{}: {}", source_, msg));
    throw ScenarioError(fmt::format("{}:{}:{}: {}", source_, mark.line + 1, mark.column + 1, msg));
  }

  YAML::Node require(const YAML::Node& parent, const char* key) const {
    if (!parent.IsMap()) fail(parent, fmt::format("expected a mapping containing '{}'", key));
    YAML::Node child = parent[key];
    if (!child) fail(parent, fmt::format("missing field '{}'", key));
    return child;
  }

  template <class T>
  T scalar(const YAML::Node& node, const char* what) const {
    if (!node.IsScalar()) fail(node, fmt::format("'{}' must be a scalar", what));
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, fmt::format("'{}' has an invalid value '{}'", what, node.Scalar()));
    }
  }

  template <class T>
  T get(const YAML::Node& parent, const char* key) const {
    return scalar<T>(require(parent, key), key);
  }

  template <class T>
  T get_or(const YAML::Node& parent, const char* key, T fallback) const {
    if (!parent.IsMap()) fail(parent, "expected a mapping");
    YAML::Node child = parent[key];
    return child ? scalar<T>(child, key) : fallback;
  }

  Vec2 point(const YAML::Node& node) const {
    if (!node.IsSequence() || node.size() != 2) fail(node, "a point must be a pair [x, y]");
    return {scalar<double>(node[0], "x"), scalar<double>(node[1], "y")};
  }

  double positive(const YAML::Node& parent, const char* key, double fallback, bool required) const {
    YAML::Node child = parent[key];
    if (!child) {
      if (required) fail(parent, fmt::format("missing field '{}'", key));
      return fallback;
    }
    const double v = scalar<double>(child, key);
    if (!(v > 0.0) || !std::isfinite(v)) fail(child, fmt::format("'{}' must be positive, got {}", key, v));
    return v;
  }

 private:
  std::string source_;
};

RouteModel parse_route(const Reader& rd, const YAML::Node& node, std::size_t vehicle) {
  const YAML::Node wp = rd.require(node, "waypoints");
  if (!wp.IsSequence() || wp.size() == 0) rd.fail(wp, "'waypoints' must be a non-empty list");
  std::vector<Vec2> waypoints;
  for (const auto& p : wp) waypoints.push_back(rd.point(p));
  const std::size_t w = waypoints.size();

  const int initial = rd.get_or<int>(node, "initial", 0);
  if (initial < 0 || static_cast<std::size_t>(initial) >= w)
    rd.fail(node["initial"] ? node["initial"] : node,
            fmt::format("vehicle {}: initial waypoint {} outside [0, {}]", vehicle, initial, w - 1));

  std::vector<double> matrix(w * w, 0.0);
  const YAML::Node dense = node["transitions"];
  const YAML::Node sparse = node["sparse_transitions"];
  if (dense && sparse) rd.fail(node, "give either 'transitions' or 'sparse_transitions', not both");
  if (!dense && !sparse) rd.fail(node, "missing field 'transitions' (or 'sparse_transitions')");
  const YAML::Node rows = dense ? dense : sparse;
  if (!rows.IsSequence() || rows.size() != w)
    rd.fail(rows, fmt::format("vehicle {}: expected {} transition rows, one per waypoint", vehicle, w));
  for (std::size_t i = 0; i < w; ++i) {
    const YAML::Node row = rows[i];
    if (!row.IsSequence()) rd.fail(row, fmt::format("transition row {} must be a list", i));
    if (dense) {
      if (row.size() != w) rd.fail(row, fmt::format("transition row {} needs {} entries", i, w));
      for (std::size_t j = 0; j < w; ++j) matrix[i * w + j] = rd.scalar<double>(row[j], "probability");
    } else {
      for (const auto& entry : row) {
        if (!entry.IsSequence() || entry.size() != 2)
          rd.fail(entry, "sparse entries must be [index, probability]");
        const long j = rd.scalar<long>(entry[0], "index");
        if (j < 0 || static_cast<std::size_t>(j) >= w)
          rd.fail(entry, fmt::format("transition index {} outside [0, {}]", j, w - 1));
        matrix[i * w + static_cast<std::size_t>(j)] += rd.scalar<double>(entry[1], "probability");
      }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      const double p = matrix[i * w + j];
      if (!(p >= 0.0 && p <= 1.0))
        rd.fail(row, fmt::format("vehicle {}: transition row {} has probability {} outside [0, 1]",
                                 vehicle, i, p));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      rd.fail(row, fmt::format("vehicle {}: transition row {} sums to {}, not 1", vehicle, i, sum));
    // absorb the parsing round-off so the route model's strict check passes
    if (std::abs(sum - 1.0) > 1e-12)
      for (std::size_t j = 0; j < w; ++j) matrix[i * w + j] /= sum;
  }
  return RouteModel(std::move(waypoints), std::move(matrix), static_cast<std::size_t>(initial));
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(fmt::format("{}:{}:{}: {}", source, e.mark.line + 1, e.mark.column + 1, e.msg));
  }
  const Reader rd(source);
  if (!root.IsMap()) rd.fail(root, "scenario must be a mapping");

  ScenarioConfig c;
  c.slots = rd.get<int>(root, "slots");
  if (c.slots < 1) rd.fail(root["slots"], "'slots' must be at least 1");

  const YAML::Node ch = rd.require(root, "channel");
  c.channel.gain_const = rd.positive(ch, "gain_const", 0.0, true);
  c.channel.pathloss_exp = rd.positive(ch, "pathloss_exp", c.channel.pathloss_exp, false);
  c.channel.noise_power = rd.positive(ch, "noise_power", c.channel.noise_power, false);
  c.channel.bandwidth = rd.positive(ch, "bandwidth", c.channel.bandwidth, false);
  c.channel.slot_length = rd.positive(ch, "slot_length", c.channel.slot_length, false);
  c.channel.p_max = rd.positive(ch, "p_max", c.channel.p_max, false);
  c.channel.min_distance = rd.positive(ch, "min_distance", c.channel.min_distance, false);

  if (const YAML::Node w = root["weights"]) {
    c.weights.energy = rd.positive(w, "energy", c.weights.energy, false);
    c.weights.residual = rd.positive(w, "residual", c.weights.residual, false);
  }

  const YAML::Node bs = rd.require(root, "base_stations");
  if (!bs.IsSequence() || bs.size() == 0) rd.fail(bs, "'base_stations' must be a non-empty list");
  for (const auto& p : bs) c.bs.positions.push_back(rd.point(p));

  const YAML::Node vehicles = rd.require(root, "vehicles");
  if (!vehicles.IsSequence() || vehicles.size() == 0)
    rd.fail(vehicles, "'vehicles' must be a non-empty list");
  for (std::size_t n = 0; n < vehicles.size(); ++n) {
    const YAML::Node v = vehicles[n];
    const YAML::Node task = rd.require(v, "task");
    Arrival a;
    a.slot = rd.get_or<int>(task, "arrival_slot", 1);
    if (a.slot < 1 || a.slot > c.slots)
      rd.fail(task, fmt::format("vehicle {}: arrival slot {} outside [1, {}]", n, a.slot, c.slots));
    a.bits = rd.positive(task, "bits", 0.0, true);
    c.arrivals.push_back(a);
    c.routes.push_back(parse_route(rd, rd.require(v, "route"), n));
  }

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(fmt::format("{}: {}", source, e.what()));
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(fmt::format("{}: cannot open file", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

std::string scenario_to_yaml(const ScenarioConfig& c, const std::string& header_comment) {
  std::string out;
  if (!header_comment.empty()) {
    std::istringstream lines(header_comment);
    std::string line;
    while (std::getline(lines, line)) out += line.empty() ? "#\n" : fmt::format("# {}\n", line);
  }
  const ChannelParams& ch = c.channel;
  out += fmt::format("slots: {}\n", c.slots);
  out += "channel:\n";
  out += fmt::format("  gain_const: {}\n", ch.gain_const);
  out += fmt::format("  pathloss_exp: {}\n", ch.pathloss_exp);
  out += fmt::format("  noise_power: {}\n", ch.noise_power);
  out += fmt::format("  bandwidth: {}\n", ch.bandwidth);
  out += fmt::format("  slot_length: {}\n", ch.slot_length);
  out += fmt::format("  p_max: {}\n", ch.p_max);
  out += fmt::format("  min_distance: {}\n", ch.min_distance);
  out += fmt::format("weights:\n  energy: {}\n  residual: {}\n", c.weights.energy, c.weights.residual);
  out += "base_stations:\n";
  for (const Vec2& p : c.bs.positions) out += fmt::format("  - [{}, {}]\n", p.x, p.y);
  out += "vehicles:\n";
  for (std::size_t n = 0; n < c.vehicles(); ++n) {
    const RouteModel& r = c.routes[n];
    out += fmt::format("  - task: {{arrival_slot: {}, bits: {}}}\n", c.arrivals[n].slot, c.arrivals[n].bits);
    out += fmt::format("    route:\n      initial: {}\n      waypoints:\n", r.initial_index());
    for (const Vec2& p : r.waypoints()) out += fmt::format("        - [{}, {}]\n", p.x, p.y);
    out += "      sparse_transitions:\n";
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += "        - [";
      bool first = true;
      for (const auto& [j, p] : r.successors(i)) {
        out += fmt::format("{}[{}, {}]", first ? "" : ", ", j, p);
        first = false;
      }
      out += "]\n";
    }
  }
  return out;
}

namespace {

struct GridPoint {
  int i = 0;
  int j = 0;
  bool operator==(const GridPoint&) const = default;
};

/// Random non-reversing walk over grid intersections, long enough to cover `length` meters.
std::vector<Vec2> road_polyline(const GeneratorParams& p, double length, Rng& rng) {
  const int g = p.grid_blocks;
  auto pick = [&](int k) { return static_cast<int>(rng.uniform() * k); };
  GridPoint cur{pick(g + 1), pick(g + 1)};
  GridPoint prev{-1, -1};
  std::vector<Vec2> pts{{cur.i * p.block_length, cur.j * p.block_length}};
  double covered = 0.0;
  while (covered < length) {
    std::vector<GridPoint> options;
    const GridPoint steps[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& s : steps) {
      GridPoint nb{cur.i + s.i, cur.j + s.j};
      if (nb.i < 0 || nb.j < 0 || nb.i > g || nb.j > g || nb == prev) continue;
      options.push_back(nb);
    }
    const GridPoint next = options[static_cast<std::size_t>(pick(static_cast<int>(options.size())))];
    prev = cur;
    cur = next;
    pts.push_back({cur.i * p.block_length, cur.j * p.block_length});
    covered += p.block_length;
  }
  return pts;
}

std::vector<Vec2> resample(const std::vector<Vec2>& poly, double spacing, std::size_t count) {
  std::vector<Vec2> out;
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = static_cast<double>(k) * spacing;
    while (seg + 1 < poly.size() - 1 && seg_start + distance(poly[seg], poly[seg + 1]) < s) {
      seg_start += distance(poly[seg], poly[seg + 1]);
      ++seg;
    }
    const double len = distance(poly[seg], poly[seg + 1]);
    const double f = len > 0.0 ? std::clamp((s - seg_start) / len, 0.0, 1.0) : 0.0;
    out.push_back({poly[seg].x + f * (poly[seg + 1].x - poly[seg].x),
                   poly[seg].y + f * (poly[seg + 1].y - poly[seg].y)});
  }
  return out;
}

}  // namespace

ScenarioConfig generate_scenario(const GeneratorParams& p, std::uint64_t seed) {
  if (p.vehicles < 1 || p.stations < 1 || p.slots < 1 || p.grid_blocks < 1)
    throw std::invalid_argument("generator needs positive vehicle, station, slot and grid counts");
  if (p.latest_arrival < 1 || p.latest_arrival > p.slots)
    throw std::invalid_argument("latest arrival slot must lie in [1, slots]");
  if (!(p.stay >= 0.0 && p.advance_one >= 0.0 && p.advance_two >= 0.0) ||
      !(p.stay + p.advance_one + p.advance_two > 0.0))
    throw std::invalid_argument("mobility probabilities must be non-negative and not all zero");

  ScenarioConfig c;
  c.slots = p.slots;
  c.channel = p.channel;
  c.weights = p.weights;

  // stations: farthest-point placement over intersections and block centres
  Rng bs_rng = Rng::substream(seed, 0x6273, 0);
  std::vector<Vec2> candidates;
  for (int i = 0; i <= 2 * p.grid_blocks; ++i)
    for (int j = 0; j <= 2 * p.grid_blocks; ++j)
      candidates.push_back({i * p.block_length / 2.0, j * p.block_length / 2.0});
  std::vector<bool> used(candidates.size(), false);
  std::size_t first = static_cast<std::size_t>(bs_rng.uniform() * static_cast<double>(candidates.size()));
  c.bs.positions.push_back(candidates[first]);
  used[first] = true;
  while (c.bs.size() < static_cast<std::size_t>(p.stations)) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (used[k]) continue;
      double d = std::numeric_limits<double>::infinity();
      for (const Vec2& b : c.bs.positions) d = std::min(d, distance(candidates[k], b));
      // small random tie-break keeps symmetric layouts seed dependent
      d += 1e-6 * bs_rng.uniform();
      if (d > best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best_d < 0.0) throw std::invalid_argument("grid too small for the requested stations");
    used[best] = true;
    c.bs.positions.push_back(candidates[best]);
  }

  // two waypoints per slot at most, so the last one is never reached
  const std::size_t w = 2 * static_cast<std::size_t>(p.slots) + 1;
  for (int n = 0; n < p.vehicles; ++n) {
    Rng rng = Rng::substream(seed, 0x726f, static_cast<std::uint64_t>(n));
    const auto poly = road_polyline(p, p.waypoint_spacing * static_cast<double>(w), rng);
    std::vector<Vec2> waypoints = resample(poly, p.waypoint_spacing, w);

    double probs[3] = {p.stay, p.advance_one, p.advance_two};
    double total = 0.0;
    for (double& q : probs) {
      if (q > 0.0) q = std::max(q + p.jitter * (2.0 * rng.uniform() - 1.0), 0.01);
      total += q;
    }
    for (double& q : probs) q /= total;
    std::vector<double> matrix(w * w, 0.0);
    for (std::size_t i = 0; i < w; ++i) {
      if (i + 1 == w) {
        matrix[i * w + i] = 1.0;
        continue;
      }
      matrix[i * w + i] = probs[0];
      if (i + 2 == w) {
        matrix[i * w + i + 1] = probs[1] + probs[2];
      } else {
        matrix[i * w + i + 1] = probs[1];
        matrix[i * w + i + 2] = probs[2];
      }
    }
    c.routes.emplace_back(std::move(waypoints), std::move(matrix), 0);

    Arrival a;
    a.slot = 1 + static_cast<int>(rng.uniform() * p.latest_arrival);
    a.bits = p.task_bits;
    c.arrivals.push_back(a);
  }
  c.validate();
  return c;
}

}  // namespace offload
