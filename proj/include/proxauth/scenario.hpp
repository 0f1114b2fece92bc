#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxauth/auth.hpp"
#include "proxauth/errors.hpp"
#include "proxauth/proximity.hpp"
#include "proxauth/rf_sim.hpp"
#include "proxauth/rng.hpp"
#include "proxauth/scan.hpp"

namespace proxauth {

struct ScenarioNode {
  std::string node_id;
  DeviceIdentity identity;
  Point2D position;
};

struct Arrival {
  std::int64_t at_ms = 0;
  ScenarioNode node;
};

struct Move {
  std::int64_t at_ms = 0;
  std::string node_id;
  Point2D to;
};

/// A deterministic multi-node script: provisioned roots, timed arrivals and
/// moves, one policy, one seed. When `registry` is absent every identity in
/// the scenario counts as provisioned.
struct Scenario {
  RfEnvironment env;
  std::vector<ScenarioNode> bootstrap;
  std::vector<Arrival> arrivals;
  std::vector<Move> moves;
  ThresholdPolicy policy;
  std::size_t n_strongest = 10;
  double floor_dbm = -100.0;
  std::int64_t reauth_period_ms = 30000;
  std::uint64_t seed = 0;
  std::optional<std::vector<DeviceIdentity>> registry;
};

struct AttachEdge {
  std::string from;
  std::string to;
  double distance = 0.0;
  std::int64_t at_ms = 0;
};

struct JoinRecord {
  std::int64_t at_ms = 0;
  std::string requester;
  std::vector<VerifierVote> votes;
  NodeState outcome = NodeState::Rejected;
  std::optional<std::string> attached_to;
};

struct NodeSummary {
  std::string node_id;
  NodeState state = NodeState::Unauthenticated;
  std::optional<std::string> attached_to;
  bool session_live = false;
};

struct SimReport {
  int schema_version = 1;
  std::uint64_t seed = 0;
  std::vector<JoinRecord> joins;
  std::vector<AttachEdge> attach_edges;
  std::vector<AdminEvent> events;
  std::vector<NodeSummary> nodes;  // sorted by node_id
};

inline void validate_scenario(const Scenario& s) {
  if (s.bootstrap.empty()) throw InvalidScenario("bootstrap set must be non-empty");
  if (s.env.aps.empty()) throw InvalidScenario("environment has no access points");
  if (s.n_strongest == 0) throw InvalidScenario("n_strongest must be >= 1");
  if (s.reauth_period_ms <= 0) throw InvalidScenario("reauth_period_ms must be positive");
  std::set<std::string> ids;
  for (const auto& b : s.bootstrap) {
    if (!ids.insert(b.node_id).second) throw InvalidScenario("duplicate node id: " + b.node_id);
  }
  std::int64_t prev = 0;
  for (const auto& a : s.arrivals) {
    if (a.at_ms < prev) throw InvalidScenario("arrival times must be non-decreasing");
    prev = a.at_ms;
    if (!ids.insert(a.node.node_id).second) {
      throw InvalidScenario("duplicate node id: " + a.node.node_id);
    }
  }
  prev = 0;
  for (const auto& m : s.moves) {
    if (m.at_ms < prev) throw InvalidScenario("move times must be non-decreasing");
    prev = m.at_ms;
    if (ids.count(m.node_id) == 0) throw InvalidScenario("move for unknown node: " + m.node_id);
  }
  validate_environment(s.env);
}

namespace detail {

// Scan noise is keyed by (event kind, time, subject, scanning device), never
// by a mutable counter, so a device's draws are identical across runs that
// differ only in policy or in which other nodes got admitted.
inline std::string scan_label(const char* kind, std::int64_t at_ms, const std::string& subject,
                              const std::string& device) {
  return std::string(kind) + "/" + std::to_string(at_ms) + "/" + subject + "/" + device;
}

struct TimelineEvent {
  std::int64_t at_ms = 0;
  int kind = 0;  // 0 = arrival, 1 = move, 2 = reauth tick
  std::size_t index = 0;
  std::string subject;
};

}  // namespace detail

/// Replays a scenario on a zero-loss, in-order broadcast bus. Arrivals and
/// moves run in timestamp order (arrivals first on ties, then moves, then
/// ticks; equal events order by subject id); a reauth tick fires every
/// reauth period until one period past the last scripted event.
inline SimReport run_scenario(const Scenario& scenario) {
  validate_scenario(scenario);

  DeviceRegistry registry;
  if (scenario.registry) {
    registry = DeviceRegistry(*scenario.registry);
  } else {
    for (const auto& b : scenario.bootstrap) registry.add(b.identity);
    for (const auto& a : scenario.arrivals) registry.add(a.node.identity);
  }

  EngineConfig config{scenario.policy, scenario.n_strongest, scenario.floor_dbm,
                      scenario.reauth_period_ms};
  AuthEngine engine(std::move(registry), config);

  std::map<std::string, Point2D> positions;
  for (const auto& b : scenario.bootstrap) {
    engine.add_bootstrap(b.node_id, b.identity, 0);
    positions[b.node_id] = b.position;
  }

  std::vector<detail::TimelineEvent> timeline;
  std::int64_t last_scripted = 0;
  for (std::size_t i = 0; i < scenario.arrivals.size(); ++i) {
    timeline.push_back({scenario.arrivals[i].at_ms, 0, i, scenario.arrivals[i].node.node_id});
    last_scripted = std::max(last_scripted, scenario.arrivals[i].at_ms);
  }
  for (std::size_t i = 0; i < scenario.moves.size(); ++i) {
    timeline.push_back({scenario.moves[i].at_ms, 1, i, scenario.moves[i].node_id});
    last_scripted = std::max(last_scripted, scenario.moves[i].at_ms);
  }
  const std::int64_t horizon = last_scripted + scenario.reauth_period_ms;
  for (std::int64_t t = scenario.reauth_period_ms; t <= horizon;
       t += scenario.reauth_period_ms) {
    timeline.push_back({t, 2, 0, ""});
  }
  std::stable_sort(timeline.begin(), timeline.end(),
                   [](const detail::TimelineEvent& a, const detail::TimelineEvent& b) {
                     if (a.at_ms != b.at_ms) return a.at_ms < b.at_ms;
                     if (a.kind != b.kind) return a.kind < b.kind;
                     return a.subject < b.subject;
                   });

  SimReport report;
  report.seed = scenario.seed;

  auto scan_for = [&](const std::string& device, const char* kind, std::int64_t at_ms,
                      const std::string& subject) {
    RandomStream rng =
        derive_stream(scenario.seed, detail::scan_label(kind, at_ms, subject, device));
    return snapshot_at(positions.at(device), scenario.env, device, rng, at_ms);
  };

  for (const auto& event : timeline) {
    if (event.kind == 0) {
      const Arrival& arrival = scenario.arrivals[event.index];
      positions[arrival.node.node_id] = arrival.node.position;

      JoinRequest req;
      req.requester_id = arrival.node.node_id;
      req.identity = arrival.node.identity;
      req.snapshot = scan_for(req.requester_id, "join", event.at_ms, req.requester_id);

      std::vector<ScanSnapshot> verifier_scans;
      if (!req.snapshot.observations.empty()) {
        for (const auto& [id, record] : engine.nodes()) {
          if (record.state != NodeState::Authenticated) continue;
          ScanSnapshot scan = scan_for(id, "join", event.at_ms, req.requester_id);
          if (scan.observations.empty()) continue;  // verifier sees nothing; abstain
          verifier_scans.push_back(std::move(scan));
        }
      }
      AuthEngine::JoinOutcome outcome = engine.process_join(req, verifier_scans, event.at_ms);

      JoinRecord record;
      record.at_ms = event.at_ms;
      record.requester = req.requester_id;
      record.votes = outcome.votes;
      record.outcome = outcome.record.state;
      record.attached_to = outcome.record.attached_to;
      report.joins.push_back(std::move(record));
      if (outcome.record.state == NodeState::Authenticated && outcome.winner) {
        report.attach_edges.push_back({req.requester_id, outcome.winner->verifier_id,
                                       outcome.winner->distance.value, event.at_ms});
      }
    } else if (event.kind == 1) {
      const Move& move = scenario.moves[event.index];
      positions[move.node_id] = move.to;
    } else {
      // Reauth tick: every authenticated node re-verifies against its peer.
      // Roots just refresh. Termination does not cascade within the tick.
      std::vector<std::string> authenticated;
      for (const auto& [id, record] : engine.nodes()) {
        if (record.state == NodeState::Authenticated) authenticated.push_back(id);
      }
      for (const auto& id : authenticated) {
        const NodeRecord* node = engine.find(id);
        if (node == nullptr || node->state != NodeState::Authenticated) continue;
        if (!node->attached_to) {
          engine.refresh_root(id, event.at_ms);
          continue;
        }
        const std::string peer = *node->attached_to;
        ScanSnapshot own = scan_for(id, "tick", event.at_ms, id);
        ScanSnapshot peer_scan = scan_for(peer, "tick", event.at_ms, id);
        if (own.observations.empty() || peer_scan.observations.empty()) {
          // Nothing to compare against; proximity cannot be confirmed.
          engine.process_reauth(id, ProximityDistance{std::numeric_limits<double>::infinity(), 0},
                                event.at_ms);
        } else {
          engine.process_reauth(id, own, peer_scan, event.at_ms);
        }
      }
    }
  }

  report.events = engine.events();
  for (const auto& [id, record] : engine.nodes()) {
    NodeSummary summary;
    summary.node_id = id;
    summary.state = record.state;
    summary.attached_to = record.attached_to;
    summary.session_live = record.session.has_value() && record.session->live(horizon);
    report.nodes.push_back(std::move(summary));
  }
  return report;
}

struct PairExperimentConfig {
  std::size_t n_locations = 10;
  std::size_t near_attempts = 5;
  std::size_t far_attempts = 5;
  double near_max_m = 2.0;
  double far_min_m = 4.0;
  double far_max_m = 10.0;
  std::size_t n_strongest = 10;
  double floor_dbm = -100.0;
};

/// One two-device attempt: the pipeline distance and how the pair was placed.
struct PairSample {
  double distance = 0.0;
  bool within_range = false;
};

namespace detail {

inline void bounding_box(const RfEnvironment& env, Point2D& lo, Point2D& hi) {
  lo = {env.aps.front().position.x, env.aps.front().position.y};
  hi = lo;
  for (const auto& ap : env.aps) {
    lo.x = std::min(lo.x, ap.position.x);
    lo.y = std::min(lo.y, ap.position.y);
    hi.x = std::max(hi.x, ap.position.x);
    hi.y = std::max(hi.y, ap.position.y);
  }
}

inline Point2D offset_point(const Point2D& base, double radius, double angle) {
  return {base.x + radius * std::cos(angle), base.y + radius * std::sin(angle)};
}

constexpr double kTwoPi = 6.283185307179586;

/// Distance for one placed pair; an unmeasurable pair (a device seeing no
/// APs) reads as infinitely far.
inline double pair_attempt_distance(const RfEnvironment& env, const Point2D& a,
                                    const Point2D& b, std::size_t n_strongest,
                                    double floor_dbm, std::uint64_t seed,
                                    const std::string& label) {
  RandomStream rng_a = derive_stream(seed, label + "/a");
  RandomStream rng_b = derive_stream(seed, label + "/b");
  const ScanSnapshot scan_a = snapshot_at(a, env, "probe-a", rng_a);
  const ScanSnapshot scan_b = snapshot_at(b, env, "probe-b", rng_b);
  if (scan_a.observations.empty() || scan_b.observations.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  return fingerprint_distance(scan_a, scan_b, n_strongest, floor_dbm).value;
}

}  // namespace detail

/// The deterministic attempt set behind the two-device experiment: at each
/// location the pair is placed within near_max_m for the near attempts and a
/// far_range draw apart for the far attempts; every attempt yields a pipeline
/// distance plus its ground truth. Same (env, config, seed) always reproduces
/// the same samples.
inline std::vector<PairSample> collect_pair_samples(const RfEnvironment& env,
                                                    const PairExperimentConfig& config,
                                                    std::uint64_t seed) {
  if (env.aps.empty()) throw NoAccessPoints();
  Point2D lo;
  Point2D hi;
  detail::bounding_box(env, lo, hi);

  std::vector<PairSample> samples;
  for (std::size_t loc = 0; loc < config.n_locations; ++loc) {
    const std::string loc_label = "exp/loc" + std::to_string(loc);
    RandomStream place = derive_stream(seed, loc_label + "/place");
    const Point2D base{place.next_in(lo.x, hi.x), place.next_in(lo.y, hi.y)};
    for (std::size_t k = 0; k < config.near_attempts; ++k) {
      const std::string label = loc_label + "/near" + std::to_string(k);
      RandomStream geom = derive_stream(seed, label + "/geom");
      const Point2D other = detail::offset_point(base, geom.next_in(0.0, config.near_max_m),
                                                 geom.next_in(0.0, detail::kTwoPi));
      samples.push_back({detail::pair_attempt_distance(env, base, other, config.n_strongest,
                                                       config.floor_dbm, seed, label),
                         true});
    }
    for (std::size_t k = 0; k < config.far_attempts; ++k) {
      const std::string label = loc_label + "/far" + std::to_string(k);
      RandomStream geom = derive_stream(seed, label + "/geom");
      const Point2D other =
          detail::offset_point(base, geom.next_in(config.far_min_m, config.far_max_m),
                               geom.next_in(0.0, detail::kTwoPi));
      samples.push_back({detail::pair_attempt_distance(env, base, other, config.n_strongest,
                                                       config.floor_dbm, seed, label),
                         false});
    }
  }
  return samples;
}

/// Two-device accuracy experiment: every attempt's distance goes through the
/// threshold rule and lands in one confusion cell.
inline ConfusionMatrix run_pair_experiment(const RfEnvironment& env,
                                           const PairExperimentConfig& config,
                                           const ThresholdPolicy& policy, std::uint64_t seed) {
  std::vector<AttemptOutcome> outcomes;
  for (const PairSample& s : collect_pair_samples(env, config, seed)) {
    outcomes.push_back({decide({s.distance, 1}, policy), s.within_range});
  }
  return tally(outcomes);
}

/// Calibrates a threshold the way the experiment's operator would: replay the
/// experiment's own attempt set and pick the candidate that maximizes
/// accuracy, subject to staying tolerance-robust (widening the threshold by
/// `tolerance` must not cost more than `drop_budget_pp` points of accuracy on
/// the calibration data). The overlap warning reports that near and far
/// distances interleave so heavily that only a degenerate threshold met the
/// budget. Tolerance in the returned policy starts at 0.
inline CalibrationResult calibrate_pair_threshold(const RfEnvironment& env,
                                                  const PairExperimentConfig& config,
                                                  std::uint64_t seed, double tolerance = 0.20,
                                                  double drop_budget_pp = 2.0) {
  const std::vector<PairSample> samples = collect_pair_samples(env, config, seed);
  std::vector<double> near;
  std::vector<double> far;
  for (const PairSample& s : samples) (s.within_range ? near : far).push_back(s.distance);
  if (near.empty()) throw EmptyCalibrationSet();

  const double total = static_cast<double>(samples.size());
  const auto accuracy_at = [&](double t) {
    std::size_t correct = 0;
    for (double d : near) correct += d < t ? 1 : 0;
    for (double d : far) correct += d >= t ? 1 : 0;
    return 100.0 * static_cast<double>(correct) / total;
  };

  std::vector<double> candidates;
  for (const PairSample& s : samples) {
    if (std::isfinite(s.distance)) candidates.push_back(s.distance);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  CalibrationResult result;
  double best_accuracy = -1.0;
  for (double t : candidates) {
    const double acc = accuracy_at(t);
    const double relaxed = accuracy_at(t * (1.0 + tolerance));
    if (acc - relaxed > drop_budget_pp) continue;
    if (acc > best_accuracy) {
      best_accuracy = acc;
      result.policy.threshold = t;
    }
  }
  if (best_accuracy < 0.0) {
    // every candidate blew the budget; fall back to plain max-of-near
    std::vector<ProximityDistance> near_d;
    for (double d : near) {
      if (std::isfinite(d)) near_d.push_back({d, 1});
    }
    result = calibrate(near_d);
    result.overlap_warning = true;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Scenario / report serialization

namespace detail {

inline Point2D point_from_json(const nlohmann::json& doc) {
  Point2D p{require_field(doc, "x").get<double>(), require_field(doc, "y").get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw MalformedDocument("coordinates must be finite");
  }
  return p;
}

inline ScenarioNode scenario_node_from_json(const nlohmann::json& doc) {
  ScenarioNode node;
  node.node_id = require_field(doc, "node_id").get<std::string>();
  node.identity = identity_from_json(require_field(doc, "identity"));
  node.position = point_from_json(doc);
  return node;
}

inline nlohmann::json scenario_node_to_json(const ScenarioNode& node) {
  return {{"node_id", node.node_id},
          {"identity", identity_to_json(node.identity)},
          {"x", node.position.x},
          {"y", node.position.y}};
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw MalformedDocument("scenario must be a JSON object");
  Scenario s;
  try {
    s.env = environment_from_json(detail::require_field(doc, "environment"));
    for (const auto& b : detail::require_field(doc, "bootstrap")) {
      s.bootstrap.push_back(detail::scenario_node_from_json(b));
    }
    if (auto it = doc.find("arrivals"); it != doc.end()) {
      for (const auto& a : *it) {
        Arrival arrival;
        arrival.at_ms = detail::require_field(a, "at_ms").get<std::int64_t>();
        arrival.node = detail::scenario_node_from_json(a);
        s.arrivals.push_back(std::move(arrival));
      }
    }
    if (auto it = doc.find("moves"); it != doc.end()) {
      for (const auto& m : *it) {
        Move move;
        move.at_ms = detail::require_field(m, "at_ms").get<std::int64_t>();
        move.node_id = detail::require_field(m, "node_id").get<std::string>();
        move.to = detail::point_from_json(m);
        s.moves.push_back(std::move(move));
      }
    }
    s.policy = policy_from_json(detail::require_field(doc, "policy"));
    if (auto it = doc.find("n_strongest"); it != doc.end()) {
      s.n_strongest = it->get<std::size_t>();
    }
    if (auto it = doc.find("floor_dbm"); it != doc.end()) s.floor_dbm = it->get<double>();
    if (auto it = doc.find("reauth_period_ms"); it != doc.end()) {
      s.reauth_period_ms = it->get<std::int64_t>();
    }
    if (auto it = doc.find("seed"); it != doc.end()) s.seed = it->get<std::uint64_t>();
    if (auto it = doc.find("registry"); it != doc.end()) {
      std::vector<DeviceIdentity> entries;
      for (const auto& e : *it) entries.push_back(identity_from_json(e));
      s.registry = std::move(entries);
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedDocument(e.what());
  }
  validate_scenario(s);
  return s;
}

inline Scenario parse_scenario(std::string_view raw) {
  return scenario_from_json(detail::parse_document(raw));
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json doc;
  doc["environment"] = environment_to_json(s.env);
  doc["bootstrap"] = nlohmann::json::array();
  for (const auto& b : s.bootstrap) doc["bootstrap"].push_back(detail::scenario_node_to_json(b));
  doc["arrivals"] = nlohmann::json::array();
  for (const auto& a : s.arrivals) {
    nlohmann::json entry = detail::scenario_node_to_json(a.node);
    entry["at_ms"] = a.at_ms;
    doc["arrivals"].push_back(std::move(entry));
  }
  doc["moves"] = nlohmann::json::array();
  for (const auto& m : s.moves) {
    doc["moves"].push_back(
        {{"at_ms", m.at_ms}, {"node_id", m.node_id}, {"x", m.to.x}, {"y", m.to.y}});
  }
  doc["policy"] = policy_to_json(s.policy);
  doc["n_strongest"] = s.n_strongest;
  doc["floor_dbm"] = s.floor_dbm;
  doc["reauth_period_ms"] = s.reauth_period_ms;
  doc["seed"] = s.seed;
  if (s.registry) {
    doc["registry"] = nlohmann::json::array();
    for (const auto& e : *s.registry) doc["registry"].push_back(identity_to_json(e));
  }
  return doc;
}

inline nlohmann::json report_to_json(const SimReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = report.schema_version;
  doc["seed"] = report.seed;
  doc["joins"] = nlohmann::json::array();
  for (const auto& join : report.joins) {
    nlohmann::json votes = nlohmann::json::array();
    for (const auto& v : join.votes) {
      votes.push_back({{"verifier", v.verifier_id},
                       {"distance", v.distance.value},
                       {"decision", std::string(to_string(v.decision))}});
    }
    nlohmann::json entry = {{"at_ms", join.at_ms},
                            {"requester", join.requester},
                            {"votes", std::move(votes)},
                            {"outcome", std::string(to_string(join.outcome))}};
    entry["attached_to"] = join.attached_to ? nlohmann::json(*join.attached_to)
                                            : nlohmann::json(nullptr);
    doc["joins"].push_back(std::move(entry));
  }
  doc["attach_edges"] = nlohmann::json::array();
  for (const auto& e : report.attach_edges) {
    doc["attach_edges"].push_back(
        {{"from", e.from}, {"to", e.to}, {"distance", e.distance}, {"at_ms", e.at_ms}});
  }
  doc["events"] = nlohmann::json::array();
  for (const auto& e : report.events) doc["events"].push_back(event_to_json(e));
  doc["nodes"] = nlohmann::json::array();
  for (const auto& n : report.nodes) {
    nlohmann::json entry = {{"node_id", n.node_id},
                            {"state", std::string(to_string(n.state))},
                            {"session_live", n.session_live}};
    entry["attached_to"] =
        n.attached_to ? nlohmann::json(*n.attached_to) : nlohmann::json(nullptr);
    doc["nodes"].push_back(std::move(entry));
  }
  return doc;
}

inline std::string serialize_report(const SimReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

}  // namespace proxauth
