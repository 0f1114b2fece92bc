#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxauth/errors.hpp"
#include "proxauth/proximity.hpp"
#include "proxauth/scan.hpp"

namespace proxauth {

enum class NodeState { Unauthenticated, Authenticated, Rejected };

inline std::string_view to_string(NodeState s) {
  switch (s) {
    case NodeState::Unauthenticated: return "unauthenticated";
    case NodeState::Authenticated: return "authenticated";
    case NodeState::Rejected: return "rejected";
  }
  return "unauthenticated";
}

/// Live pairing between a node and the verifier it joined through. The
/// session stays alive while re-verification keeps landing inside the reauth
/// period (a grace of exactly one period).
struct Session {
  std::string session_id;
  std::string peer;
  std::int64_t started_at_ms = 0;
  std::int64_t last_verified_at_ms = 0;
  std::int64_t reauth_period_ms = 30000;

  bool live(std::int64_t now_ms) const {
    return now_ms - last_verified_at_ms < reauth_period_ms;
  }
};

/// A node's identity, authentication state and attachment edge. Bootstrap
/// roots are Authenticated with no attached_to; their session is self-peered.
struct NodeRecord {
  std::string node_id;
  DeviceIdentity identity;
  NodeState state = NodeState::Unauthenticated;
  std::optional<std::string> attached_to;
  std::optional<Session> session;
};

struct JoinRequest {
  std::string requester_id;
  DeviceIdentity identity;
  ScanSnapshot snapshot;  // snapshot.device_id must equal requester_id
};

struct VerifierVote {
  std::string verifier_id;
  ProximityDistance distance;
  ProximityDecision decision = ProximityDecision::Reject;
};

/// Provisioned device identifiers; membership is exact (kind, value) equality.
class DeviceRegistry {
 public:
  DeviceRegistry() = default;
  explicit DeviceRegistry(std::vector<DeviceIdentity> entries) {
    for (auto& e : entries) entries_.insert(std::move(e));
  }

  void add(DeviceIdentity identity) { entries_.insert(std::move(identity)); }
  bool contains(const DeviceIdentity& identity) const { return entries_.count(identity) > 0; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::set<DeviceIdentity> entries_;
};

enum class AdminEventKind { IdentityMismatch, SessionTerminated, JoinRejected };

inline std::string_view to_string(AdminEventKind k) {
  switch (k) {
    case AdminEventKind::IdentityMismatch: return "identity_mismatch";
    case AdminEventKind::SessionTerminated: return "session_terminated";
    case AdminEventKind::JoinRejected: return "join_rejected";
  }
  return "join_rejected";
}

struct AdminEvent {
  std::int64_t at_ms = 0;
  AdminEventKind kind = AdminEventKind::JoinRejected;
  std::string subject;
  std::string detail;
};

enum class IdentityResult { Known, Unknown };

/// The comparison pipeline both join verification and re-authentication use.
/// The index universe is the union of the two top-N BSSID sets; each side's
/// vector takes its measured reading for every universe member it can see at
/// all, and the floor only where the AP is truly absent from its scan. Rank
/// flips at the N-th slot therefore cost their real dB difference instead of
/// a floor penalty, while an AP one device cannot detect still inflates the
/// distance as intended.
inline ProximityDistance fingerprint_distance(const ScanSnapshot& a, const ScanSnapshot& b,
                                              std::size_t n_strongest, double floor_dbm) {
  std::set<std::string> universe;
  for (const auto& o : top_n(a, n_strongest).observations) universe.insert(o.bssid);
  for (const auto& o : top_n(b, n_strongest).observations) universe.insert(o.bssid);
  const auto restrict_to_universe = [&universe](const ScanSnapshot& s) {
    ScanSnapshot out{s.device_id, s.captured_at_ms, {}};
    for (const auto& o : s.observations) {
      if (universe.count(o.bssid) > 0) out.observations.push_back(o);
    }
    return out;
  };
  return euclidean_distance(
      align(restrict_to_universe(a), restrict_to_universe(b), floor_dbm));
}

/// One verifier's view of a join request: pipeline distance over the two
/// fingerprints, then the threshold rule.
inline VerifierVote evaluate_join(const JoinRequest& req, const ScanSnapshot& verifier_snapshot,
                                  const ThresholdPolicy& policy, std::size_t n_strongest,
                                  double floor_dbm) {
  if (req.snapshot.observations.empty() || verifier_snapshot.observations.empty()) {
    throw EmptyUniverse();
  }
  VerifierVote vote;
  vote.verifier_id = verifier_snapshot.device_id;
  vote.distance = fingerprint_distance(verifier_snapshot, req.snapshot, n_strongest, floor_dbm);
  vote.decision = decide(vote.distance, policy);
  return vote;
}

/// Picks the accepting verifier with the least distance; equal distances go
/// to the lexicographically smallest verifier id. Empty optional = NoAcceptor.
inline std::optional<VerifierVote> resolve_votes(std::span<const VerifierVote> votes) {
  std::optional<VerifierVote> best;
  for (const auto& v : votes) {
    if (v.decision != ProximityDecision::Accept) continue;
    if (!best || v.distance.value < best->distance.value ||
        (v.distance.value == best->distance.value && v.verifier_id < best->verifier_id)) {
      best = v;
    }
  }
  return best;
}

inline IdentityResult check_identity(const DeviceRegistry& registry,
                                     const DeviceIdentity& identity) {
  return registry.contains(identity) ? IdentityResult::Known : IdentityResult::Unknown;
}

struct AdmitResult {
  NodeRecord record;
  std::vector<AdminEvent> events;
};

/// Full admission rule: Authenticated with a fresh session iff some verifier
/// accepted (least distance wins) AND the identity is registered. Both checks
/// always run, so an environment-replay attack with a stolen fingerprint
/// still surfaces as an IdentityMismatch.
inline AdmitResult admit(const JoinRequest& req, std::span<const VerifierVote> votes,
                         const DeviceRegistry& registry, std::int64_t now_ms,
                         std::int64_t reauth_period_ms) {
  AdmitResult result;
  result.record.node_id = req.requester_id;
  result.record.identity = req.identity;

  const std::optional<VerifierVote> winner = resolve_votes(votes);
  const IdentityResult identity = check_identity(registry, req.identity);

  if (winner && identity == IdentityResult::Known) {
    result.record.state = NodeState::Authenticated;
    result.record.attached_to = winner->verifier_id;
    Session session;
    session.session_id = "sess-" + req.requester_id + "-" + std::to_string(now_ms);
    session.peer = winner->verifier_id;
    session.started_at_ms = now_ms;
    session.last_verified_at_ms = now_ms;
    session.reauth_period_ms = reauth_period_ms;
    result.record.session = std::move(session);
    return result;
  }

  result.record.state = NodeState::Rejected;
  if (identity == IdentityResult::Unknown) {
    result.events.push_back({now_ms, AdminEventKind::IdentityMismatch, req.requester_id,
                             "identifier not in registry: " +
                                 std::string(to_string(req.identity.kind)) + " " +
                                 req.identity.value});
  }
  std::string reason;
  if (!winner) reason = "no verifier within proximity threshold";
  if (identity == IdentityResult::Unknown) {
    if (!reason.empty()) reason += "; ";
    reason += "identity mismatch";
  }
  result.events.push_back(
      {now_ms, AdminEventKind::JoinRejected, req.requester_id, std::move(reason)});
  return result;
}

struct ReauthResult {
  NodeRecord record;
  std::vector<AdminEvent> events;
};

/// Periodic re-verification: a fresh in-threshold distance refreshes the
/// session; anything else drops it and terminates. Descendants attached
/// through this node are re-evaluated on their own next tick.
inline ReauthResult reauth_tick(const NodeRecord& node, const ProximityDistance& fresh_distance,
                                const ThresholdPolicy& policy, std::int64_t now_ms) {
  if (node.state != NodeState::Authenticated || !node.session) {
    throw NotAuthenticated(node.node_id);
  }
  ReauthResult result;
  result.record = node;
  if (decide(fresh_distance, policy) == ProximityDecision::Accept) {
    result.record.session->last_verified_at_ms = now_ms;
    return result;
  }
  result.events.push_back({now_ms, AdminEventKind::SessionTerminated, node.node_id,
                           "proximity to " + node.session->peer + " lost (distance " +
                               std::to_string(fresh_distance.value) + ")"});
  result.record.state = NodeState::Unauthenticated;
  result.record.session.reset();
  result.record.attached_to.reset();
  return result;
}

struct EngineConfig {
  ThresholdPolicy policy;
  std::size_t n_strongest = 10;
  double floor_dbm = -100.0;
  std::int64_t reauth_period_ms = 30000;
};

/// Single-owner protocol state machine. All mutations flow through one
/// caller processing events in timestamp order; the event log is append-only.
class AuthEngine {
 public:
  AuthEngine(DeviceRegistry registry, EngineConfig config)
      : registry_(std::move(registry)), config_(config) {}

  /// Provisions a trust-on-provisioning root: Authenticated from the start,
  /// attached to nothing, session self-peered.
  const NodeRecord& add_bootstrap(std::string node_id, DeviceIdentity identity,
                                  std::int64_t now_ms) {
    if (nodes_.count(node_id) > 0) {
      throw std::invalid_argument("node already present: " + node_id);
    }
    NodeRecord record;
    record.node_id = node_id;
    record.identity = std::move(identity);
    record.state = NodeState::Authenticated;
    Session session;
    session.session_id = "sess-" + node_id + "-" + std::to_string(now_ms);
    session.peer = node_id;
    session.started_at_ms = now_ms;
    session.last_verified_at_ms = now_ms;
    session.reauth_period_ms = config_.reauth_period_ms;
    record.session = std::move(session);
    auto [it, inserted] = nodes_.emplace(std::move(node_id), std::move(record));
    return it->second;
  }

  struct JoinOutcome {
    std::vector<VerifierVote> votes;
    std::optional<VerifierVote> winner;
    NodeRecord record;
  };

  /// Evaluates a broadcast join request against the supplied verifier scans.
  /// Every scan must come from a currently Authenticated node.
  JoinOutcome process_join(const JoinRequest& req,
                           std::span<const ScanSnapshot> verifier_scans, std::int64_t now_ms) {
    if (req.snapshot.device_id != req.requester_id) {
      throw std::invalid_argument("join snapshot device_id does not match requester");
    }
    if (nodes_.count(req.requester_id) > 0) {
      throw std::invalid_argument("node already present: " + req.requester_id);
    }
    JoinOutcome outcome;
    for (const auto& scan : verifier_scans) {
      const NodeRecord* verifier = find(scan.device_id);
      if (verifier == nullptr || verifier->state != NodeState::Authenticated) {
        throw VerifierNotAuthenticated(scan.device_id);
      }
      outcome.votes.push_back(
          evaluate_join(req, scan, config_.policy, config_.n_strongest, config_.floor_dbm));
    }
    outcome.winner = resolve_votes(outcome.votes);
    AdmitResult admitted =
        admit(req, outcome.votes, registry_, now_ms, config_.reauth_period_ms);
    outcome.record = admitted.record;
    nodes_[req.requester_id] = admitted.record;
    for (auto& e : admitted.events) events_.push_back(std::move(e));
    return outcome;
  }

  struct ReauthOutcome {
    ProximityDistance distance;
    bool terminated = false;
  };

  /// Re-verifies one attached node against a fresh pair of scans.
  ReauthOutcome process_reauth(const std::string& node_id, const ScanSnapshot& own_scan,
                               const ScanSnapshot& peer_scan, std::int64_t now_ms) {
    return process_reauth(
        node_id,
        fingerprint_distance(peer_scan, own_scan, config_.n_strongest, config_.floor_dbm),
        now_ms);
  }

  /// Re-verifies against an already-computed fresh distance (an unmeasurable
  /// pair passes infinity, which always terminates).
  ReauthOutcome process_reauth(const std::string& node_id, const ProximityDistance& fresh,
                               std::int64_t now_ms) {
    NodeRecord* node = find_mutable(node_id);
    if (node == nullptr) throw NotAuthenticated(node_id);
    ReauthOutcome outcome;
    outcome.distance = fresh;
    ReauthResult result = reauth_tick(*node, fresh, config_.policy, now_ms);
    outcome.terminated = result.record.state != NodeState::Authenticated;
    *node = std::move(result.record);
    for (auto& e : result.events) events_.push_back(std::move(e));
    return outcome;
  }

  /// Roots have no peer to measure against; their session just refreshes.
  void refresh_root(const std::string& node_id, std::int64_t now_ms) {
    NodeRecord* node = find_mutable(node_id);
    if (node == nullptr || node->state != NodeState::Authenticated || !node->session) {
      throw NotAuthenticated(node_id);
    }
    node->session->last_verified_at_ms = now_ms;
  }

  const NodeRecord* find(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, NodeRecord>& nodes() const { return nodes_; }
  const std::vector<AdminEvent>& events() const { return events_; }
  const EngineConfig& config() const { return config_; }
  const DeviceRegistry& registry() const { return registry_; }

 private:
  NodeRecord* find_mutable(const std::string& node_id) {
    auto it = nodes_.find(node_id);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  DeviceRegistry registry_;
  EngineConfig config_;
  std::map<std::string, NodeRecord> nodes_;
  std::vector<AdminEvent> events_;
};

inline nlohmann::json identity_to_json(const DeviceIdentity& identity) {
  return {{"kind", std::string(to_string(identity.kind))}, {"value", identity.value}};
}

inline DeviceIdentity identity_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw MalformedDocument("identity must be a JSON object");
  DeviceIdentity identity;
  identity.kind =
      identity_kind_from_string(detail::require_field(doc, "kind").get<std::string>());
  identity.value = detail::require_field(doc, "value").get<std::string>();
  if (identity.value.empty()) throw MalformedDocument("identity value must be non-empty");
  return identity;
}

/// Registry file: a JSON array of identities.
inline DeviceRegistry parse_registry(std::string_view raw) {
  const nlohmann::json doc = detail::parse_document(raw);
  if (!doc.is_array()) throw MalformedDocument("registry must be a JSON array");
  DeviceRegistry registry;
  for (const auto& entry : doc) registry.add(identity_from_json(entry));
  return registry;
}

inline nlohmann::json event_to_json(const AdminEvent& e) {
  return {{"at_ms", e.at_ms},
          {"kind", std::string(to_string(e.kind))},
          {"subject", e.subject},
          {"detail", e.detail}};
}

/// JSON-lines form of the event log, one event per line, in processing order.
inline std::string events_to_jsonl(std::span<const AdminEvent> events) {
  std::string out;
  for (const auto& e : events) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

}  // namespace proxauth
