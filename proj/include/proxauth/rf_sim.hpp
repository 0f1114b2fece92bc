#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxauth/errors.hpp"
#include "proxauth/rng.hpp"
#include "proxauth/scan.hpp"

namespace proxauth {

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2D&) const = default;
};

inline double distance_m(const Point2D& a, const Point2D& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct AccessPointSpec {
  std::string bssid;
  std::string ssid;
  Point2D position;
  double p0_dbm = -40.0;  // received power at the 1 m reference distance
};

/// Synthetic RF environment: AP layout plus a log-distance path-loss model
/// with Gaussian shadowing. Immutable once built; all randomness comes from
/// caller-supplied streams, so identical seeds replay identically.
struct RfEnvironment {
  std::vector<AccessPointSpec> aps;
  double path_loss_exponent = 2.5;
  double shadow_sigma_db = 2.0;
  double detection_floor_dbm = -90.0;
  std::uint64_t seed = 0;
};

inline void validate_environment(const RfEnvironment& env) {
  if (!(env.path_loss_exponent > 0.0)) {
    throw MalformedDocument("path_loss_exponent must be > 0");
  }
  if (!(env.shadow_sigma_db >= 0.0)) {
    throw MalformedDocument("shadow_sigma_db must be >= 0");
  }
  std::set<std::string> bssids;
  for (const auto& ap : env.aps) {
    if (!bssids.insert(ap.bssid).second) throw DuplicateBssid(ap.bssid);
    if (!(ap.p0_dbm >= -60.0 && ap.p0_dbm <= 0.0)) {
      throw MalformedDocument("p0_dbm out of range [-60, 0] for " + ap.bssid);
    }
    if (!std::isfinite(ap.position.x) || !std::isfinite(ap.position.y)) {
      throw MalformedDocument("non-finite AP position for " + ap.bssid);
    }
  }
}

/// Received power at point p from one AP:
///   rssi = p0 - 10 * exponent * log10(max(d, 1m) / 1m) + N(0, sigma^2)
/// Distances under the 1 m reference clamp to 1 m. The shadowing draw is
/// consumed even at sigma = 0 so stream positions do not depend on sigma.
inline double rssi_at(const AccessPointSpec& ap, const Point2D& p, const RfEnvironment& env,
                      RandomStream& rng) {
  const double d = std::max(distance_m(p, ap.position), 1.0);
  const double shadow = rng.next_gaussian() * env.shadow_sigma_db;
  return ap.p0_dbm - 10.0 * env.path_loss_exponent * std::log10(d) + shadow;
}

/// Scans the environment from point p: one observation per AP whose noisy
/// rssi is at or above the detection floor.
inline ScanSnapshot snapshot_at(const Point2D& p, const RfEnvironment& env,
                                std::string device_id, RandomStream& rng,
                                std::int64_t captured_at_ms = 0) {
  if (env.aps.empty()) throw NoAccessPoints();
  ScanSnapshot snap;
  snap.device_id = std::move(device_id);
  snap.captured_at_ms = captured_at_ms;
  for (const auto& ap : env.aps) {
    const double rssi = rssi_at(ap, p, env, rng);
    if (rssi >= env.detection_floor_dbm) {
      snap.observations.push_back({ap.ssid, ap.bssid, rssi});
    }
  }
  return snap;
}

namespace detail {

inline std::string bssid_from_u64(std::uint64_t bits) {
  // Locally administered unicast space: second-least-significant bit of the
  // first octet set, multicast bit clear.
  unsigned char octets[6];
  for (int i = 0; i < 6; ++i) {
    octets[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  }
  octets[0] = static_cast<unsigned char>((octets[0] & 0xFC) | 0x02);
  char buf[18];
  std::snprintf(buf, sizeof(buf), "%02X:%02X:%02X:%02X:%02X:%02X", octets[0], octets[1],
                octets[2], octets[3], octets[4], octets[5]);
  return std::string(buf);
}

}  // namespace detail

/// Uniformly scatters `num_aps` access points over a width x height area.
/// BSSIDs are drawn deterministically from the seed.
inline RfEnvironment random_layout(std::size_t num_aps, double width_m, double height_m,
                                   std::uint64_t seed) {
  if (num_aps == 0) throw InvalidArea("need at least one access point");
  if (!(width_m > 0.0) || !(height_m > 0.0)) throw InvalidArea("area dimensions must be positive");

  RfEnvironment env;
  env.seed = seed;
  RandomStream rng = derive_stream(seed, "layout");
  std::set<std::string> used;
  for (std::size_t i = 0; i < num_aps; ++i) {
    AccessPointSpec ap;
    do {
      ap.bssid = detail::bssid_from_u64(rng.next_u64());
    } while (!used.insert(ap.bssid).second);
    ap.ssid = "sim-net-" + std::to_string(i);
    ap.position = {rng.next_in(0.0, width_m), rng.next_in(0.0, height_m)};
    env.aps.push_back(std::move(ap));
  }
  return env;
}

inline nlohmann::json environment_to_json(const RfEnvironment& env) {
  nlohmann::json aps = nlohmann::json::array();
  for (const auto& ap : env.aps) {
    aps.push_back({{"bssid", ap.bssid},
                   {"ssid", ap.ssid},
                   {"x", ap.position.x},
                   {"y", ap.position.y},
                   {"p0_dbm", ap.p0_dbm}});
  }
  return {{"aps", std::move(aps)},
          {"path_loss_exponent", env.path_loss_exponent},
          {"shadow_sigma_db", env.shadow_sigma_db},
          {"detection_floor_dbm", env.detection_floor_dbm},
          {"seed", env.seed}};
}

inline RfEnvironment environment_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw MalformedDocument("environment must be a JSON object");
  RfEnvironment env;
  const auto& aps = detail::require_field(doc, "aps");
  if (!aps.is_array()) throw MalformedDocument("aps must be an array");
  for (const auto& entry : aps) {
    AccessPointSpec ap;
    ap.bssid = normalize_bssid(detail::require_field(entry, "bssid").get<std::string>());
    ap.ssid = detail::require_field(entry, "ssid").get<std::string>();
    ap.position.x = detail::require_field(entry, "x").get<double>();
    ap.position.y = detail::require_field(entry, "y").get<double>();
    if (auto it = entry.find("p0_dbm"); it != entry.end()) ap.p0_dbm = it->get<double>();
    env.aps.push_back(std::move(ap));
  }
  if (auto it = doc.find("path_loss_exponent"); it != doc.end()) {
    env.path_loss_exponent = it->get<double>();
  }
  if (auto it = doc.find("shadow_sigma_db"); it != doc.end()) {
    env.shadow_sigma_db = it->get<double>();
  }
  if (auto it = doc.find("detection_floor_dbm"); it != doc.end()) {
    env.detection_floor_dbm = it->get<double>();
  }
  if (auto it = doc.find("seed"); it != doc.end()) env.seed = it->get<std::uint64_t>();
  validate_environment(env);
  return env;
}

inline RfEnvironment parse_environment(std::string_view raw) {
  return environment_from_json(detail::parse_document(raw));
}

}  // namespace proxauth
