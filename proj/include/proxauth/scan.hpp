#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "proxauth/errors.hpp"

namespace proxauth {

/// One beacon observation: the (SSID, BSSID, RSSI) triple a scan yields per
/// visible access point.
struct ApObservation {
  std::string ssid;
  std::string bssid;      // 6 colon-separated hex octets, stored uppercase
  double rssi_dbm = 0.0;  // finite, typically -100..0

  bool operator==(const ApObservation&) const = default;
};

/// A device's full Wi-Fi fingerprint at one instant.
struct ScanSnapshot {
  std::string device_id;
  std::int64_t captured_at_ms = 0;
  std::vector<ApObservation> observations;  // no two share a bssid

  bool operator==(const ScanSnapshot&) const = default;
};

/// Two RSSI vectors indexed by a shared, ascending BSSID universe.
struct AlignedPair {
  std::vector<std::string> bssids;  // strictly ascending
  std::vector<double> rssi_a;
  std::vector<double> rssi_b;
  std::size_t floor_substitutions = 0;
};

enum class IdentityKind { Imei, Uuid, Mac };

/// A device's registered unique identifier; (kind, value) is the equality key.
struct DeviceIdentity {
  IdentityKind kind = IdentityKind::Uuid;
  std::string value;

  bool operator==(const DeviceIdentity&) const = default;
  auto operator<=>(const DeviceIdentity&) const = default;
};

inline std::string_view to_string(IdentityKind kind) {
  switch (kind) {
    case IdentityKind::Imei: return "IMEI";
    case IdentityKind::Uuid: return "UUID";
    case IdentityKind::Mac: return "MAC";
  }
  return "UUID";
}

inline IdentityKind identity_kind_from_string(std::string_view s) {
  if (s == "IMEI") return IdentityKind::Imei;
  if (s == "UUID") return IdentityKind::Uuid;
  if (s == "MAC") return IdentityKind::Mac;
  throw MalformedDocument("unknown identity kind: '" + std::string(s) + "'");
}

/// Validates and canonicalizes a BSSID: exactly 6 colon-separated hex octets,
/// case-insensitive on input, uppercase on output.
inline std::string normalize_bssid(std::string_view raw) {
  if (raw.size() != 17) throw InvalidBssid(std::string(raw));
  std::string out(raw);
  for (std::size_t i = 0; i < 17; ++i) {
    if (i % 3 == 2) {
      if (out[i] != ':') throw InvalidBssid(std::string(raw));
    } else {
      if (!std::isxdigit(static_cast<unsigned char>(out[i]))) {
        throw InvalidBssid(std::string(raw));
      }
      out[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[i])));
    }
  }
  return out;
}

namespace detail {

// rssi arrives as a JSON number, or as a numeric string so that non-finite
// markers ("NaN", "Infinity") survive the trip through JSON and can be
// rejected with the precise error.
inline double rssi_from_json(const nlohmann::json& v) {
  double rssi = 0.0;
  if (v.is_number()) {
    rssi = v.get<double>();
  } else if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    rssi = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
      throw MalformedDocument("rssi_dbm is not numeric: '" + s + "'");
    }
  } else {
    throw MalformedDocument("rssi_dbm must be a number");
  }
  if (!std::isfinite(rssi)) throw NonFiniteRssi("rssi_dbm = " + v.dump());
  return rssi;
}

inline const nlohmann::json& require_field(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw MalformedDocument(std::string("missing field '") + key + "'");
  return *it;
}

inline ScanSnapshot snapshot_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw MalformedDocument("snapshot must be a JSON object");
  ScanSnapshot snap;
  const auto& id = require_field(doc, "device_id");
  if (!id.is_string()) throw MalformedDocument("device_id must be a string");
  snap.device_id = id.get<std::string>();
  const auto& at = require_field(doc, "captured_at_ms");
  if (!at.is_number_integer()) throw MalformedDocument("captured_at_ms must be an integer");
  snap.captured_at_ms = at.get<std::int64_t>();
  const auto& obs = require_field(doc, "observations");
  if (!obs.is_array()) throw MalformedDocument("observations must be an array");

  std::map<std::string, bool> seen;
  for (const auto& o : obs) {
    if (!o.is_object()) throw MalformedDocument("observation must be an object");
    const auto& ssid = require_field(o, "ssid");
    if (!ssid.is_string()) throw MalformedDocument("ssid must be a string");
    const auto& bssid = require_field(o, "bssid");
    if (!bssid.is_string()) throw MalformedDocument("bssid must be a string");
    ApObservation ap;
    ap.ssid = ssid.get<std::string>();
    ap.bssid = normalize_bssid(bssid.get<std::string>());
    ap.rssi_dbm = rssi_from_json(require_field(o, "rssi_dbm"));
    if (!seen.emplace(ap.bssid, true).second) throw DuplicateBssid(ap.bssid);
    snap.observations.push_back(std::move(ap));
  }
  return snap;
}

inline nlohmann::json snapshot_to_json(const ScanSnapshot& snap) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : snap.observations) {
    obs.push_back({{"ssid", o.ssid}, {"bssid", o.bssid}, {"rssi_dbm", o.rssi_dbm}});
  }
  return {{"device_id", snap.device_id},
          {"captured_at_ms", snap.captured_at_ms},
          {"observations", std::move(obs)}};
}

inline nlohmann::json parse_document(std::string_view raw) {
  try {
    return nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedDocument(e.what());
  }
}

}  // namespace detail

/// Parses one snapshot document. BSSIDs are uppercased; duplicate BSSIDs and
/// non-finite RSSIs are rejected.
inline ScanSnapshot parse_snapshot(std::string_view raw) {
  return detail::snapshot_from_json(detail::parse_document(raw));
}

/// Parses a scan-set file: a JSON array of snapshots.
inline std::vector<ScanSnapshot> parse_scan_set(std::string_view raw) {
  const nlohmann::json doc = detail::parse_document(raw);
  if (!doc.is_array()) throw MalformedDocument("scan set must be a JSON array");
  std::vector<ScanSnapshot> out;
  out.reserve(doc.size());
  for (const auto& entry : doc) out.push_back(detail::snapshot_from_json(entry));
  return out;
}

inline std::string serialize_snapshot(const ScanSnapshot& snap) {
  return detail::snapshot_to_json(snap).dump(2);
}

/// Keeps the min(n, |observations|) strongest observations. Ties at the cut
/// are broken by ascending BSSID, so the result is a pure function of the
/// input. Output is ordered strongest-first.
inline ScanSnapshot top_n(const ScanSnapshot& s, std::size_t n) {
  if (n == 0) throw std::invalid_argument("top_n requires n >= 1");
  ScanSnapshot out = s;
  std::sort(out.observations.begin(), out.observations.end(),
            [](const ApObservation& a, const ApObservation& b) {
              if (a.rssi_dbm != b.rssi_dbm) return a.rssi_dbm > b.rssi_dbm;
              return a.bssid < b.bssid;
            });
  if (out.observations.size() > n) out.observations.resize(n);
  return out;
}

/// Pairs two snapshots over the union of their BSSID sets, sorted ascending.
/// A BSSID missing from one side takes `floor_dbm` on that side;
/// floor_substitutions counts those injections.
inline AlignedPair align(const ScanSnapshot& a, const ScanSnapshot& b, double floor_dbm) {
  std::map<std::string, double> ra;
  std::map<std::string, double> rb;
  for (const auto& o : a.observations) {
    if (!ra.emplace(o.bssid, o.rssi_dbm).second) throw DuplicateBssid(o.bssid);
  }
  for (const auto& o : b.observations) {
    if (!rb.emplace(o.bssid, o.rssi_dbm).second) throw DuplicateBssid(o.bssid);
  }
  if (ra.empty() && rb.empty()) throw EmptyUniverse();

  AlignedPair pair;
  auto ia = ra.begin();
  auto ib = rb.begin();
  while (ia != ra.end() || ib != rb.end()) {
    std::string bssid;
    if (ib == rb.end() || (ia != ra.end() && ia->first < ib->first)) {
      bssid = ia->first;
    } else if (ia == ra.end() || ib->first < ia->first) {
      bssid = ib->first;
    } else {
      bssid = ia->first;
    }
    if (ia != ra.end() && ia->first == bssid) {
      pair.rssi_a.push_back(ia->second);
      ++ia;
    } else {
      pair.rssi_a.push_back(floor_dbm);
      ++pair.floor_substitutions;
    }
    if (ib != rb.end() && ib->first == bssid) {
      pair.rssi_b.push_back(ib->second);
      ++ib;
    } else {
      pair.rssi_b.push_back(floor_dbm);
      ++pair.floor_substitutions;
    }
    pair.bssids.push_back(std::move(bssid));
  }
  return pair;
}

}  // namespace proxauth
