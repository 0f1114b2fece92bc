#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "proxauth/errors.hpp"
#include "proxauth/scan.hpp"

namespace proxauth {

/// Euclidean norm over aligned RSSI vectors, in dB space.
struct ProximityDistance {
  double value = 0.0;
  std::size_t n_dims = 0;
};

enum class ProximityDecision { Accept, Reject };

inline std::string_view to_string(ProximityDecision d) {
  return d == ProximityDecision::Accept ? "accept" : "reject";
}

/// Calibrated distance bound. Tolerance relaxes it multiplicatively: a 20%
/// tolerance turns threshold 10 into an effective bound of 12.
struct ThresholdPolicy {
  double threshold = 0.0;
  double tolerance = 0.0;

  double effective_threshold() const { return threshold * (1.0 + tolerance); }
};

/// Outcome cells. Real-valued rather than integral so published rate tables
/// (percent cells over N) can be fed through the same accuracy arithmetic.
struct ConfusionMatrix {
  double true_success = 0.0;   // accepted and actually within range
  double true_failure = 0.0;   // rejected and actually beyond range
  double false_success = 0.0;  // accepted but beyond range
  double false_failure = 0.0;  // rejected but within range

  double total() const {
    return true_success + true_failure + false_success + false_failure;
  }

  double accuracy() const {
    const double n = total();
    return n > 0.0 ? (true_success + true_failure) / n : 0.0;
  }
};

/// D = sqrt(sum_i (rssi_a[i] - rssi_b[i])^2).
inline ProximityDistance euclidean_distance(const AlignedPair& p) {
  if (p.bssids.empty()) throw EmptyUniverse();
  if (p.rssi_a.size() != p.bssids.size() || p.rssi_b.size() != p.bssids.size()) {
    throw std::invalid_argument("aligned pair has mismatched vector lengths");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.bssids.size(); ++i) {
    const double d = p.rssi_a[i] - p.rssi_b[i];
    sum += d * d;
  }
  return {std::sqrt(sum), p.bssids.size()};
}

/// Accept iff distance is strictly below the effective threshold.
inline ProximityDecision decide(const ProximityDistance& d, const ThresholdPolicy& policy) {
  return d.value < policy.effective_threshold() ? ProximityDecision::Accept
                                                : ProximityDecision::Reject;
}

struct CalibrationResult {
  ThresholdPolicy policy;
  /// Set when far distances were supplied but overlap the near distribution;
  /// the max-of-near threshold still applies.
  bool overlap_warning = false;
};

/// Threshold from co-located calibration distances: max of the near set, or
/// the midpoint between the two sets when a far set is supplied and cleanly
/// separated. Tolerance starts at 0.
inline CalibrationResult calibrate(std::span<const ProximityDistance> near,
                                   std::span<const ProximityDistance> far = {}) {
  if (near.empty()) throw EmptyCalibrationSet();
  double near_max = 0.0;
  for (const auto& d : near) {
    if (!std::isfinite(d.value)) throw std::invalid_argument("non-finite calibration distance");
    near_max = std::max(near_max, d.value);
  }
  CalibrationResult result;
  result.policy.threshold = near_max;
  if (!far.empty()) {
    double far_min = far.front().value;
    for (const auto& d : far) {
      if (!std::isfinite(d.value)) throw std::invalid_argument("non-finite calibration distance");
      far_min = std::min(far_min, d.value);
    }
    if (far_min > near_max) {
      result.policy.threshold = (near_max + far_min) / 2.0;
    } else {
      result.overlap_warning = true;
    }
  }
  return result;
}

struct AttemptOutcome {
  ProximityDecision decision;
  bool within_range;
};

/// Buckets each (decision, ground truth) into exactly one confusion cell.
inline ConfusionMatrix tally(std::span<const AttemptOutcome> outcomes) {
  ConfusionMatrix m;
  for (const auto& o : outcomes) {
    if (o.decision == ProximityDecision::Accept) {
      (o.within_range ? m.true_success : m.false_success) += 1.0;
    } else {
      (o.within_range ? m.false_failure : m.true_failure) += 1.0;
    }
  }
  return m;
}

inline nlohmann::json policy_to_json(const ThresholdPolicy& p) {
  return {{"threshold", p.threshold}, {"tolerance", p.tolerance}};
}

inline ThresholdPolicy policy_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw MalformedDocument("policy must be a JSON object");
  ThresholdPolicy p;
  const auto& threshold = detail::require_field(doc, "threshold");
  if (!threshold.is_number()) throw MalformedDocument("threshold must be a number");
  p.threshold = threshold.get<double>();
  if (auto it = doc.find("tolerance"); it != doc.end()) {
    if (!it->is_number()) throw MalformedDocument("tolerance must be a number");
    p.tolerance = it->get<double>();
  }
  if (!std::isfinite(p.threshold) || p.threshold < 0.0) {
    throw MalformedDocument("threshold must be finite and non-negative");
  }
  if (!std::isfinite(p.tolerance) || p.tolerance < 0.0) {
    throw MalformedDocument("tolerance must be finite and non-negative");
  }
  return p;
}

inline ThresholdPolicy parse_policy(std::string_view raw) {
  return policy_from_json(detail::parse_document(raw));
}

/// Emitted report form: cells plus accuracy rounded to 4 decimal places.
inline nlohmann::json matrix_to_json(const ConfusionMatrix& m) {
  return {{"ts", m.true_success},
          {"tf", m.true_failure},
          {"fs", m.false_success},
          {"ff", m.false_failure},
          {"accuracy", std::round(m.accuracy() * 10000.0) / 10000.0}};
}

}  // namespace proxauth
