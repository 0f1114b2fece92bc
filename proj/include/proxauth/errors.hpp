#pragma once

#include <stdexcept>
#include <string>

namespace proxauth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class MalformedDocument : public Error {
 public:
  explicit MalformedDocument(const std::string& detail)
      : Error("malformed document: " + detail) {}
};

class InvalidBssid : public Error {
 public:
  explicit InvalidBssid(const std::string& raw)
      : Error("invalid bssid: '" + raw + "' (expected 6 colon-separated hex octets)") {}
};

class DuplicateBssid : public Error {
 public:
  explicit DuplicateBssid(const std::string& bssid)
      : Error("duplicate bssid in snapshot: " + bssid) {}
};

class NonFiniteRssi : public Error {
 public:
  explicit NonFiniteRssi(const std::string& context)
      : Error("non-finite rssi: " + context) {}
};

class EmptyUniverse : public Error {
 public:
  EmptyUniverse() : Error("no bssids to align: both snapshots are empty") {}
};

class EmptyCalibrationSet : public Error {
 public:
  EmptyCalibrationSet() : Error("calibration requires at least one near-pair distance") {}
};

class NoAccessPoints : public Error {
 public:
  NoAccessPoints() : Error("environment contains no access points") {}
};

class InvalidArea : public Error {
 public:
  explicit InvalidArea(const std::string& detail) : Error("invalid layout: " + detail) {}
};

class VerifierNotAuthenticated : public Error {
 public:
  explicit VerifierNotAuthenticated(const std::string& verifier_id)
      : Error("verifier is not authenticated: " + verifier_id) {}
};

class NotAuthenticated : public Error {
 public:
  explicit NotAuthenticated(const std::string& node_id)
      : Error("node is not authenticated: " + node_id) {}
};

class InvalidScenario : public Error {
 public:
  explicit InvalidScenario(const std::string& detail)
      : Error("invalid scenario: " + detail) {}
};

}  // namespace proxauth
