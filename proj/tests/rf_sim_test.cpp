#include "proxauth/rf_sim.hpp"

#include <gtest/gtest.h>

#include <random>

#include "proxauth/proximity.hpp"

using namespace proxauth;

namespace {

RfEnvironment single_ap_env(double p0, double exponent, double sigma = 0.0) {
  RfEnvironment env;
  env.aps.push_back({"02:00:00:00:00:01", "net", {0.0, 0.0}, p0});
  env.path_loss_exponent = exponent;
  env.shadow_sigma_db = sigma;
  return env;
}

double noiseless_distance(const RfEnvironment& env, const Point2D& a, const Point2D& b) {
  RandomStream ra = derive_stream(1, "a");
  RandomStream rb = derive_stream(1, "b");
  const ScanSnapshot sa = snapshot_at(a, env, "a", ra);
  const ScanSnapshot sb = snapshot_at(b, env, "b", rb);
  return euclidean_distance(align(sa, sb, -100.0)).value;
}

}  // namespace

TEST(RssiAt, ReferenceDistanceGivesP0) {
  const RfEnvironment env = single_ap_env(-40.0, 2.5);
  RandomStream rng = derive_stream(0, "t");
  EXPECT_DOUBLE_EQ(rssi_at(env.aps[0], {1.0, 0.0}, env, rng), -40.0);
}

TEST(RssiAt, LogDistanceDecay) {
  // p0 = -40, exponent 2, d = 10 m: -40 - 20 * log10(10) = -60
  const RfEnvironment env = single_ap_env(-40.0, 2.0);
  RandomStream rng = derive_stream(0, "t");
  EXPECT_NEAR(rssi_at(env.aps[0], {10.0, 0.0}, env, rng), -60.0, 1e-12);
}

TEST(RssiAt, SubReferenceDistancesClamp) {
  const RfEnvironment env = single_ap_env(-40.0, 2.5);
  RandomStream r1 = derive_stream(0, "t");
  RandomStream r2 = derive_stream(0, "t");
  EXPECT_DOUBLE_EQ(rssi_at(env.aps[0], {0.2, 0.0}, env, r1),
                   rssi_at(env.aps[0], {1.0, 0.0}, env, r2));
}

TEST(RssiAt, StrictlyDecreasingBeyondReference) {
  const RfEnvironment env = single_ap_env(-40.0, 2.5);
  double prev = 0.0;
  for (int i = 1; i <= 40; ++i) {
    RandomStream rng = derive_stream(0, "t");
    const double rssi = rssi_at(env.aps[0], {1.0 + i * 0.5, 0.0}, env, rng);
    if (i > 1) {
      EXPECT_LT(rssi, prev);
    }
    prev = rssi;
  }
}

TEST(SnapshotAt, AllApsVisibleInStrongRange) {
  RfEnvironment env = random_layout(15, 50.0, 30.0, 99);
  env.shadow_sigma_db = 0.0;
  RandomStream rng = derive_stream(3, "scan");
  const ScanSnapshot snap = snapshot_at({25.0, 15.0}, env, "dev", rng);
  EXPECT_EQ(snap.observations.size(), 15u);
  EXPECT_EQ(snap.device_id, "dev");
}

TEST(SnapshotAt, BelowFloorOmitted) {
  // -40 - 25 * log10(500) = -107.47, below the -90 floor.
  RfEnvironment env = single_ap_env(-40.0, 2.5);
  RandomStream rng = derive_stream(0, "t");
  const ScanSnapshot snap = snapshot_at({500.0, 0.0}, env, "dev", rng);
  EXPECT_TRUE(snap.observations.empty());
}

TEST(SnapshotAt, NoAccessPointsRejected) {
  RfEnvironment env;
  RandomStream rng = derive_stream(0, "t");
  EXPECT_THROW(snapshot_at({0.0, 0.0}, env, "dev", rng), NoAccessPoints);
}

TEST(RandomLayout, DeterministicForSeed) {
  const RfEnvironment a = random_layout(15, 50.0, 30.0, 7);
  const RfEnvironment b = random_layout(15, 50.0, 30.0, 7);
  ASSERT_EQ(a.aps.size(), b.aps.size());
  for (std::size_t i = 0; i < a.aps.size(); ++i) {
    EXPECT_EQ(a.aps[i].bssid, b.aps[i].bssid);
    EXPECT_EQ(a.aps[i].position, b.aps[i].position);
  }
}

TEST(RandomLayout, DistinctLocallyAdministeredBssids) {
  const RfEnvironment env = random_layout(15, 50.0, 30.0, 21);
  std::set<std::string> bssids;
  for (const auto& ap : env.aps) {
    bssids.insert(ap.bssid);
    const int first_octet = std::stoi(ap.bssid.substr(0, 2), nullptr, 16);
    EXPECT_EQ(first_octet & 0x03, 0x02) << ap.bssid;
    EXPECT_GE(ap.position.x, 0.0);
    EXPECT_LE(ap.position.x, 50.0);
  }
  EXPECT_EQ(bssids.size(), 15u);
  EXPECT_NO_THROW(validate_environment(env));
}

TEST(RandomLayout, RejectsInvalidArguments) {
  EXPECT_THROW(random_layout(0, 50.0, 30.0, 1), InvalidArea);
  EXPECT_THROW(random_layout(5, 0.0, 30.0, 1), InvalidArea);
  EXPECT_THROW(random_layout(5, 50.0, -1.0, 1), InvalidArea);
}

TEST(Determinism, IdenticalSeedAndCallSequence) {
  for (int trial = 0; trial < 500; ++trial) {
    const std::uint64_t seed = 1000 + trial;
    RfEnvironment env = random_layout(8, 40.0, 20.0, seed);
    RandomStream r1 = derive_stream(seed, "probe");
    RandomStream r2 = derive_stream(seed, "probe");
    const ScanSnapshot s1 = snapshot_at({10.0, 10.0}, env, "d", r1, 5);
    const ScanSnapshot s2 = snapshot_at({10.0, 10.0}, env, "d", r2, 5);
    EXPECT_EQ(s1, s2);
    EXPECT_EQ(serialize_snapshot(s1), serialize_snapshot(s2));
  }
}

TEST(Determinism, DistinctLabelsDecorrelate) {
  RfEnvironment env = random_layout(8, 40.0, 20.0, 5);
  RandomStream r1 = derive_stream(5, "probe/1");
  RandomStream r2 = derive_stream(5, "probe/2");
  const ScanSnapshot s1 = snapshot_at({10.0, 10.0}, env, "d", r1);
  const ScanSnapshot s2 = snapshot_at({10.0, 10.0}, env, "d", r2);
  EXPECT_NE(s1, s2);
}

TEST(CoLocation, SamePointNoNoiseGivesZeroDistance) {
  for (int trial = 0; trial < 20; ++trial) {
    RfEnvironment env = random_layout(10, 50.0, 30.0, 400 + trial);
    env.shadow_sigma_db = 0.0;
    const Point2D p{12.0 + trial, 9.0};
    EXPECT_DOUBLE_EQ(noiseless_distance(env, p, p), 0.0);
  }
}

TEST(Separation, TwoMetersBeatsTwentyMeters) {
  std::mt19937_64 rng(0x5EB4u);
  std::uniform_real_distribution<double> px(2.0, 25.0);
  std::uniform_real_distribution<double> py(2.0, 28.0);
  for (int trial = 0; trial < 500; ++trial) {
    RfEnvironment env = random_layout(12, 50.0, 30.0, 7000 + trial);
    env.shadow_sigma_db = 0.0;
    const Point2D base{px(rng), py(rng)};
    const Point2D near{base.x + 2.0, base.y};
    const Point2D far{base.x + 20.0, base.y};
    EXPECT_LT(noiseless_distance(env, base, near), noiseless_distance(env, base, far));
  }
}

TEST(EnvironmentJson, RoundTrip) {
  RfEnvironment env = random_layout(6, 30.0, 20.0, 11);
  env.shadow_sigma_db = 1.5;
  env.detection_floor_dbm = -85.0;
  const RfEnvironment parsed = parse_environment(environment_to_json(env).dump());
  ASSERT_EQ(parsed.aps.size(), env.aps.size());
  for (std::size_t i = 0; i < env.aps.size(); ++i) {
    EXPECT_EQ(parsed.aps[i].bssid, env.aps[i].bssid);
    EXPECT_EQ(parsed.aps[i].position, env.aps[i].position);
    EXPECT_DOUBLE_EQ(parsed.aps[i].p0_dbm, env.aps[i].p0_dbm);
  }
  EXPECT_DOUBLE_EQ(parsed.shadow_sigma_db, 1.5);
  EXPECT_DOUBLE_EQ(parsed.detection_floor_dbm, -85.0);
}

TEST(EnvironmentJson, ValidationErrors) {
  EXPECT_THROW(parse_environment(R"({"aps": "nope"})"), MalformedDocument);
  // duplicate bssid
  EXPECT_THROW(parse_environment(R"({"aps": [
    {"bssid": "02:00:00:00:00:01", "ssid": "a", "x": 0, "y": 0},
    {"bssid": "02:00:00:00:00:01", "ssid": "b", "x": 1, "y": 1}
  ]})"),
               DuplicateBssid);
  // p0 out of range
  EXPECT_THROW(parse_environment(R"({"aps": [
    {"bssid": "02:00:00:00:00:01", "ssid": "a", "x": 0, "y": 0, "p0_dbm": 5}
  ]})"),
               MalformedDocument);
  // non-positive exponent
  EXPECT_THROW(parse_environment(R"({"aps": [
    {"bssid": "02:00:00:00:00:01", "ssid": "a", "x": 0, "y": 0}
  ], "path_loss_exponent": 0})"),
               MalformedDocument);
}
