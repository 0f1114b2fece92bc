#include "proxauth/proximity.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

using namespace proxauth;

namespace {

// Independent brute-force distance: plain indexed loop in extended
// precision. Kept deliberately separate from the library implementation.
double brute_force_distance(const std::vector<double>& a, const std::vector<double>& b) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
    acc += d * d;
  }
  return static_cast<double>(std::sqrt(acc));
}

AlignedPair aligned(const std::vector<double>& a, const std::vector<double>& b) {
  AlignedPair p;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char buf[18];
    std::snprintf(buf, sizeof(buf), "02:00:00:00:%02X:00", static_cast<unsigned>(i));
    p.bssids.push_back(buf);
  }
  p.rssi_a = a;
  p.rssi_b = b;
  return p;
}

AlignedPair random_pair(std::mt19937_64& rng, std::size_t max_dims = 20) {
  std::uniform_int_distribution<std::size_t> dims(1, max_dims);
  std::uniform_real_distribution<double> rssi(-100.0, -30.0);
  const std::size_t n = dims(rng);
  std::vector<double> a(n);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rssi(rng);
    b[i] = rssi(rng);
  }
  return aligned(a, b);
}

std::vector<ProximityDistance> distances(std::initializer_list<double> values) {
  std::vector<ProximityDistance> out;
  for (double v : values) out.push_back({v, 1});
  return out;
}

}  // namespace

TEST(EuclideanDistance, IdenticalVectorsGiveZero) {
  const AlignedPair p = aligned({-40, -55, -70}, {-40, -55, -70});
  EXPECT_DOUBLE_EQ(euclidean_distance(p).value, 0.0);
}

TEST(EuclideanDistance, HandEvaluatedExample) {
  // (-40+43)^2 + (-50+54)^2 + 0 = 9 + 16 = 25
  const AlignedPair p = aligned({-40, -50, -60}, {-43, -54, -60});
  const ProximityDistance d = euclidean_distance(p);
  EXPECT_DOUBLE_EQ(d.value, 5.0);
  EXPECT_EQ(d.n_dims, 3u);
}

TEST(EuclideanDistance, OneDimensionIsAbsoluteDifference) {
  EXPECT_DOUBLE_EQ(euclidean_distance(aligned({-50}, {-58})).value, 8.0);
}

TEST(EuclideanDistance, EmptyPairRejected) {
  EXPECT_THROW(euclidean_distance(AlignedPair{}), EmptyUniverse);
}

TEST(EuclideanDistance, MatchesBruteForceOracle) {
  std::mt19937_64 rng(0x0D15Eu);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    const AlignedPair p = random_pair(rng);
    const double expected = brute_force_distance(p.rssi_a, p.rssi_b);
    const double actual = euclidean_distance(p).value;
    const double scale = std::max(1.0, std::abs(expected));
    EXPECT_NEAR(actual, expected, 1e-9 * scale);
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_LT(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count(), 1000);
}

TEST(EuclideanDistance, ShiftInvariance) {
  std::mt19937_64 rng(0x5417u);
  std::uniform_real_distribution<double> shift(-30.0, 30.0);
  for (int i = 0; i < 500; ++i) {
    AlignedPair p = random_pair(rng);
    const double base = euclidean_distance(p).value;
    const double c = shift(rng);
    for (auto& v : p.rssi_a) v += c;
    for (auto& v : p.rssi_b) v += c;
    const double shifted = euclidean_distance(p).value;
    EXPECT_NEAR(shifted, base, 1e-9 * std::max(1.0, base));
  }
}

TEST(EuclideanDistance, DimensionMonotonicity) {
  std::mt19937_64 rng(0xD17Bu);
  std::uniform_real_distribution<double> rssi(-100.0, -30.0);
  for (int i = 0; i < 500; ++i) {
    AlignedPair p = random_pair(rng, 10);
    const double base = euclidean_distance(p).value;

    AlignedPair equal = p;
    equal.bssids.push_back("FE:00:00:00:00:01");
    const double shared = rssi(rng);
    equal.rssi_a.push_back(shared);
    equal.rssi_b.push_back(shared);
    EXPECT_DOUBLE_EQ(euclidean_distance(equal).value, base);

    AlignedPair unequal = p;
    unequal.bssids.push_back("FE:00:00:00:00:02");
    unequal.rssi_a.push_back(shared);
    unequal.rssi_b.push_back(shared - 3.0);
    EXPECT_GT(euclidean_distance(unequal).value, base);
  }
}

TEST(Decide, BelowThresholdAccepts) {
  EXPECT_EQ(decide({5.0, 3}, {10.0, 0.0}), ProximityDecision::Accept);
}

TEST(Decide, BoundaryIsStrict) {
  EXPECT_EQ(decide({10.0, 3}, {10.0, 0.0}), ProximityDecision::Reject);
}

TEST(Decide, ToleranceRelaxesMultiplicatively) {
  // threshold 10 at 20% tolerance -> effective 12
  EXPECT_EQ(decide({11.0, 3}, {10.0, 0.20}), ProximityDecision::Accept);
  const ThresholdPolicy policy{10.0, 0.20};
  EXPECT_DOUBLE_EQ(policy.effective_threshold(), 12.0);
}

TEST(Decide, MonotoneInTolerance) {
  std::mt19937_64 rng(0x701Eu);
  std::uniform_real_distribution<double> dist(0.0, 30.0);
  std::uniform_real_distribution<double> tol(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const ProximityDistance d{dist(rng), 4};
    const double threshold = dist(rng);
    double t1 = tol(rng);
    double t2 = tol(rng);
    if (t1 > t2) std::swap(t1, t2);
    if (decide(d, {threshold, t1}) == ProximityDecision::Accept) {
      EXPECT_EQ(decide(d, {threshold, t2}), ProximityDecision::Accept);
    }
  }
}

TEST(Calibrate, MaxOfNearWhenFarAbsent) {
  const auto near = distances({4.0, 5.0, 6.0});
  const CalibrationResult r = calibrate(near);
  EXPECT_DOUBLE_EQ(r.policy.threshold, 6.0);
  EXPECT_DOUBLE_EQ(r.policy.tolerance, 0.0);
  EXPECT_FALSE(r.overlap_warning);
}

TEST(Calibrate, MidpointWhenSeparated) {
  const auto near = distances({4.0});
  const auto far = distances({20.0});
  EXPECT_DOUBLE_EQ(calibrate(near, far).policy.threshold, 12.0);
}

TEST(Calibrate, OverlapKeepsMaxOfNearAndWarns) {
  const auto near = distances({4.0, 9.0});
  const auto far = distances({7.0, 20.0});
  const CalibrationResult r = calibrate(near, far);
  EXPECT_DOUBLE_EQ(r.policy.threshold, 9.0);
  EXPECT_TRUE(r.overlap_warning);
}

TEST(Calibrate, EmptyNearSetRejected) {
  EXPECT_THROW(calibrate({}), EmptyCalibrationSet);
}

TEST(Tally, TableOneRatesGiveReportedAccuracy) {
  // Rate-valued cells over N = 100 attempts.
  ConfusionMatrix m;
  m.true_success = 45.54;
  m.true_failure = 42.36;
  m.false_success = 4.46;
  m.false_failure = 7.64;
  EXPECT_NEAR(m.accuracy(), 0.8790, 0.0001);
}

TEST(Tally, PerfectClassifier) {
  std::vector<AttemptOutcome> outcomes(25, {ProximityDecision::Accept, true});
  EXPECT_DOUBLE_EQ(tally(outcomes).accuracy(), 1.0);
}

TEST(Tally, NineOfTen) {
  std::vector<AttemptOutcome> outcomes(9, {ProximityDecision::Accept, true});
  outcomes.push_back({ProximityDecision::Reject, true});
  const ConfusionMatrix m = tally(outcomes);
  EXPECT_DOUBLE_EQ(m.accuracy(), 0.9);
  EXPECT_DOUBLE_EQ(m.false_failure, 1.0);
}

TEST(Tally, CellsPartitionTheOutcomes) {
  std::mt19937_64 rng(0x7A11u);
  for (int i = 0; i < 500; ++i) {
    std::vector<AttemptOutcome> outcomes;
    const std::size_t n = rng() % 50;
    for (std::size_t k = 0; k < n; ++k) {
      outcomes.push_back({(rng() & 1) ? ProximityDecision::Accept : ProximityDecision::Reject,
                          (rng() & 1) != 0});
    }
    const ConfusionMatrix m = tally(outcomes);
    EXPECT_DOUBLE_EQ(m.total(), static_cast<double>(n));
    EXPECT_GE(m.accuracy(), 0.0);
    EXPECT_LE(m.accuracy(), 1.0);
  }
}

TEST(PolicyJson, RoundTripAndValidation) {
  const ThresholdPolicy p{7.25, 0.2};
  const ThresholdPolicy parsed = parse_policy(policy_to_json(p).dump());
  EXPECT_DOUBLE_EQ(parsed.threshold, 7.25);
  EXPECT_DOUBLE_EQ(parsed.tolerance, 0.2);
  EXPECT_THROW(parse_policy(R"({"tolerance": 0.1})"), MalformedDocument);
  EXPECT_THROW(parse_policy(R"({"threshold": -1})"), MalformedDocument);
  EXPECT_THROW(parse_policy("[]"), MalformedDocument);
}

TEST(MatrixJson, EmitsRoundedAccuracy) {
  ConfusionMatrix m;
  m.true_success = 45.54;
  m.true_failure = 42.36;
  m.false_success = 4.46;
  m.false_failure = 7.64;
  const nlohmann::json doc = matrix_to_json(m);
  EXPECT_DOUBLE_EQ(doc["accuracy"].get<double>(), 0.8790);
  EXPECT_DOUBLE_EQ(doc["ts"].get<double>(), 45.54);
}
