// proxauth: proximity authentication over Wi-Fi beacon fingerprints.
//
// Subcommands:
//   verify      compare two snapshot files against a threshold policy
//   calibrate   derive a threshold policy from scan-set directories
//   simulate    replay a multi-node scenario file
//   experiment  run the two-device accuracy experiment on an environment
//
// Exit codes: 0 success (verify: accept), 1 verify reject, 2 any error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "proxauth/proxauth.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw proxauth::Error("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw proxauth::Error("cannot write file: " + path.string());
  out << content;
}

void emit(const nlohmann::json& doc, const std::string& out_path) {
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
  }
}

struct PipelineOptions {
  std::size_t n_strongest = 10;
  double floor_dbm = -100.0;
};

int run_verify(const std::string& file_a, const std::string& file_b,
               const std::string& policy_file, const PipelineOptions& pipeline,
               std::optional<double> tolerance, const std::string& out_path) {
  const proxauth::ScanSnapshot a = proxauth::parse_snapshot(read_file(file_a));
  const proxauth::ScanSnapshot b = proxauth::parse_snapshot(read_file(file_b));
  proxauth::ThresholdPolicy policy = proxauth::parse_policy(read_file(policy_file));
  if (tolerance) policy.tolerance = *tolerance;

  const proxauth::AlignedPair pair =
      proxauth::align(proxauth::top_n(a, pipeline.n_strongest),
                      proxauth::top_n(b, pipeline.n_strongest), pipeline.floor_dbm);
  const proxauth::ProximityDistance distance = proxauth::euclidean_distance(pair);
  const proxauth::ProximityDecision decision = proxauth::decide(distance, policy);

  emit({{"distance", distance.value},
        {"effective_threshold", policy.effective_threshold()},
        {"decision", std::string(proxauth::to_string(decision))}},
       out_path);
  return decision == proxauth::ProximityDecision::Accept ? 0 : 1;
}

// Every *.json file in the directory is a scan-set; each unordered pair of
// snapshots inside one file contributes one pipeline distance.
std::vector<proxauth::ProximityDistance> distances_from_dir(const fs::path& dir,
                                                            const PipelineOptions& pipeline) {
  if (!fs::is_directory(dir)) throw proxauth::Error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<proxauth::ProximityDistance> distances;
  for (const auto& file : files) {
    const std::vector<proxauth::ScanSnapshot> snaps =
        proxauth::parse_scan_set(read_file(file));
    for (std::size_t i = 0; i < snaps.size(); ++i) {
      for (std::size_t j = i + 1; j < snaps.size(); ++j) {
        const proxauth::AlignedPair pair =
            proxauth::align(proxauth::top_n(snaps[i], pipeline.n_strongest),
                            proxauth::top_n(snaps[j], pipeline.n_strongest),
                            pipeline.floor_dbm);
        distances.push_back(proxauth::euclidean_distance(pair));
      }
    }
  }
  return distances;
}

int run_calibrate(const std::string& near_dir, const std::string& far_dir,
                  const PipelineOptions& pipeline, double tolerance,
                  const std::string& out_path) {
  const std::vector<proxauth::ProximityDistance> near =
      distances_from_dir(near_dir, pipeline);
  std::vector<proxauth::ProximityDistance> far;
  if (!far_dir.empty()) far = distances_from_dir(far_dir, pipeline);

  proxauth::CalibrationResult result = proxauth::calibrate(near, far);
  result.policy.tolerance = tolerance;
  if (result.overlap_warning) {
    std::cerr << "warning: near and far calibration distances overlap; "
                 "using max-of-near threshold\n";
  }
  emit(proxauth::policy_to_json(result.policy), out_path);
  return 0;
}

int run_simulate(const std::string& scenario_file, std::optional<std::uint64_t> seed,
                 const std::string& out_path, const std::string& events_path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(scenario_file));
  } catch (const nlohmann::json::parse_error& e) {
    throw proxauth::MalformedDocument(e.what());
  }
  // An environment may be referenced by file instead of inlined.
  if (!doc.contains("environment") && doc.contains("environment_file")) {
    const fs::path env_path =
        fs::path(scenario_file).parent_path() / doc["environment_file"].get<std::string>();
    doc["environment"] = nlohmann::json::parse(read_file(env_path));
    doc.erase("environment_file");
  }
  proxauth::Scenario scenario = proxauth::scenario_from_json(doc);
  if (seed) scenario.seed = *seed;

  const proxauth::SimReport report = proxauth::run_scenario(scenario);
  if (out_path.empty()) {
    std::cout << proxauth::serialize_report(report);
  } else {
    write_file(out_path, proxauth::serialize_report(report));
  }
  if (!events_path.empty()) {
    write_file(events_path, proxauth::events_to_jsonl(report.events));
  }
  return 0;
}

int run_experiment(const std::string& env_file, const std::string& policy_file,
                   std::uint64_t seed, const proxauth::PairExperimentConfig& config,
                   std::optional<double> tolerance, const std::string& out_path) {
  proxauth::RfEnvironment env;
  if (env_file.empty()) {
    env = proxauth::random_layout(15, 50.0, 30.0, seed);
  } else {
    env = proxauth::parse_environment(read_file(env_file));
  }

  proxauth::ThresholdPolicy policy;
  if (policy_file.empty()) {
    proxauth::EnvCalibrationConfig cal;
    cal.n_strongest = config.n_strongest;
    cal.floor_dbm = config.floor_dbm;
    policy = proxauth::calibrate_from_environment(env, cal, seed).policy;
  } else {
    policy = proxauth::parse_policy(read_file(policy_file));
  }
  if (tolerance) policy.tolerance = *tolerance;

  const proxauth::ConfusionMatrix matrix =
      proxauth::run_pair_experiment(env, config, policy, seed);
  emit({{"schema_version", 1},
        {"seed", seed},
        {"policy", proxauth::policy_to_json(policy)},
        {"matrix", proxauth::matrix_to_json(matrix)},
        {"n", matrix.total()}},
       out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximity authentication for ad hoc IoT networks"};
  app.require_subcommand(1);

  PipelineOptions pipeline;
  std::string out_path;
  std::optional<double> tolerance;

  auto add_pipeline_options = [&](CLI::App* cmd) {
    cmd->add_option("--n-strongest", pipeline.n_strongest,
                    "How many strongest observations to keep per snapshot")
        ->default_val(10);
    cmd->add_option("--floor-dbm", pipeline.floor_dbm,
                    "RSSI substituted for BSSIDs missing from one side")
        ->default_val(-100.0);
  };

  // verify
  auto* verify = app.add_subcommand("verify", "Decide proximity between two snapshots");
  std::string snapshot_a;
  std::string snapshot_b;
  std::string policy_file;
  verify->add_option("snapshot_a", snapshot_a, "First snapshot file")->required();
  verify->add_option("snapshot_b", snapshot_b, "Second snapshot file")->required();
  verify->add_option("--policy", policy_file, "Threshold policy file")->required();
  verify->add_option("--tolerance", tolerance, "Override the policy tolerance");
  verify->add_option("--out", out_path, "Also write the verdict JSON to this file");
  add_pipeline_options(verify);

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Derive a threshold policy from scan sets");
  std::string near_dir;
  std::string far_dir;
  double calibrate_tolerance = 0.0;
  calibrate->add_option("--near", near_dir, "Directory of co-located scan-set files")
      ->required();
  calibrate->add_option("--far", far_dir, "Optional directory of separated scan-set files");
  calibrate->add_option("--tolerance", calibrate_tolerance, "Tolerance to store in the policy")
      ->default_val(0.0);
  calibrate->add_option("--out", out_path, "Policy output file (stdout when omitted)");
  add_pipeline_options(calibrate);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Replay a multi-node scenario");
  std::string scenario_file;
  std::string events_path;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("scenario", scenario_file, "Scenario file")->required();
  simulate->add_option("--seed", sim_seed, "Override the scenario seed");
  simulate->add_option("--out", out_path, "Report output file (stdout when omitted)");
  simulate->add_option("--events-out", events_path, "Also write the event log as JSON lines");

  // experiment
  auto* experiment =
      app.add_subcommand("experiment", "Two-device accuracy experiment over an environment");
  std::string env_file;
  std::string exp_policy_file;
  std::uint64_t exp_seed = 0;
  proxauth::PairExperimentConfig exp_config;
  experiment->add_option("--env", env_file,
                         "Environment file (default: 15 random APs over 50x30 m)");
  experiment->add_option("--policy", exp_policy_file,
                         "Policy file (default: calibrate from the environment)");
  experiment->add_option("--seed", exp_seed, "Experiment seed")->default_val(0);
  experiment->add_option("--locations", exp_config.n_locations)->default_val(10);
  experiment->add_option("--near-attempts", exp_config.near_attempts)->default_val(5);
  experiment->add_option("--far-attempts", exp_config.far_attempts)->default_val(5);
  experiment->add_option("--near-max-m", exp_config.near_max_m)->default_val(2.0);
  experiment->add_option("--far-min-m", exp_config.far_min_m)->default_val(4.0);
  experiment->add_option("--far-max-m", exp_config.far_max_m)->default_val(10.0);
  experiment->add_option("--tolerance", tolerance, "Override the policy tolerance");
  experiment->add_option("--out", out_path, "Report output file (stdout when omitted)");
  experiment->add_option("--n-strongest", exp_config.n_strongest)->default_val(10);
  experiment->add_option("--floor-dbm", exp_config.floor_dbm)->default_val(-100.0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (verify->parsed()) {
      return run_verify(snapshot_a, snapshot_b, policy_file, pipeline, tolerance, out_path);
    }
    if (calibrate->parsed()) {
      return run_calibrate(near_dir, far_dir, pipeline, calibrate_tolerance, out_path);
    }
    if (simulate->parsed()) {
      return run_simulate(scenario_file, sim_seed, out_path, events_path);
    }
    if (experiment->parsed()) {
      return run_experiment(env_file, exp_policy_file, exp_seed, exp_config, tolerance,
                            out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
