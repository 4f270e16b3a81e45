#pragma once

#include "mrtrack/behavior.hpp"
#include "mrtrack/planning.hpp"
#include "mrtrack/tracking.hpp"
#include "mrtrack/world.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrtrack {

/// Raised on config schema violations; the message names the offending
/// field path.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Piecewise-constant scripted velocity: from from_step on, the target moves
/// with this velocity (still subject to NCV process noise).
struct TargetScriptSegment {
  int from_step = 0;
  Vec2 velocity = Vec2::Zero();
};

struct OoiConfig {
  int id = 0;
  std::string label = "target";
  AgentState initial;  // px, py, vx, vy used; psi ignored
  std::vector<TargetScriptSegment> script;
};

struct AgentConfig {
  AgentState initial;
  AgentSpec spec;
};

struct SooConfig {
  std::string label = "tree";
  double gate_chi2 = 9.21;
  Mat2 birth_cov = Mat2::Identity();
  double estimate_radius = 0.0;  // 0: use each true SOO radius's mean
  double merge_distance = 1.5;
};

struct ScenarioConfig {
  std::string name;
  int duration_steps = 0;
  double dt = 0.2;
  int ownership_m = 1;
  double process_noise_q = 0.0;
  std::vector<AgentConfig> agents;
  std::vector<OoiConfig> oois;
  std::vector<OcclusionObject> occlusions;
  Mat4 p0 = Mat4::Identity();  // shared initial OOI covariance
  OwnershipPattern m0;
  OwnershipPattern goal;
  std::vector<OcclusionAwareQuery> analysis_intervals;
  int share_interval = -1;  // index into analysis_intervals, -1 when unused
  SooConfig soo;

  /// World at step 0 (SOO truths appended after OOIs, aligned with
  /// occlusions).
  WorldState initial_world() const;
  /// Initial OOI tracks: truth means with the shared covariance.
  std::vector<TrackEstimate> initial_tracks() const;
  /// Scripted velocity of OOI `index` at step k (initial velocity when no
  /// segment applies).
  Vec2 scripted_velocity(int index, int k) const;
  double soo_radius() const;
};

enum class Algorithm { SmaNbo, DecPomdp };

const char* algorithm_name(Algorithm a);
const char* occlusion_mode_name(OcclusionMode m);

struct RunConfig {
  Algorithm alg = Algorithm::SmaNbo;
  int horizon = 5;
  OcclusionMode occlusion_mode = OcclusionMode::Apriori;
  int trials = 1;
  std::uint64_t base_seed = 1;
  PsoParams pso;
  int ci_rounds = 1;
  double gate_chi2 = 9.21;
  double p_d = 1.0;
  double clutter_density = 0.0;
  double gamma = 1.0;
  double noise_scale = 1.0;
  int threads = 0;  // 0: hardware concurrency
};

ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::string& path);

nlohmann::json scenario_to_json(const ScenarioConfig& sc);
nlohmann::json run_config_to_json(const RunConfig& rc);
RunConfig parse_run_config(const nlohmann::json& j);

}  // namespace mrtrack
