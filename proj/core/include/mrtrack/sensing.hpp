#pragma once

#include "mrtrack/world.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace mrtrack {

/// Default range floor inside the noise model, keeps R nonsingular when a
/// target sits directly under the sensor.
inline constexpr double kRangeFloor = 0.1;

/// One semantic observation: noiseless label, noisy planar localization.
/// truth_id is carried for evaluation only and must never reach a tracker.
struct Observation {
  std::string label;
  ObjectClass cls = ObjectClass::Ooi;
  Vec2 z = Vec2::Zero();
  int source_agent = 0;
  int truth_id = 0;
};

/// Boolean agents-by-objects visibility table for one time step.
struct VisibilityMatrix {
  int agents = 0;
  int objects = 0;
  std::vector<std::uint8_t> cells;

  VisibilityMatrix() = default;
  VisibilityMatrix(int n_agents, int n_objects)
      : agents(n_agents), objects(n_objects),
        cells(static_cast<std::size_t>(n_agents) * n_objects, 0) {}

  bool at(int agent, int object) const {
    return cells[static_cast<std::size_t>(agent) * objects + object] != 0;
  }
  void set(int agent, int object, bool v) {
    cells[static_cast<std::size_t>(agent) * objects + object] = v ? 1 : 0;
  }
  /// True when any agent sees the object (team visibility V_k).
  bool team_visible(int object) const {
    for (int i = 0; i < agents; ++i)
      if (at(i, object)) return true;
    return false;
  }
  int count() const {
    int n = 0;
    for (auto c : cells) n += c;
    return n;
  }
};

/// Euclidean distance and yaw-relative bearing (wrapped to (-pi, pi]) from
/// an agent to a point.
std::pair<double, double> bearing_distance(const AgentState& agent,
                                           const Vec2& point);

/// Range-bearing noise covariance
///   R = alpha * G(rho) * diag(0.1 d, 0.1 pi d) * G(rho)^T
/// with d floored at d_min.
Mat2 measurement_covariance(double d, double rho, double alpha,
                            double d_min = kRangeFloor);

/// Visibility of every object to every agent: inside the FoV and outside
/// every occlusion disc. A SOO-labelled target is not blocked by its own
/// disc (SOO truths pair in order with world.occlusions).
VisibilityMatrix visible_set(const WorldState& world,
                             const std::vector<AgentSpec>& specs);

/// One observation per visible (object, agent) pair, position corrupted by
/// range-bearing noise. noise_scale scales the sampled noise vector (0 gives
/// exact positions). rngs holds one stream per agent.
std::vector<Observation> generate_observations(
    const WorldState& world, const std::vector<AgentSpec>& specs,
    std::vector<std::mt19937_64>& rngs, double noise_scale = 1.0);

}  // namespace mrtrack
