#pragma once

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace mrtrack {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

enum class ObjectClass { Ooi, Soo };

/// Planar kinematic state of one sensing agent.
struct AgentState {
  double px = 0.0;
  double py = 0.0;
  double psi = 0.0;  // yaw [rad], kept for logging and bearing reference
  double vx = 0.0;
  double vy = 0.0;

  Vec2 position() const { return {px, py}; }
  Vec2 velocity() const { return {vx, vy}; }
};

/// Static per-agent sensor and actuation limits.
struct AgentSpec {
  double v_max = 2.0;
  double fov_half_x = 2.0;  // half-extent of the nadir footprint [m]
  double fov_half_y = 2.0;
  double alpha = 1.0;  // sensing noise scalar
};

/// Ground-truth state of a tracked object (moving OOI or static SOO).
struct TargetTruth {
  int id = 0;
  std::string label;
  ObjectClass cls = ObjectClass::Ooi;
  double px = 0.0;
  double py = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  Vec2 position() const { return {px, py}; }
};

/// Circular occlusion footprint (e.g. tree shadow).
struct OcclusionObject {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 1.0;
  std::string label;

  Vec2 center() const { return {cx, cy}; }
};

/// Axis-aligned rectangle. Membership is closed on min edges, open on max
/// edges so partitioned coverage tests are unambiguous.
struct Region {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool contains(double x, double y) const {
    return x >= min_x && x < max_x && y >= min_y && y < max_y;
  }
  bool contains(const Vec2& p) const { return contains(p.x(), p.y()); }
  double area() const { return (max_x - min_x) * (max_y - min_y); }
};

/// Joint ground truth at one time step. SOO-labelled targets, when present,
/// appear after all OOIs and pair one-to-one, in order, with `occlusions`.
struct WorldState {
  int time_step = 0;
  std::vector<AgentState> agents;
  std::vector<TargetTruth> targets;
  std::vector<OcclusionObject> occlusions;
};

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

/// Closed-disc membership test.
bool point_in_disc(const Vec2& p, const OcclusionObject& w);

/// NCV transition matrix for state (px, py, vx, vy).
Mat4 ncv_transition(double dt);

/// White-noise-acceleration process covariance, intensity q per axis.
Mat4 ncv_process_noise(double q, double dt);

/// Apply a velocity command: clip to v_max, advance position, set yaw from
/// the commanded direction (unchanged when the command is zero).
/// Throws std::invalid_argument on non-finite action or dt <= 0.
AgentState step_agent(const AgentState& state, const Vec2& action, double dt,
                      double v_max);

/// Ground footprint of the nadir sensor: a rectangle centred on the agent,
/// independent of yaw.
Region fov_region(const AgentState& state, const AgentSpec& spec);

/// Propagate a target truth one step under the NCV model with process-noise
/// intensity q. SOO-labelled targets are static and returned unchanged.
TargetTruth step_target_truth(const TargetTruth& t, double dt, double q,
                              std::mt19937_64& rng);

}  // namespace mrtrack
