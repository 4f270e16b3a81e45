#include "mrtrack/sensing.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace mrtrack {

std::pair<double, double> bearing_distance(const AgentState& agent,
                                           const Vec2& point) {
  const double dx = point.x() - agent.px;
  const double dy = point.y() - agent.py;
  const double d = std::hypot(dx, dy);
  const double rho = wrap_angle(std::atan2(dy, dx) - agent.psi);
  return {d, rho};
}

Mat2 measurement_covariance(double d, double rho, double alpha, double d_min) {
  if (alpha <= 0.0) throw std::invalid_argument("measurement_covariance: alpha must be positive");
  const double dd = std::max(d, d_min);
  const double c = std::cos(rho);
  const double s = std::sin(rho);
  Mat2 G;
  G << c, -s, s, c;
  Mat2 D = Mat2::Zero();
  D(0, 0) = 0.1 * dd;
  D(1, 1) = 0.1 * M_PI * dd;
  Mat2 R = alpha * G * D * G.transpose();
  return 0.5 * (R + R.transpose());
}

VisibilityMatrix visible_set(const WorldState& world,
                             const std::vector<AgentSpec>& specs) {
  const int n_agents = static_cast<int>(world.agents.size());
  const int n_objects = static_cast<int>(world.targets.size());
  VisibilityMatrix vis(n_agents, n_objects);

  // SOO truths pair in order with world.occlusions; a SOO is not occluded by
  // its own disc, otherwise it could never be detected.
  std::vector<int> own_disc(n_objects, -1);
  int soo_seen = 0;
  for (int t = 0; t < n_objects; ++t) {
    if (world.targets[t].cls == ObjectClass::Soo) {
      if (soo_seen < static_cast<int>(world.occlusions.size()))
        own_disc[t] = soo_seen;
      ++soo_seen;
    }
  }

  for (int i = 0; i < n_agents; ++i) {
    const Region fov = fov_region(world.agents[i], specs[i]);
    for (int t = 0; t < n_objects; ++t) {
      const Vec2 p = world.targets[t].position();
      if (!fov.contains(p)) continue;
      bool occluded = false;
      for (int w = 0; w < static_cast<int>(world.occlusions.size()); ++w) {
        if (w == own_disc[t]) continue;
        if (point_in_disc(p, world.occlusions[w])) {
          occluded = true;
          break;
        }
      }
      vis.set(i, t, !occluded);
    }
  }
  return vis;
}

std::vector<Observation> generate_observations(
    const WorldState& world, const std::vector<AgentSpec>& specs,
    std::vector<std::mt19937_64>& rngs, double noise_scale) {
  const VisibilityMatrix vis = visible_set(world, specs);
  std::vector<Observation> out;
  std::normal_distribution<double> unit;

  for (int i = 0; i < vis.agents; ++i) {
    for (int t = 0; t < vis.objects; ++t) {
      if (!vis.at(i, t)) continue;
      const TargetTruth& truth = world.targets[t];
      Vec2 z = truth.position();
      if (noise_scale != 0.0) {
        const auto [d, rho] = bearing_distance(world.agents[i], z);
        const Mat2 R = measurement_covariance(d, rho, specs[i].alpha);
        const Mat2 L = R.llt().matrixL();
        Vec2 n(unit(rngs[i]), unit(rngs[i]));
        z += noise_scale * (L * n);
      }
      out.push_back(Observation{truth.label, truth.cls, z, i, truth.id});
    }
  }
  return out;
}

}  // namespace mrtrack
