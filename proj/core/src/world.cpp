#include "mrtrack/world.hpp"

#include <cmath>
#include <stdexcept>

namespace mrtrack {

double wrap_angle(double a) {
  double r = std::fmod(a + M_PI, 2.0 * M_PI);
  if (r <= 0.0) r += 2.0 * M_PI;
  return r - M_PI;
}

bool point_in_disc(const Vec2& p, const OcclusionObject& w) {
  const double dx = p.x() - w.cx;
  const double dy = p.y() - w.cy;
  return dx * dx + dy * dy <= w.radius * w.radius;
}

Mat4 ncv_transition(double dt) {
  Mat4 F = Mat4::Identity();
  F(0, 2) = dt;
  F(1, 3) = dt;
  return F;
}

Mat4 ncv_process_noise(double q, double dt) {
  const double qa = q * dt * dt * dt / 3.0;
  const double qb = q * dt * dt / 2.0;
  const double qc = q * dt;
  Mat4 Q = Mat4::Zero();
  Q(0, 0) = qa;
  Q(1, 1) = qa;
  Q(2, 2) = qc;
  Q(3, 3) = qc;
  Q(0, 2) = Q(2, 0) = qb;
  Q(1, 3) = Q(3, 1) = qb;
  return Q;
}

AgentState step_agent(const AgentState& state, const Vec2& action, double dt,
                      double v_max) {
  if (!action.allFinite()) throw std::invalid_argument("step_agent: non-finite action");
  if (dt <= 0.0) throw std::invalid_argument("step_agent: dt must be positive");

  Vec2 v = action;
  const double n = v.norm();
  if (n > v_max) {
    v *= v_max / n;
    // one more pass kills any residual 1-ulp overshoot from the scaling
    const double n2 = v.norm();
    if (n2 > v_max) v *= v_max / n2;
  }

  AgentState out = state;
  out.vx = v.x();
  out.vy = v.y();
  out.px += v.x() * dt;
  out.py += v.y() * dt;
  if (v.norm() > 0.0) out.psi = std::atan2(v.y(), v.x());
  return out;
}

Region fov_region(const AgentState& state, const AgentSpec& spec) {
  return Region{state.px - spec.fov_half_x, state.py - spec.fov_half_y,
                state.px + spec.fov_half_x, state.py + spec.fov_half_y};
}

TargetTruth step_target_truth(const TargetTruth& t, double dt, double q,
                              std::mt19937_64& rng) {
  if (dt <= 0.0) throw std::invalid_argument("step_target_truth: dt must be positive");
  if (q < 0.0) throw std::invalid_argument("step_target_truth: q must be non-negative");
  if (t.cls == ObjectClass::Soo) return t;  // static model: F = I, Q = 0

  Vec4 xi(t.px, t.py, t.vx, t.vy);
  Vec4 next = ncv_transition(dt) * xi;
  if (q > 0.0) {
    const Mat4 L = ncv_process_noise(q, dt).llt().matrixL();
    std::normal_distribution<double> unit;
    Vec4 n;
    for (int i = 0; i < 4; ++i) n(i) = unit(rng);
    next += L * n;
  }

  TargetTruth out = t;
  out.px = next(0);
  out.py = next(1);
  out.vx = next(2);
  out.vy = next(3);
  return out;
}

}  // namespace mrtrack
