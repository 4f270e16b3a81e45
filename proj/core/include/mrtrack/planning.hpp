#pragma once

#include "mrtrack/tracking.hpp"
#include "mrtrack/world.hpp"

#include <functional>
#include <random>
#include <vector>

namespace mrtrack {

/// An agent's H-step velocity command sequence.
struct Plan {
  int agent = 0;
  std::vector<Vec2> actions;
};

/// The one-step-shifted residual of a plan, shared with the fleet as the
/// agent's predicted future behaviour.
struct Intention {
  int agent = 0;
  std::vector<Vec2> actions;
};

enum class OcclusionMode { Apriori, Dynamic, None };

struct ObjectiveParams {
  int horizon = 5;
  double gamma = 1.0;  // discount over look-ahead steps
  double dt = 0.2;
  OcclusionMode occlusion_mode = OcclusionMode::Apriori;
  double process_noise_q = 0.0;
  double d_min = kRangeFloor;
};

struct PsoParams {
  int swarm_size = 40;
  int iterations = 60;
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
};

/// Everything the nominal-belief objective needs: agent kinematics, the OOI
/// belief to roll forward, and the occlusion set matching occlusion_mode.
struct PlanningProblem {
  std::vector<AgentState> agents;
  std::vector<AgentSpec> specs;
  std::vector<TrackEstimate> ooi_tracks;
  std::vector<OcclusionObject> occlusions;
  ObjectiveParams params;
};

struct PsoResult {
  Eigen::VectorXd x;
  double cost = 0.0;
};

/// Noise-free NCV propagation of every OOI mean; result[h][t] is track t's
/// predicted position after h+1 steps.
std::vector<std::vector<Vec2>> nominal_prediction(
    const std::vector<TrackEstimate>& ooi_tracks, int horizon, double dt);

/// Deterministic receding-horizon cost: roll agents forward under plans,
/// propagate each OOI covariance, apply the information update for every
/// agent whose FoV holds the nominal position unoccluded, and accumulate the
/// discounted posterior traces. Throws when plan lengths disagree with the
/// horizon.
double evaluate_objective(const PlanningProblem& problem,
                          const std::vector<Plan>& plans);

/// Global-best particle swarm minimizer over a box. seed_points are injected
/// as initial particles (the zero vector is always seeded); deterministic
/// given the generator state.
PsoResult pso_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                       const std::vector<std::pair<double, double>>& bounds,
                       const PsoParams& params, std::mt19937_64& rng,
                       const std::vector<Eigen::VectorXd>& seed_points = {});

/// Sequential single-agent policy improvement: optimize agent i's plan
/// holding agents 1..i-1 at their confirmed plans and agents i+1..N at their
/// intentions. Throws when a needed intention is missing. When provided,
/// incumbent/improved receive the joint cost before and after the step.
Plan plan_sma_nbo(const PlanningProblem& problem, int agent_index,
                  const std::vector<Plan>& confirmed,
                  const std::vector<Intention>& intentions,
                  const PsoParams& pso, std::mt19937_64& rng,
                  double* incumbent_cost = nullptr,
                  double* improved_cost = nullptr);

/// Fully decentralized baseline: agent i plans as the only sensing agent.
/// warm_start seeds the swarm with the agent's previous residual plan.
Plan plan_dec_pomdp(const PlanningProblem& problem, int agent_index,
                    const PsoParams& pso, std::mt19937_64& rng,
                    const Intention* warm_start = nullptr);

/// Residual action sequence (a2..aH, aH); length is preserved.
Intention shift_intention(const Plan& plan);

}  // namespace mrtrack
