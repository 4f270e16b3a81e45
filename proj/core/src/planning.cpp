#include "mrtrack/planning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrtrack {

namespace {

Eigen::VectorXd encode_plan(const std::vector<Vec2>& actions) {
  Eigen::VectorXd x(2 * actions.size());
  for (std::size_t h = 0; h < actions.size(); ++h) x.segment<2>(2 * h) = actions[h];
  return x;
}

std::vector<Vec2> decode_plan(const Eigen::VectorXd& x) {
  std::vector<Vec2> actions(x.size() / 2);
  for (std::size_t h = 0; h < actions.size(); ++h) actions[h] = x.segment<2>(2 * h);
  return actions;
}

}  // namespace

std::vector<std::vector<Vec2>> nominal_prediction(
    const std::vector<TrackEstimate>& ooi_tracks, int horizon, double dt) {
  if (horizon < 1) throw std::invalid_argument("nominal_prediction: horizon must be >= 1");
  const Mat4 F = ncv_transition(dt);
  std::vector<Vec4> means;
  means.reserve(ooi_tracks.size());
  for (const auto& t : ooi_tracks) means.push_back(Vec4(t.xi));

  std::vector<std::vector<Vec2>> out(horizon);
  for (int h = 0; h < horizon; ++h) {
    out[h].reserve(means.size());
    for (auto& m : means) {
      m = F * m;
      out[h].push_back(m.head<2>());
    }
  }
  return out;
}

double evaluate_objective(const PlanningProblem& problem,
                          const std::vector<Plan>& plans) {
  const auto& params = problem.params;
  const int H = params.horizon;
  if (plans.size() != problem.agents.size())
    throw std::invalid_argument("evaluate_objective: one plan per agent required");
  for (const auto& p : plans)
    if (static_cast<int>(p.actions.size()) != H)
      throw std::invalid_argument("evaluate_objective: plan length mismatch");

  const Mat4 F = ncv_transition(params.dt);
  const Mat4 Q = ncv_process_noise(params.process_noise_q, params.dt);
  const bool use_occlusions = params.occlusion_mode != OcclusionMode::None;

  std::vector<AgentState> agents = problem.agents;
  std::vector<Vec4> means;
  std::vector<Mat4> covs;
  for (const auto& t : problem.ooi_tracks) {
    means.push_back(Vec4(t.xi));
    covs.push_back(Mat4(t.P));
  }

  double cost = 0.0;
  double discount = 1.0;
  for (int h = 0; h < H; ++h) {
    for (std::size_t a = 0; a < agents.size(); ++a)
      agents[a] = step_agent(agents[a], plans[a].actions[h], params.dt,
                             problem.specs[a].v_max);

    for (std::size_t t = 0; t < means.size(); ++t) {
      means[t] = F * means[t];
      covs[t] = F * covs[t] * F.transpose() + Q;
      const Vec2 pos = means[t].head<2>();

      bool occluded = false;
      if (use_occlusions) {
        for (const auto& w : problem.occlusions) {
          if (point_in_disc(pos, w)) {
            occluded = true;
            break;
          }
        }
      }

      if (!occluded) {
        // Information update over every agent whose footprint holds the
        // nominal position, noise from the nominal geometry.
        Mat2 pos_info = Mat2::Zero();
        bool any = false;
        for (std::size_t a = 0; a < agents.size(); ++a) {
          if (!fov_region(agents[a], problem.specs[a]).contains(pos)) continue;
          const auto [d, rho] = bearing_distance(agents[a], pos);
          const Mat2 R = measurement_covariance(d, rho, problem.specs[a].alpha,
                                                params.d_min);
          pos_info += R.llt().solve(Mat2::Identity());
          any = true;
        }
        if (any) {
          Mat4 info = covs[t].llt().solve(Mat4::Identity());
          info.topLeftCorner<2, 2>() += pos_info;
          covs[t] = info.llt().solve(Mat4::Identity());
          covs[t] = 0.5 * (covs[t] + covs[t].transpose()).eval();
        }
      }
      cost += discount * covs[t].trace();
    }
    discount *= params.gamma;
  }
  return cost;
}

PsoResult pso_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                       const std::vector<std::pair<double, double>>& bounds,
                       const PsoParams& params, std::mt19937_64& rng,
                       const std::vector<Eigen::VectorXd>& seed_points) {
  const int dim = static_cast<int>(bounds.size());
  const int n = std::max(params.swarm_size, 2);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  auto clamp_to_bounds = [&](Eigen::VectorXd& x) {
    for (int d = 0; d < dim; ++d)
      x(d) = std::clamp(x(d), bounds[d].first, bounds[d].second);
  };

  std::vector<Eigen::VectorXd> pos(n), vel(n, Eigen::VectorXd::Zero(dim));
  std::vector<Eigen::VectorXd> best_pos(n);
  std::vector<double> best_cost(n);

  // Particle 0 is always the zero action; further seeds follow, the rest are
  // uniform in the box.
  std::vector<Eigen::VectorXd> seeds;
  seeds.push_back(Eigen::VectorXd::Zero(dim));
  for (const auto& s : seed_points) seeds.push_back(s);
  for (int i = 0; i < n; ++i) {
    if (i < static_cast<int>(seeds.size())) {
      pos[i] = seeds[i];
      clamp_to_bounds(pos[i]);
    } else {
      pos[i].resize(dim);
      for (int d = 0; d < dim; ++d) {
        const auto [lo, hi] = bounds[d];
        pos[i](d) = lo + (hi - lo) * u01(rng);
      }
    }
    best_pos[i] = pos[i];
    best_cost[i] = f(pos[i]);
  }

  int g = 0;
  for (int i = 1; i < n; ++i)
    if (best_cost[i] < best_cost[g]) g = i;
  Eigen::VectorXd gbest = best_pos[g];
  double gbest_cost = best_cost[g];

  for (int it = 0; it < params.iterations; ++it) {
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < dim; ++d) {
        const double r1 = u01(rng);
        const double r2 = u01(rng);
        vel[i](d) = params.inertia * vel[i](d) +
                    params.cognitive * r1 * (best_pos[i](d) - pos[i](d)) +
                    params.social * r2 * (gbest(d) - pos[i](d));
      }
      pos[i] += vel[i];
      clamp_to_bounds(pos[i]);
      const double c = f(pos[i]);
      if (c < best_cost[i]) {
        best_cost[i] = c;
        best_pos[i] = pos[i];
      }
      if (c < gbest_cost) {
        gbest_cost = c;
        gbest = pos[i];
      }
    }
  }
  return PsoResult{gbest, gbest_cost};
}

namespace {

std::vector<std::pair<double, double>> action_bounds(double v_max, int H) {
  return std::vector<std::pair<double, double>>(2 * H, {-v_max, v_max});
}

}  // namespace

Plan plan_sma_nbo(const PlanningProblem& problem, int agent_index,
                  const std::vector<Plan>& confirmed,
                  const std::vector<Intention>& intentions,
                  const PsoParams& pso, std::mt19937_64& rng,
                  double* incumbent_cost, double* improved_cost) {
  const int N = static_cast<int>(problem.agents.size());
  const int H = problem.params.horizon;
  if (static_cast<int>(confirmed.size()) < agent_index)
    throw std::invalid_argument("plan_sma_nbo: missing confirmed plan");
  for (int j = agent_index; j < N; ++j) {
    if (j >= static_cast<int>(intentions.size()) ||
        static_cast<int>(intentions[j].actions.size()) != H)
      throw std::invalid_argument("plan_sma_nbo: missing intention for agent " +
                                  std::to_string(j));
  }

  std::vector<Plan> plans(N);
  for (int j = 0; j < N; ++j) {
    plans[j].agent = j;
    if (j < agent_index)
      plans[j].actions = confirmed[j].actions;
    else
      plans[j].actions = intentions[j].actions;
  }

  auto objective = [&](const Eigen::VectorXd& x) {
    std::vector<Plan> trial = plans;
    trial[agent_index].actions = decode_plan(x);
    return evaluate_objective(problem, trial);
  };

  if (incumbent_cost) *incumbent_cost = evaluate_objective(problem, plans);

  const Eigen::VectorXd warm = encode_plan(intentions[agent_index].actions);
  const PsoResult best =
      pso_minimize(objective, action_bounds(problem.specs[agent_index].v_max, H),
                   pso, rng, {warm});
  if (improved_cost) *improved_cost = best.cost;

  Plan out;
  out.agent = agent_index;
  out.actions = decode_plan(best.x);
  return out;
}

Plan plan_dec_pomdp(const PlanningProblem& problem, int agent_index,
                    const PsoParams& pso, std::mt19937_64& rng,
                    const Intention* warm_start) {
  const int H = problem.params.horizon;

  // Strictly decentralized: the rollout contains agent i alone.
  PlanningProblem solo;
  solo.agents = {problem.agents[agent_index]};
  solo.specs = {problem.specs[agent_index]};
  solo.ooi_tracks = problem.ooi_tracks;
  solo.occlusions = problem.occlusions;
  solo.params = problem.params;

  auto objective = [&](const Eigen::VectorXd& x) {
    std::vector<Plan> trial(1);
    trial[0].agent = 0;
    trial[0].actions = decode_plan(x);
    return evaluate_objective(solo, trial);
  };

  std::vector<Eigen::VectorXd> seeds;
  if (warm_start && static_cast<int>(warm_start->actions.size()) == H)
    seeds.push_back(encode_plan(warm_start->actions));

  const PsoResult best = pso_minimize(
      objective, action_bounds(problem.specs[agent_index].v_max, H), pso, rng,
      seeds);

  Plan out;
  out.agent = agent_index;
  out.actions = decode_plan(best.x);
  return out;
}

Intention shift_intention(const Plan& plan) {
  if (plan.actions.empty())
    throw std::invalid_argument("shift_intention: empty plan");
  Intention out;
  out.agent = plan.agent;
  out.actions.assign(plan.actions.begin() + 1, plan.actions.end());
  out.actions.push_back(plan.actions.back());
  return out;
}

}  // namespace mrtrack
