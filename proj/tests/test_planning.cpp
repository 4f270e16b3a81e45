#include "mrtrack/planning.hpp"
#include "mrtrack/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mrtrack;

TEST_SUITE_BEGIN("planning");

namespace {

TrackEstimate make_track(int id, const Vec4& xi, const Mat4& P) {
  TrackEstimate t;
  t.id = id;
  t.label = "target";
  t.kind = TrackKind::Ooi;
  t.xi = xi;
  t.P = P;
  return t;
}

PlanningProblem single_agent_problem(const Vec2& agent_pos,
                                     const std::vector<Vec2>& target_pos,
                                     int horizon) {
  PlanningProblem p;
  AgentState a;
  a.px = agent_pos.x();
  a.py = agent_pos.y();
  p.agents.push_back(a);
  p.specs.push_back(AgentSpec{2.0, 2.0, 2.0, 1.0});
  int id = 0;
  for (const auto& pos : target_pos)
    p.ooi_tracks.push_back(
        make_track(id++, Vec4(pos.x(), pos.y(), 0, 0), Mat4::Identity()));
  p.params.horizon = horizon;
  p.params.dt = 0.2;
  p.params.occlusion_mode = OcclusionMode::None;
  return p;
}

Plan constant_plan(int agent, int horizon, const Vec2& a) {
  Plan p;
  p.agent = agent;
  p.actions.assign(horizon, a);
  return p;
}

}  // namespace

TEST_CASE("nominal_prediction walks the NCV line") {
  std::vector<TrackEstimate> tracks{make_track(0, Vec4(0, 0, 1, 0), Mat4::Identity())};
  const auto pred = nominal_prediction(tracks, 3, 1.0);
  REQUIRE(pred.size() == 3);
  CHECK(pred[0][0].x() == doctest::Approx(1.0));
  CHECK(pred[1][0].x() == doctest::Approx(2.0));
  CHECK(pred[2][0].x() == doctest::Approx(3.0));
}

TEST_CASE("zero-velocity track predicts a constant position") {
  std::vector<TrackEstimate> tracks{make_track(0, Vec4(2, -1, 0, 0), Mat4::Identity())};
  const auto pred = nominal_prediction(tracks, 5, 0.2);
  for (const auto& step : pred) {
    CHECK(step[0].x() == doctest::Approx(2.0));
    CHECK(step[0].y() == doctest::Approx(-1.0));
  }
}

TEST_CASE("nominal_prediction agrees with noiseless truth stepping") {
  std::mt19937_64 rng(5);
  TargetTruth truth;
  truth.px = 0.4;
  truth.py = -0.3;
  truth.vx = 0.9;
  truth.vy = 0.2;
  std::vector<TrackEstimate> tracks{
      make_track(0, Vec4(truth.px, truth.py, truth.vx, truth.vy), Mat4::Identity())};
  const auto pred = nominal_prediction(tracks, 4, 0.2);
  TargetTruth stepped = truth;
  for (int h = 0; h < 4; ++h) {
    stepped = step_target_truth(stepped, 0.2, 0.0, rng);
    CHECK(pred[h][0].x() == doctest::Approx(stepped.px).epsilon(1e-12));
    CHECK(pred[h][0].y() == doctest::Approx(stepped.py).epsilon(1e-12));
  }
}

TEST_CASE("covering a target costs less than parking far away") {
  PlanningProblem p = single_agent_problem(Vec2(0, 0), {Vec2(0, 0)}, 3);
  const double parked = evaluate_objective(p, {constant_plan(0, 3, Vec2::Zero())});
  PlanningProblem far = p;
  far.agents[0].px = 100.0;
  const double away = evaluate_objective(far, {constant_plan(0, 3, Vec2::Zero())});
  CHECK(parked < away);
}

TEST_CASE("a fully occluded horizon degenerates to pure prediction") {
  PlanningProblem p = single_agent_problem(Vec2(0, 0), {Vec2(0, 0)}, 4);
  p.params.occlusion_mode = OcclusionMode::Apriori;
  p.occlusions.push_back(OcclusionObject{0.0, 0.0, 5.0, "tree"});
  const double cost = evaluate_objective(p, {constant_plan(0, 4, Vec2::Zero())});

  double expect = 0.0;
  TrackEstimate t = p.ooi_tracks[0];
  for (int h = 0; h < 4; ++h) {
    t = kf_predict(t, p.params.dt, p.params.process_noise_q);
    expect += t.P.trace();
  }
  CHECK(cost == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("H=1 cost equals the direct information update trace") {
  PlanningProblem p = single_agent_problem(Vec2(0, 0), {Vec2(0.5, 0.5)}, 1);
  const double cost = evaluate_objective(p, {constant_plan(0, 1, Vec2::Zero())});

  TrackEstimate t = kf_predict(p.ooi_tracks[0], p.params.dt, 0.0);
  const auto [d, rho] = bearing_distance(p.agents[0], t.position());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 4);
  H(0, 0) = H(1, 1) = 1.0;
  const auto [post, trace] = info_update_trace(
      t.P, {{H, measurement_covariance(d, rho, 1.0)}});
  CHECK(cost == doctest::Approx(trace).epsilon(1e-12));
}

TEST_CASE("objective is deterministic and ignores occlusions in none mode") {
  PlanningProblem p = single_agent_problem(Vec2(0, 0), {Vec2(0.3, 0.1)}, 3);
  p.occlusions.push_back(OcclusionObject{0.3, 0.1, 3.0, "tree"});
  const auto plan = constant_plan(0, 3, Vec2(0.1, 0.0));
  const double c1 = evaluate_objective(p, {plan});
  const double c2 = evaluate_objective(p, {plan});
  CHECK(c1 == c2);

  PlanningProblem no_occ = p;
  no_occ.occlusions.clear();
  CHECK(evaluate_objective(no_occ, {plan}) == doctest::Approx(c1));
}

TEST_CASE("adding a visible observer never increases the objective") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 60; ++trial) {
    PlanningProblem one =
        single_agent_problem(Vec2(u(rng), u(rng)), {Vec2(u(rng), u(rng))}, 3);
    PlanningProblem two = one;
    AgentState extra;
    extra.px = u(rng);
    extra.py = u(rng);
    two.agents.push_back(extra);
    two.specs.push_back(two.specs[0]);
    const double c_one = evaluate_objective(one, {constant_plan(0, 3, Vec2::Zero())});
    const double c_two = evaluate_objective(
        two, {constant_plan(0, 3, Vec2::Zero()), constant_plan(1, 3, Vec2::Zero())});
    CHECK(c_two <= c_one + 1e-12);
  }
}

TEST_CASE("mismatched plan length is rejected") {
  PlanningProblem p = single_agent_problem(Vec2(0, 0), {Vec2(0, 0)}, 3);
  CHECK_THROWS_AS(evaluate_objective(p, {constant_plan(0, 2, Vec2::Zero())}),
                  std::invalid_argument);
}

TEST_CASE("pso finds the sphere minimum") {
  auto sphere = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  std::vector<std::pair<double, double>> bounds(4, {-1.0, 1.0});
  PsoParams params;
  params.swarm_size = 30;
  params.iterations = 100;
  auto rng = derive_stream(3, "pso");
  // start the swarm away from the answer: seed a corner, not the origin
  std::vector<Eigen::VectorXd> seeds{Eigen::VectorXd::Constant(4, 0.9)};
  // the zero seed would solve it trivially; check the swarm itself converges
  auto shifted = [](const Eigen::VectorXd& x) {
    return (x - Eigen::VectorXd::Constant(4, 0.37)).squaredNorm();
  };
  const PsoResult r = pso_minimize(shifted, bounds, params, rng, seeds);
  CHECK(r.cost < 1e-3);
}

TEST_CASE("pso on a constant objective returns the constant") {
  auto flat = [](const Eigen::VectorXd&) { return 4.2; };
  std::vector<std::pair<double, double>> bounds(2, {-1.0, 1.0});
  PsoParams params;
  params.swarm_size = 10;
  params.iterations = 5;
  auto rng = derive_stream(4, "pso");
  CHECK(pso_minimize(flat, bounds, params, rng).cost == doctest::Approx(4.2));
}

TEST_CASE("pso never loses to the zero-action seed") {
  auto f = [](const Eigen::VectorXd& x) { return std::cos(x.sum()) + x.squaredNorm(); };
  std::vector<std::pair<double, double>> bounds(4, {-2.0, 2.0});
  PsoParams params;
  params.swarm_size = 8;
  params.iterations = 3;
  auto rng = derive_stream(5, "pso");
  const PsoResult r = pso_minimize(f, bounds, params, rng);
  CHECK(r.cost <= f(Eigen::VectorXd::Zero(4)) + 1e-12);
}

TEST_CASE("pso is deterministic under a fixed stream") {
  auto f = [](const Eigen::VectorXd& x) { return (x.array() - 0.2).matrix().squaredNorm(); };
  std::vector<std::pair<double, double>> bounds(6, {-1.0, 1.0});
  PsoParams params;
  auto rng1 = derive_stream(6, "pso");
  auto rng2 = derive_stream(6, "pso");
  const PsoResult a = pso_minimize(f, bounds, params, rng1);
  const PsoResult b = pso_minimize(f, bounds, params, rng2);
  CHECK(a.cost == b.cost);
  CHECK((a.x - b.x).norm() == 0.0);
}

TEST_CASE("pso lands within 5% of the exhaustive grid on a toy instance") {
  // 3 candidate actions per step, H = 2: grid-best over the discrete subset
  // upper-bounds the continuous optimum.
  PlanningProblem p = single_agent_problem(Vec2(0, 0), {Vec2(1.5, 0.0)}, 2);
  p.ooi_tracks[0].xi(2) = 0.5;  // target drifts away

  const std::vector<Vec2> candidates{Vec2(-2.0, 0.0), Vec2(0.0, 0.0), Vec2(2.0, 0.0)};
  double grid_best = std::numeric_limits<double>::infinity();
  for (const auto& a1 : candidates)
    for (const auto& a2 : candidates) {
      Plan plan;
      plan.agent = 0;
      plan.actions = {a1, a2};
      grid_best = std::min(grid_best, evaluate_objective(p, {plan}));
    }

  auto objective = [&](const Eigen::VectorXd& x) {
    Plan plan;
    plan.agent = 0;
    plan.actions = {Vec2(x(0), x(1)), Vec2(x(2), x(3))};
    return evaluate_objective(p, {plan});
  };
  std::vector<std::pair<double, double>> bounds(4, {-2.0, 2.0});
  PsoParams params;
  auto rng = derive_stream(7, "pso");
  const PsoResult r = pso_minimize(objective, bounds, params, rng);
  CHECK(r.cost <= grid_best * 1.05);
}

TEST_CASE("shift_intention drops the head and repeats the tail") {
  Plan p;
  p.agent = 1;
  p.actions = {Vec2(1, 0), Vec2(0, 1)};
  const Intention i = shift_intention(p);
  REQUIRE(i.actions.size() == 2);
  CHECK(i.actions[0] == Vec2(0, 1));
  CHECK(i.actions[1] == Vec2(0, 1));

  Plan h1;
  h1.agent = 0;
  h1.actions = {Vec2(1, 0)};
  const Intention i1 = shift_intention(h1);
  REQUIRE(i1.actions.size() == 1);
  CHECK(i1.actions[0] == Vec2(1, 0));
}

TEST_CASE("sma equals dec for a single agent") {
  PlanningProblem p = single_agent_problem(Vec2(0.5, 0.0), {Vec2(1.5, 0.5)}, 3);
  PsoParams pso;
  pso.swarm_size = 16;
  pso.iterations = 20;

  std::vector<Intention> intentions(1);
  intentions[0].agent = 0;
  intentions[0].actions.assign(3, Vec2::Zero());

  auto rng1 = derive_stream(8, "pso/agent0");
  auto rng2 = derive_stream(8, "pso/agent0");
  const Plan sma = plan_sma_nbo(p, 0, {}, intentions, pso, rng1);
  const Plan dec = plan_dec_pomdp(p, 0, pso, rng2, &intentions[0]);
  REQUIRE(sma.actions.size() == dec.actions.size());
  for (std::size_t h = 0; h < sma.actions.size(); ++h)
    CHECK((sma.actions[h] - dec.actions[h]).norm() == 0.0);
}

TEST_CASE("sma improvement step never worsens the incumbent") {
  std::mt19937_64 scene(23);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  PsoParams pso;
  pso.swarm_size = 12;
  pso.iterations = 10;
  for (int trial = 0; trial < 10; ++trial) {
    PlanningProblem p = single_agent_problem(Vec2(u(scene), u(scene)),
                                             {Vec2(u(scene), u(scene))}, 3);
    AgentState second;
    second.px = u(scene);
    second.py = u(scene);
    p.agents.push_back(second);
    p.specs.push_back(p.specs[0]);

    std::vector<Intention> intentions(2);
    for (int i = 0; i < 2; ++i) {
      intentions[i].agent = i;
      intentions[i].actions.assign(3, Vec2(u(scene) * 0.3, u(scene) * 0.3));
    }
    auto rng = derive_stream(trial, "pso/agent0");
    double incumbent = 0.0, improved = 0.0;
    plan_sma_nbo(p, 0, {}, intentions, pso, rng, &incumbent, &improved);
    CHECK(improved <= incumbent + 1e-12);
  }
}

TEST_CASE("sma with a parked teammate covers the free target") {
  // two static targets, agent 1's intention parks it on target A; agent 0
  // should end up over target B
  PlanningProblem p;
  AgentState a0;
  a0.px = 0.0;
  AgentState a1;
  a1.px = 0.0;
  a1.py = 2.0;
  p.agents = {a0, a1};
  p.specs.assign(2, AgentSpec{2.0, 1.0, 1.0, 1.0});
  p.ooi_tracks.push_back(make_track(0, Vec4(0.0, 2.0, 0, 0), Mat4::Identity()));  // A
  p.ooi_tracks.push_back(make_track(1, Vec4(1.5, -1.0, 0, 0), Mat4::Identity()));  // B
  p.params.horizon = 4;
  p.params.dt = 0.5;
  p.params.occlusion_mode = OcclusionMode::None;

  std::vector<Intention> intentions(2);
  intentions[0].agent = 0;
  intentions[0].actions.assign(4, Vec2::Zero());
  intentions[1].agent = 1;
  intentions[1].actions.assign(4, Vec2::Zero());  // parked on A

  PsoParams pso;
  auto rng = derive_stream(99, "pso/agent0");
  const Plan plan = plan_sma_nbo(p, 0, {}, intentions, pso, rng);

  AgentState end = p.agents[0];
  for (const auto& action : plan.actions)
    end = step_agent(end, action, p.params.dt, 2.0);
  CHECK(std::abs(end.px - 1.5) < 1.0);
  CHECK(std::abs(end.py - (-1.0)) < 1.0);
}

TEST_CASE("missing intentions are an error") {
  PlanningProblem p = single_agent_problem(Vec2(0, 0), {Vec2(1, 0)}, 3);
  AgentState second;
  p.agents.push_back(second);
  p.specs.push_back(p.specs[0]);
  PsoParams pso;
  auto rng = derive_stream(1, "pso/agent0");
  std::vector<Intention> intentions(1);  // agent 1's intention missing
  intentions[0].actions.assign(3, Vec2::Zero());
  CHECK_THROWS_AS(plan_sma_nbo(p, 0, {}, intentions, pso, rng),
                  std::invalid_argument);
}

TEST_SUITE_END();
