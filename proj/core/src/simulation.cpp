#include "mrtrack/simulation.hpp"

#include "mrtrack/rng.hpp"

#include <atomic>
#include <map>
#include <set>
#include <thread>

namespace mrtrack {

using nlohmann::json;

std::vector<int> TrialTrace::ooi_ids() const {
  std::vector<int> ids;
  if (steps.empty()) return ids;
  for (const auto& t : steps.front().targets)
    if (t.cls == ObjectClass::Ooi) ids.push_back(t.id);
  return ids;
}

std::vector<VisibilityMatrix> TrialTrace::visibility_sequence() const {
  std::vector<VisibilityMatrix> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.visibility);
  return out;
}

namespace {

struct TrialContext {
  const ScenarioConfig& scenario;
  const RunConfig& run;
  std::vector<AgentSpec> specs;
  int n_agents;
  int horizon;
};

ObjectiveParams make_objective_params(const ScenarioConfig& sc, const RunConfig& run) {
  ObjectiveParams p;
  p.horizon = run.horizon;
  p.gamma = run.gamma;
  p.dt = sc.dt;
  p.occlusion_mode = run.occlusion_mode;
  p.process_noise_q = sc.process_noise_q;
  return p;
}

std::vector<OcclusionObject> planner_occlusions(const ScenarioConfig& sc,
                                                const RunConfig& run,
                                                const FilterState& fused) {
  switch (run.occlusion_mode) {
    case OcclusionMode::Apriori: return sc.occlusions;
    case OcclusionMode::Dynamic: return fused.occlusion_map.as_discs();
    case OcclusionMode::None: return {};
  }
  return {};
}

}  // namespace

TrialTrace run_trial(const ScenarioConfig& scenario, const RunConfig& run,
                     std::uint64_t trial_seed) {
  const int N = static_cast<int>(scenario.agents.size());
  const int L = scenario.duration_steps;
  const int H = run.horizon;
  const double dt = scenario.dt;

  std::vector<AgentSpec> specs;
  for (const auto& a : scenario.agents) specs.push_back(a.spec);

  WorldState world = scenario.initial_world();

  std::vector<FilterState> filters(N);
  for (auto& f : filters) {
    f.ooi_tracks = scenario.initial_tracks();
    f.occlusion_map.fixed_radius = scenario.soo_radius();
  }
  std::vector<int> birth_counters(N, 0);

  std::vector<Intention> intentions(N);
  for (int i = 0; i < N; ++i) {
    intentions[i].agent = i;
    intentions[i].actions.assign(H, Vec2::Zero());
  }

  auto truth_rng = derive_stream(trial_seed, "truth");
  std::vector<std::mt19937_64> sense_rngs, pso_rngs;
  for (int i = 0; i < N; ++i) {
    sense_rngs.push_back(derive_stream(trial_seed, "sense/agent" + std::to_string(i)));
    pso_rngs.push_back(derive_stream(trial_seed, "pso/agent" + std::to_string(i)));
  }

  const std::vector<double> ci_weights(N, 1.0 / N);
  SooUpdateParams soo_params;
  soo_params.gate_chi2 = scenario.soo.gate_chi2;
  soo_params.birth_cov = scenario.soo.birth_cov;
  CiParams ci_params;
  ci_params.merge_distance = scenario.soo.merge_distance;

  std::set<std::pair<int, int>> detections_seen;  // (soo index, agent)

  TrialTrace trace;
  trace.scenario = scenario.name;
  trace.seed = trial_seed;
  trace.dt = dt;
  trace.occlusions = scenario.occlusions;

  int current_step = 0;
  try {
    for (int k = 0; k <= L; ++k) {
      current_step = k;
      const VisibilityMatrix vis = visible_set(world, specs);
      const std::vector<Observation> observations =
          generate_observations(world, specs, sense_rngs, run.noise_scale);

      for (int i = 0; i < N; ++i) {
        FilterState& local = filters[i];
        if (k > 0)
          for (auto& track : local.ooi_tracks)
            track = kf_predict(track, dt, scenario.process_noise_q);

        // Agent i's OOI observations, associated per semantic class.
        std::map<std::string, std::pair<std::vector<Vec2>, std::vector<Mat2>>> by_label;
        std::vector<Observation> soo_obs;
        for (const auto& o : observations) {
          if (o.source_agent != i) continue;
          if (o.cls == ObjectClass::Soo) {
            soo_obs.push_back(o);
            continue;
          }
          const auto [d, rho] = bearing_distance(world.agents[i], o.z);
          by_label[o.label].first.push_back(o.z);
          by_label[o.label].second.push_back(
              measurement_covariance(d, rho, specs[i].alpha));
        }
        for (const auto& [label, zr] : by_label) {
          std::vector<int> idx;
          std::vector<TrackEstimate> subset;
          for (int t = 0; t < static_cast<int>(local.ooi_tracks.size()); ++t) {
            if (local.ooi_tracks[t].label == label) {
              idx.push_back(t);
              subset.push_back(local.ooi_tracks[t]);
            }
          }
          if (subset.empty()) continue;
          const AssociationResult assoc =
              associate(subset, zr.first, zr.second, run.gate_chi2, run.p_d,
                        run.clutter_density);
          for (std::size_t s = 0; s < subset.size(); ++s)
            local.ooi_tracks[idx[s]] = jpda_apply(
                subset[s], zr.first, zr.second, assoc.beta.row(s), assoc.beta0(s));
        }

        if (!soo_obs.empty()) {
          soo_params.id_namespace = i;
          local.occlusion_map =
              update_occlusion_map(local.occlusion_map, soo_obs, world.agents[i],
                                   specs[i], soo_params, birth_counters[i]);
        }
      }

      FilterState fused = filters.front();
      for (int r = 0; r < std::max(run.ci_rounds, 1); ++r) {
        fused = ci_fuse(filters, ci_weights, ci_params);
        for (auto& f : filters) f = fused;
      }

      StepRecord rec;
      rec.k = k;
      rec.agents = world.agents;
      rec.targets = world.targets;
      rec.visibility = vis;
      for (int i = 0; i < N; ++i) rec.fovs.push_back(fov_region(world.agents[i], specs[i]));
      for (const auto& t : fused.ooi_tracks)
        rec.tracks.push_back(TrackSummary{t.id, t.label, t.xi, t.P.trace()});
      for (const auto& t : fused.occlusion_map.tracks)
        rec.occlusion_map.push_back(MapEntrySummary{
            t.id, t.xi(0), t.xi(1), fused.occlusion_map.fixed_radius, t.P.trace()});

      // Occlusion-detection events: true SOO center entering an agent's FoV.
      for (int w = 0; w < static_cast<int>(scenario.occlusions.size()); ++w) {
        for (int i = 0; i < N; ++i) {
          if (!rec.fovs[i].contains(scenario.occlusions[w].center())) continue;
          if (detections_seen.insert({w, i}).second)
            rec.detections.push_back(SooDetection{w, i});
        }
      }

      if (k < L) {
        PlanningProblem problem;
        problem.agents = world.agents;
        problem.specs = specs;
        problem.ooi_tracks = fused.ooi_tracks;
        problem.occlusions = planner_occlusions(scenario, run, fused);
        problem.params = make_objective_params(scenario, run);

        std::vector<Plan> plans;
        if (run.alg == Algorithm::SmaNbo) {
          for (int i = 0; i < N; ++i) {
            double incumbent = 0.0, improved = 0.0;
            plans.push_back(plan_sma_nbo(problem, i, plans, intentions, run.pso,
                                         pso_rngs[i], &incumbent, &improved));
            rec.sma_costs.push_back(ImprovementRecord{incumbent, improved});
          }
        } else {
          for (int i = 0; i < N; ++i)
            plans.push_back(
                plan_dec_pomdp(problem, i, run.pso, pso_rngs[i], &intentions[i]));
        }
        for (const auto& p : plans) rec.plans.push_back(p.actions);
        trace.steps.push_back(std::move(rec));

        for (int i = 0; i < N; ++i) {
          intentions[i] = shift_intention(plans[i]);
          world.agents[i] =
              step_agent(world.agents[i], plans[i].actions[0], dt, specs[i].v_max);
        }
        for (int t = 0; t < static_cast<int>(world.targets.size()); ++t) {
          if (world.targets[t].cls == ObjectClass::Soo) continue;
          const Vec2 v = scenario.scripted_velocity(t, k);
          world.targets[t].vx = v.x();
          world.targets[t].vy = v.y();
          world.targets[t] = step_target_truth(world.targets[t], dt,
                                               scenario.process_noise_q, truth_rng);
        }
        world.time_step = k + 1;
      } else {
        trace.steps.push_back(std::move(rec));
      }
    }
  } catch (const std::exception& e) {
    throw TrialError("step " + std::to_string(current_step) + ": " + e.what());
  }
  return trace;
}

BatchResult run_batch(const ScenarioConfig& scenario, const RunConfig& run) {
  BatchResult batch;
  batch.scenario = scenario;
  batch.run = run;
  batch.traces.resize(run.trials);

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int n_threads =
      std::max(1, std::min(run.threads > 0 ? run.threads : static_cast<int>(hw),
                           run.trials));

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= run.trials) return;
      const std::uint64_t seed = run.base_seed + static_cast<std::uint64_t>(i);
      try {
        batch.traces[i] = run_trial(scenario, run, seed);
      } catch (const std::exception& e) {
        TrialTrace failed;
        failed.scenario = scenario.name;
        failed.seed = seed;
        failed.dt = scenario.dt;
        failed.occlusions = scenario.occlusions;
        failed.failed = true;
        failed.error = e.what();
        batch.traces[i] = std::move(failed);
      }
    }
  };

  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return batch;
}

namespace {

json region_to_json(const Region& r) {
  return json{r.min_x, r.min_y, r.max_x, r.max_y};
}

json vec_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

json trace_to_json(const TrialTrace& trace) {
  json j;
  j["scenario"] = trace.scenario;
  j["seed"] = trace.seed;
  j["dt"] = trace.dt;
  j["failed"] = trace.failed;
  j["error"] = trace.error;
  j["occlusions"] = json::array();
  for (const auto& w : trace.occlusions)
    j["occlusions"].push_back(
        {{"cx", w.cx}, {"cy", w.cy}, {"radius", w.radius}, {"label", w.label}});

  j["steps"] = json::array();
  for (const auto& s : trace.steps) {
    json js;
    js["k"] = s.k;
    js["agents"] = json::array();
    for (const auto& a : s.agents)
      js["agents"].push_back({a.px, a.py, a.psi, a.vx, a.vy});
    js["targets"] = json::array();
    for (const auto& t : s.targets)
      js["targets"].push_back({{"id", t.id},
                               {"label", t.label},
                               {"soo", t.cls == ObjectClass::Soo},
                               {"state", {t.px, t.py, t.vx, t.vy}}});
    js["vis"] = {{"agents", s.visibility.agents},
                 {"objects", s.visibility.objects},
                 {"cells", s.visibility.cells}};
    js["fovs"] = json::array();
    for (const auto& f : s.fovs) js["fovs"].push_back(region_to_json(f));
    js["tracks"] = json::array();
    for (const auto& t : s.tracks)
      js["tracks"].push_back({{"id", t.id},
                              {"label", t.label},
                              {"mean", vec_to_json(t.mean)},
                              {"trace", t.cov_trace}});
    js["map"] = json::array();
    for (const auto& m : s.occlusion_map)
      js["map"].push_back({{"id", m.id}, {"x", m.x}, {"y", m.y},
                           {"radius", m.radius}, {"trace", m.cov_trace}});
    js["plans"] = json::array();
    for (const auto& p : s.plans) {
      json jp = json::array();
      for (const auto& a : p) {
        jp.push_back(a.x());
        jp.push_back(a.y());
      }
      js["plans"].push_back(jp);
    }
    js["detections"] = json::array();
    for (const auto& d : s.detections)
      js["detections"].push_back({{"soo", d.soo_index}, {"agent", d.agent}});
    js["sma_costs"] = json::array();
    for (const auto& c : s.sma_costs)
      js["sma_costs"].push_back({{"incumbent", c.incumbent}, {"improved", c.improved}});
    j["steps"].push_back(std::move(js));
  }
  return j;
}

TrialTrace trace_from_json(const json& j) {
  TrialTrace trace;
  trace.scenario = j.at("scenario").get<std::string>();
  trace.seed = j.at("seed").get<std::uint64_t>();
  trace.dt = j.at("dt").get<double>();
  trace.failed = j.at("failed").get<bool>();
  trace.error = j.at("error").get<std::string>();
  for (const auto& jw : j.at("occlusions")) {
    OcclusionObject w;
    w.cx = jw.at("cx").get<double>();
    w.cy = jw.at("cy").get<double>();
    w.radius = jw.at("radius").get<double>();
    w.label = jw.at("label").get<std::string>();
    trace.occlusions.push_back(w);
  }

  for (const auto& js : j.at("steps")) {
    StepRecord s;
    s.k = js.at("k").get<int>();
    for (const auto& ja : js.at("agents")) {
      AgentState a;
      a.px = ja[0].get<double>();
      a.py = ja[1].get<double>();
      a.psi = ja[2].get<double>();
      a.vx = ja[3].get<double>();
      a.vy = ja[4].get<double>();
      s.agents.push_back(a);
    }
    for (const auto& jt : js.at("targets")) {
      TargetTruth t;
      t.id = jt.at("id").get<int>();
      t.label = jt.at("label").get<std::string>();
      t.cls = jt.at("soo").get<bool>() ? ObjectClass::Soo : ObjectClass::Ooi;
      const auto& st = jt.at("state");
      t.px = st[0].get<double>();
      t.py = st[1].get<double>();
      t.vx = st[2].get<double>();
      t.vy = st[3].get<double>();
      s.targets.push_back(t);
    }
    const auto& jv = js.at("vis");
    s.visibility.agents = jv.at("agents").get<int>();
    s.visibility.objects = jv.at("objects").get<int>();
    s.visibility.cells = jv.at("cells").get<std::vector<std::uint8_t>>();
    for (const auto& jf : js.at("fovs")) {
      Region r;
      r.min_x = jf[0].get<double>();
      r.min_y = jf[1].get<double>();
      r.max_x = jf[2].get<double>();
      r.max_y = jf[3].get<double>();
      s.fovs.push_back(r);
    }
    for (const auto& jt : js.at("tracks")) {
      TrackSummary t;
      t.id = jt.at("id").get<int>();
      t.label = jt.at("label").get<std::string>();
      t.mean = vec_from_json(jt.at("mean"));
      t.cov_trace = jt.at("trace").get<double>();
      s.tracks.push_back(std::move(t));
    }
    for (const auto& jm : js.at("map")) {
      MapEntrySummary m;
      m.id = jm.at("id").get<int>();
      m.x = jm.at("x").get<double>();
      m.y = jm.at("y").get<double>();
      m.radius = jm.at("radius").get<double>();
      m.cov_trace = jm.at("trace").get<double>();
      s.occlusion_map.push_back(m);
    }
    for (const auto& jp : js.at("plans")) {
      std::vector<Vec2> actions;
      for (std::size_t i = 0; i + 1 < jp.size(); i += 2)
        actions.emplace_back(jp[i].get<double>(), jp[i + 1].get<double>());
      s.plans.push_back(std::move(actions));
    }
    for (const auto& jd : js.at("detections"))
      s.detections.push_back(
          SooDetection{jd.at("soo").get<int>(), jd.at("agent").get<int>()});
    for (const auto& jc : js.at("sma_costs"))
      s.sma_costs.push_back(ImprovementRecord{jc.at("incumbent").get<double>(),
                                              jc.at("improved").get<double>()});
    trace.steps.push_back(std::move(s));
  }
  return trace;
}

}  // namespace mrtrack
