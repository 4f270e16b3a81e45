#include "mrtrack/exporters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mrtrack {

using nlohmann::json;

std::vector<int> sankey_checkpoints(int duration_steps, int m) {
  // Ownership needs the full m-window inside the trace, so the nominal
  // checkpoints are clamped to the last step where it fits.
  const int last_defined = std::max(0, duration_steps - m);
  std::vector<int> cps{0, duration_steps / 4, duration_steps / 2,
                       3 * duration_steps / 4, duration_steps};
  for (int& c : cps) c = std::min(c, last_defined);
  return cps;
}

namespace {

constexpr int kNumCategories = 5;

int category_index(ProfileCategory c) { return static_cast<int>(c); }

const char* category_name(int idx) {
  return profile_category_name(static_cast<ProfileCategory>(idx));
}

}  // namespace

SankeyExport build_sankey(const std::vector<TrialTrace>& traces,
                          const ScenarioConfig& scenario) {
  SankeyExport out;
  out.checkpoints = sankey_checkpoints(scenario.duration_steps, scenario.ownership_m);
  const int C = static_cast<int>(out.checkpoints.size());
  out.node_counts.assign(C, {});
  out.flows.assign(C > 0 ? C - 1 : 0, {});

  for (const auto& trace : traces) {
    if (trace.failed || trace.steps.empty()) continue;
    const auto ownership =
        compute_m_ownership(trace.visibility_sequence(), scenario.ownership_m);
    const auto ids = trace.ooi_ids();

    std::vector<int> cat(C);
    for (int c = 0; c < C; ++c) {
      const int k = std::min(out.checkpoints[c],
                             static_cast<int>(ownership.size()) - 1);
      cat[c] = category_index(classify_ownership_profile(
          ownership.at(k), scenario.m0, scenario.goal, ids));
      out.node_counts[c][cat[c]] += 1;
    }
    for (int c = 0; c + 1 < C; ++c) out.flows[c][cat[c]][cat[c + 1]] += 1;
    out.trials += 1;
  }
  return out;
}

CoverageExport build_coverage(const std::vector<TrialTrace>& traces,
                              const ScenarioConfig& scenario) {
  CoverageExport out;
  out.intervals = scenario.analysis_intervals;

  const TrialTrace* first = nullptr;
  for (const auto& t : traces)
    if (!t.failed && !t.steps.empty()) {
      first = &t;
      break;
    }
  if (!first) return out;

  const int steps = static_cast<int>(first->steps.size());
  const int n_agents = first->num_agents();
  std::vector<int> ooi_cols;
  for (int t = 0; t < first->num_targets(); ++t)
    if (first->steps.front().targets[t].cls == ObjectClass::Ooi) {
      ooi_cols.push_back(t);
      out.target_ids.push_back(first->steps.front().targets[t].id);
    }

  out.fov_count.assign(ooi_cols.size(), std::vector<double>(steps, 0.0));
  out.visible_count.assign(ooi_cols.size(),
                           std::vector<double>(std::max(steps - 1, 0), 0.0));

  int used = 0;
  for (const auto& trace : traces) {
    if (trace.failed || static_cast<int>(trace.steps.size()) != steps) continue;
    ++used;
    const auto ownership = compute_m_ownership(trace.visibility_sequence(), 1);
    for (std::size_t ti = 0; ti < ooi_cols.size(); ++ti) {
      const int col = ooi_cols[ti];
      for (int k = 0; k < steps; ++k) {
        const Vec2 pos = trace.steps[k].targets[col].position();
        int n_fov = 0;
        for (int a = 0; a < n_agents; ++a)
          n_fov += trace.steps[k].fovs[a].contains(pos) ? 1 : 0;
        out.fov_count[ti][k] += n_fov;
      }
      for (int k = 0; k < static_cast<int>(ownership.size()); ++k) {
        int n_own = 0;
        for (int a = 0; a < n_agents; ++a)
          n_own += ownership[k].owns(a, col) ? 1 : 0;
        out.visible_count[ti][k] += n_own;
      }
    }
  }
  if (used > 0) {
    for (auto& series : out.fov_count)
      for (auto& v : series) v /= used;
    for (auto& series : out.visible_count)
      for (auto& v : series) v /= used;
  }
  return out;
}

EventsExport build_events(const std::vector<TrialTrace>& traces,
                          const ScenarioConfig& scenario) {
  EventsExport out;
  std::vector<std::pair<bool, bool>> share_pairs;

  for (const auto& trace : traces) {
    TrialEvents ev;
    ev.seed = trace.seed;
    ev.failed = trace.failed;
    if (trace.failed || trace.steps.empty()) {
      out.trials.push_back(std::move(ev));
      continue;
    }

    for (const auto& step : trace.steps)
      for (const auto& d : step.detections)
        ev.detections.push_back(TrialEvents::Detection{d.soo_index, d.agent, step.k});

    const auto ownership =
        compute_m_ownership(trace.visibility_sequence(), scenario.ownership_m);

    // Earliest team-wide sighting per true SOO.
    std::vector<int> first_seen(trace.occlusions.size(), -1);
    for (const auto& d : ev.detections)
      if (first_seen[d.soo_index] < 0 || d.step < first_seen[d.soo_index])
        first_seen[d.soo_index] = d.step;

    int col_of_target = -1;
    for (std::size_t qi = 0; qi < scenario.analysis_intervals.size(); ++qi) {
      const auto& q = scenario.analysis_intervals[qi];
      TrialEvents::OcclusionAwareOutcome outcome;
      outcome.query = q;
      outcome.occlusion_aware = detect_occlusion_aware(trace, ownership, q);

      // The event e concerns the disc hiding the target mid-interval; the
      // trial "had e" when that disc was sighted before the interval began.
      col_of_target = -1;
      for (int t = 0; t < trace.num_targets(); ++t)
        if (trace.steps.front().targets[t].id == q.target) col_of_target = t;
      const int mid = (q.interval_begin() + q.interval_end()) / 2;
      const Vec2 pos = trace.steps[mid].targets[col_of_target].position();
      int disc = -1;
      for (int w = 0; w < static_cast<int>(trace.occlusions.size()); ++w)
        if (point_in_disc(pos, trace.occlusions[w])) disc = w;
      outcome.had_detection_event =
          disc >= 0 && first_seen[disc] >= 0 && first_seen[disc] < q.interval_begin();
      ev.occlusion_aware.push_back(outcome);

      if (static_cast<int>(qi) == scenario.share_interval)
        share_pairs.emplace_back(outcome.had_detection_event, outcome.occlusion_aware);
    }

    // Full-run ownership handovers over every (agent, agent, target) triple.
    if (!ownership.empty()) {
      const int span = static_cast<int>(ownership.size()) - 1;
      const int n_agents = trace.num_agents();
      for (int t = 0; t < trace.num_targets(); ++t) {
        if (trace.steps.front().targets[t].cls != ObjectClass::Ooi) continue;
        for (int i = 0; i < n_agents; ++i)
          for (int j = 0; j < n_agents; ++j) {
            if (i == j) continue;
            if (detect_ownership_change(ownership, i, j, t, 0, span))
              ev.handovers.push_back(TrialEvents::Handover{
                  i, j, trace.steps.front().targets[t].id, 0, span});
          }
      }
    }
    out.trials.push_back(std::move(ev));
  }

  out.share_stats = occlusion_share_stats(share_pairs);
  return out;
}

json sankey_to_json(const SankeyExport& s) {
  json j;
  j["checkpoints"] = s.checkpoints;
  j["trials"] = s.trials;
  json cats = json::array();
  for (int c = 0; c < kNumCategories; ++c) cats.push_back(category_name(c));
  j["categories"] = cats;

  j["nodes"] = json::array();
  for (std::size_t c = 0; c < s.node_counts.size(); ++c)
    for (int cat = 0; cat < kNumCategories; ++cat)
      if (s.node_counts[c][cat] > 0)
        j["nodes"].push_back({{"checkpoint", s.checkpoints[c]},
                              {"category", category_name(cat)},
                              {"count", s.node_counts[c][cat]}});

  j["flows"] = json::array();
  for (std::size_t c = 0; c < s.flows.size(); ++c)
    for (int a = 0; a < kNumCategories; ++a)
      for (int b = 0; b < kNumCategories; ++b)
        if (s.flows[c][a][b] > 0)
          j["flows"].push_back(
              {{"source", "k" + std::to_string(s.checkpoints[c]) + ":" + category_name(a)},
               {"target", "k" + std::to_string(s.checkpoints[c + 1]) + ":" + category_name(b)},
               {"value", s.flows[c][a][b]}});
  return j;
}

std::string sankey_to_csv(const SankeyExport& s) {
  std::ostringstream os;
  os << "source,target,value\n";
  for (std::size_t c = 0; c < s.flows.size(); ++c)
    for (int a = 0; a < kNumCategories; ++a)
      for (int b = 0; b < kNumCategories; ++b)
        if (s.flows[c][a][b] > 0)
          os << "k" << s.checkpoints[c] << ":" << category_name(a) << ",k"
             << s.checkpoints[c + 1] << ":" << category_name(b) << ","
             << s.flows[c][a][b] << "\n";
  return os.str();
}

json coverage_to_json(const CoverageExport& c) {
  json j;
  j["target_ids"] = c.target_ids;
  j["fov_count"] = c.fov_count;
  j["visible_count"] = c.visible_count;
  j["intervals"] = json::array();
  for (const auto& q : c.intervals)
    j["intervals"].push_back({{"target", q.target},
                              {"begin", q.interval_begin()},
                              {"end", q.interval_end()}});
  return j;
}

std::string coverage_to_csv(const CoverageExport& c) {
  std::ostringstream os;
  os << "target_id,step,fov_mean,visible_mean\n";
  for (std::size_t ti = 0; ti < c.target_ids.size(); ++ti) {
    for (std::size_t k = 0; k < c.fov_count[ti].size(); ++k) {
      os << c.target_ids[ti] << "," << k << "," << c.fov_count[ti][k] << ",";
      if (k < c.visible_count[ti].size()) os << c.visible_count[ti][k];
      os << "\n";
    }
  }
  return os.str();
}

json events_to_json(const EventsExport& e) {
  json j;
  j["trials"] = json::array();
  for (const auto& t : e.trials) {
    json jt;
    jt["seed"] = t.seed;
    jt["failed"] = t.failed;
    jt["detections"] = json::array();
    for (const auto& d : t.detections)
      jt["detections"].push_back(
          {{"soo", d.soo_index}, {"agent", d.agent}, {"step", d.step}});
    jt["occlusion_aware"] = json::array();
    for (const auto& oa : t.occlusion_aware)
      jt["occlusion_aware"].push_back({{"target", oa.query.target},
                                       {"begin", oa.query.interval_begin()},
                                       {"end", oa.query.interval_end()},
                                       {"occlusion_aware", oa.occlusion_aware},
                                       {"had_detection_event", oa.had_detection_event}});
    jt["handovers"] = json::array();
    for (const auto& h : t.handovers)
      jt["handovers"].push_back({{"from_agent", h.from_agent},
                                 {"to_agent", h.to_agent},
                                 {"target", h.target},
                                 {"k0", h.k0},
                                 {"span", h.span}});
    j["trials"].push_back(std::move(jt));
  }
  j["share_stats"] = {{"n_trials", e.share_stats.n_trials},
                      {"n_event_trials", e.share_stats.n_event_trials},
                      {"p_marginal", e.share_stats.p_marginal}};
  if (e.share_stats.p_cond)
    j["share_stats"]["p_cond"] = *e.share_stats.p_cond;
  return j;
}

}  // namespace mrtrack
