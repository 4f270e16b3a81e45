#pragma once

#include "mrtrack/behavior.hpp"
#include "mrtrack/simulation.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace mrtrack {

/// Ownership checkpoints {0, L/4, L/2, 3L/4, L}, each clamped to the last
/// step where the m-window still fits inside the trace.
std::vector<int> sankey_checkpoints(int duration_steps, int m);

/// Ownership-category flow table across checkpoints; column mass equals the
/// number of successful trials at every checkpoint.
struct SankeyExport {
  std::vector<int> checkpoints;
  // counts[c][category] for the five ProfileCategory values
  std::vector<std::array<int, 5>> node_counts;
  // flows[c][from][to]: trials moving between categories at consecutive
  // checkpoints
  std::vector<std::array<std::array<int, 5>, 5>> flows;
  int trials = 0;
};

SankeyExport build_sankey(const std::vector<TrialTrace>& traces,
                          const ScenarioConfig& scenario);

/// Per-OOI coverage time series averaged over trials. fov_count counts
/// agents whose footprint holds the true position (attempted observation);
/// visible_count counts 1-Ownership under the full visibility rule and is
/// one step shorter.
struct CoverageExport {
  std::vector<int> target_ids;
  std::vector<std::vector<double>> fov_count;      // [target][step]
  std::vector<std::vector<double>> visible_count;  // [target][step]
  std::vector<OcclusionAwareQuery> intervals;
};

CoverageExport build_coverage(const std::vector<TrialTrace>& traces,
                              const ScenarioConfig& scenario);

/// Per-trial behavioral events: SOO detections, Occlusion_Aware outcomes per
/// configured interval, and ownership handovers over the full run.
struct TrialEvents {
  std::uint64_t seed = 0;
  bool failed = false;
  struct Detection {
    int soo_index;
    int agent;
    int step;
  };
  std::vector<Detection> detections;
  struct OcclusionAwareOutcome {
    OcclusionAwareQuery query;
    bool occlusion_aware;
    bool had_detection_event;  // relevant SOO seen before the interval
  };
  std::vector<OcclusionAwareOutcome> occlusion_aware;
  struct Handover {
    int from_agent;
    int to_agent;
    int target;
    int k0;
    int span;
  };
  std::vector<Handover> handovers;
};

struct EventsExport {
  std::vector<TrialEvents> trials;
  OcclusionShareStats share_stats;  // over the scenario's share interval
};

EventsExport build_events(const std::vector<TrialTrace>& traces,
                          const ScenarioConfig& scenario);

nlohmann::json sankey_to_json(const SankeyExport& s);
std::string sankey_to_csv(const SankeyExport& s);
nlohmann::json coverage_to_json(const CoverageExport& c);
std::string coverage_to_csv(const CoverageExport& c);
nlohmann::json events_to_json(const EventsExport& e);

}  // namespace mrtrack
