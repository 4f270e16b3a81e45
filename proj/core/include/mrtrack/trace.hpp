#pragma once

#include "mrtrack/planning.hpp"
#include "mrtrack/sensing.hpp"
#include "mrtrack/world.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mrtrack {

/// Compact per-track record kept in traces.
struct TrackSummary {
  int id = 0;
  std::string label;
  Eigen::VectorXd mean;
  double cov_trace = 0.0;
};

/// One estimated SOO entry as recorded per step.
struct MapEntrySummary {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
  double cov_trace = 0.0;
};

/// First sighting of a true SOO by an agent (w entered the agent's FoV).
struct SooDetection {
  int soo_index = 0;
  int agent = 0;
};

/// Joint cost before/after one agent's sequential improvement step.
struct ImprovementRecord {
  double incumbent = 0.0;
  double improved = 0.0;
};

struct StepRecord {
  int k = 0;
  std::vector<AgentState> agents;
  std::vector<TargetTruth> targets;
  VisibilityMatrix visibility;
  std::vector<Region> fovs;
  std::vector<TrackSummary> tracks;          // fused OOI estimates
  std::vector<MapEntrySummary> occlusion_map;
  std::vector<std::vector<Vec2>> plans;      // per agent; empty at final step
  std::vector<SooDetection> detections;      // first detections at this step
  std::vector<ImprovementRecord> sma_costs;  // per agent, SMA runs only
};

/// Full record of one trial: everything the behavior detectors and exporters
/// need, replayable byte-for-byte from (scenario, run, seed).
struct TrialTrace {
  std::string scenario;
  std::uint64_t seed = 0;
  double dt = 0.0;
  bool failed = false;
  std::string error;
  std::vector<OcclusionObject> occlusions;  // ground-truth W, static
  std::vector<StepRecord> steps;            // length L+1 when not failed

  int num_agents() const {
    return steps.empty() ? 0 : static_cast<int>(steps.front().agents.size());
  }
  int num_targets() const {
    return steps.empty() ? 0 : static_cast<int>(steps.front().targets.size());
  }
  /// Ids of OOI-class targets, in target order.
  std::vector<int> ooi_ids() const;
  /// Sequence of per-step visibility matrices.
  std::vector<VisibilityMatrix> visibility_sequence() const;
};

}  // namespace mrtrack
