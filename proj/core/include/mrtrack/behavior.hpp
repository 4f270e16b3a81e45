#pragma once

#include "mrtrack/sensing.hpp"
#include "mrtrack/trace.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace mrtrack {

/// m-Ownership at one time step: per agent, the bitmask of target indices
/// the agent sees at every step of the inclusive window [k, k+m].
struct OwnershipRecord {
  std::vector<std::uint32_t> owned;

  bool owns(int agent, int target) const {
    return (owned[agent] >> target) & 1u;
  }
  bool anyone_owns(int target) const {
    for (auto mask : owned)
      if ((mask >> target) & 1u) return true;
    return false;
  }
};

/// Ownership sequence for the steps where the m-window fits inside the
/// trace: result[k] is the ownership at step k, defined for
/// k = 0 .. len(visibility) - 1 - m (absent past that).
std::vector<OwnershipRecord> compute_m_ownership(
    const std::vector<VisibilityMatrix>& visibility, int m);

/// Ownership handover of target t from agent i to agent j across L steps:
/// i owns t (and j does not) at k0, j owns t (and i does not) at k0 + L.
bool detect_ownership_change(const std::vector<OwnershipRecord>& ownership,
                             int i, int j, int t, int k0, int L);

enum class ProfileCategory { InitialPattern, GoalPattern, MissOne, MissMany, Other };

/// A joint ownership pattern: per agent, the list of owned OOI ids. Pattern
/// matches accept any permutation of the agent indices.
using OwnershipPattern = std::vector<std::vector<int>>;

const char* profile_category_name(ProfileCategory c);

/// Categorize a joint ownership state for Sankey aggregation. Full coverage
/// matching the goal (resp. initial) pattern up to agent permutation maps to
/// GoalPattern (resp. InitialPattern); otherwise the number of OOIs owned by
/// nobody decides between MissOne, MissMany, and Other.
ProfileCategory classify_ownership_profile(const OwnershipRecord& record,
                                           const OwnershipPattern& m0,
                                           const OwnershipPattern& goal,
                                           const std::vector<int>& ooi_ids);

/// Occlusion interval queried for the Occlusion_Aware predicate: target t is
/// occluded throughout [k0 + h, k0 + length - h].
struct OcclusionAwareQuery {
  int target = 0;
  int k0 = 0;
  int h = 0;
  int length = 0;

  int interval_begin() const { return k0 + h; }
  int interval_end() const { return k0 + length - h; }
};

/// Occlusion_Aware predicate over a trace: (1) someone owns t entering the
/// interval, (2) no agent spends the whole interval with an empty ownership
/// set while keeping t's true position in its FoV, (3) someone owns t again
/// at k0 + length. Throws std::invalid_argument when t is not actually
/// occluded throughout the interval (misconfigured analysis, not a negative
/// detection).
bool detect_occlusion_aware(const TrialTrace& trace,
                            const std::vector<OwnershipRecord>& ownership,
                            const OcclusionAwareQuery& query);

struct OcclusionShareStats {
  std::optional<double> p_cond;  // absent when no trial had the event
  double p_marginal = 0.0;
  int n_event_trials = 0;
  int n_trials = 0;
};

/// Empirical probabilities behind the Occlusion_Share inequality from
/// per-trial pairs (had occlusion-detection event e, Occlusion_Aware held).
OcclusionShareStats occlusion_share_stats(
    const std::vector<std::pair<bool, bool>>& trials);

}  // namespace mrtrack
