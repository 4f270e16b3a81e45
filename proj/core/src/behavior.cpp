#include "mrtrack/behavior.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace mrtrack {

std::vector<OwnershipRecord> compute_m_ownership(
    const std::vector<VisibilityMatrix>& visibility, int m) {
  if (m < 1) throw std::invalid_argument("compute_m_ownership: m must be >= 1");
  const int K = static_cast<int>(visibility.size());
  if (K <= m) return {};

  const int agents = visibility.front().agents;
  const int objects = visibility.front().objects;
  if (objects > 32)
    throw std::invalid_argument("compute_m_ownership: more than 32 objects");

  std::vector<OwnershipRecord> out(K - m);
  for (int k = 0; k + m < K; ++k) {
    OwnershipRecord rec;
    rec.owned.assign(agents, 0u);
    for (int i = 0; i < agents; ++i) {
      for (int t = 0; t < objects; ++t) {
        bool owned = true;
        for (int h = 0; h <= m; ++h) {
          if (!visibility[k + h].at(i, t)) {
            owned = false;
            break;
          }
        }
        if (owned) rec.owned[i] |= 1u << t;
      }
    }
    out[k] = std::move(rec);
  }
  return out;
}

bool detect_ownership_change(const std::vector<OwnershipRecord>& ownership,
                             int i, int j, int t, int k0, int L) {
  const OwnershipRecord& before = ownership.at(k0);
  const OwnershipRecord& after = ownership.at(k0 + L);
  return before.owns(i, t) && !before.owns(j, t) && after.owns(j, t) &&
         !after.owns(i, t);
}

const char* profile_category_name(ProfileCategory c) {
  switch (c) {
    case ProfileCategory::InitialPattern: return "M0";
    case ProfileCategory::GoalPattern: return "M*";
    case ProfileCategory::MissOne: return "Miss1";
    case ProfileCategory::MissMany: return "Miss>1";
    case ProfileCategory::Other: return "other";
  }
  return "other";
}

namespace {

// Owned OOI ids per agent, restricted to the given columns.
std::vector<std::set<int>> owned_ids(const OwnershipRecord& record,
                                     const std::vector<int>& ooi_ids) {
  std::vector<std::set<int>> out(record.owned.size());
  for (std::size_t a = 0; a < record.owned.size(); ++a)
    for (std::size_t col = 0; col < ooi_ids.size(); ++col)
      if (record.owns(static_cast<int>(a), static_cast<int>(col)))
        out[a].insert(ooi_ids[col]);
  return out;
}

// Exact match up to a permutation of the agent indices.
bool matches_pattern(const std::vector<std::set<int>>& owned,
                     const OwnershipPattern& pattern) {
  if (pattern.size() != owned.size()) return false;
  std::vector<int> perm(owned.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end());
  do {
    bool ok = true;
    for (std::size_t a = 0; a < owned.size() && ok; ++a) {
      std::set<int> want(pattern[a].begin(), pattern[a].end());
      ok = owned[perm[a]] == want;
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

}  // namespace

ProfileCategory classify_ownership_profile(const OwnershipRecord& record,
                                           const OwnershipPattern& m0,
                                           const OwnershipPattern& goal,
                                           const std::vector<int>& ooi_ids) {
  const auto owned = owned_ids(record, ooi_ids);
  if (!goal.empty() && matches_pattern(owned, goal))
    return ProfileCategory::GoalPattern;
  if (!m0.empty() && matches_pattern(owned, m0))
    return ProfileCategory::InitialPattern;

  int unowned = 0;
  for (std::size_t col = 0; col < ooi_ids.size(); ++col) {
    bool anyone = false;
    for (std::size_t a = 0; a < record.owned.size(); ++a)
      anyone = anyone || record.owns(static_cast<int>(a), static_cast<int>(col));
    if (!anyone) ++unowned;
  }
  if (unowned == 0) return ProfileCategory::Other;
  if (unowned == 1) return ProfileCategory::MissOne;
  return ProfileCategory::MissMany;
}

bool detect_occlusion_aware(const TrialTrace& trace,
                            const std::vector<OwnershipRecord>& ownership,
                            const OcclusionAwareQuery& query) {
  const int begin = query.interval_begin();
  const int end = query.interval_end();
  const int last = static_cast<int>(trace.steps.size()) - 1;
  if (query.k0 < 0 || begin > end || query.k0 + query.length > last)
    throw std::invalid_argument("detect_occlusion_aware: interval outside trace");
  if (query.k0 + query.length >= static_cast<int>(ownership.size()))
    throw std::invalid_argument(
        "detect_occlusion_aware: ownership undefined at interval end");

  // Column of the queried target and the OOI columns for the emptiness test.
  int col = -1;
  std::vector<int> ooi_cols;
  for (int t = 0; t < trace.num_targets(); ++t) {
    if (trace.steps.front().targets[t].id == query.target) col = t;
    if (trace.steps.front().targets[t].cls == ObjectClass::Ooi)
      ooi_cols.push_back(t);
  }
  if (col < 0)
    throw std::invalid_argument("detect_occlusion_aware: unknown target id");

  // Precondition: the target really is occluded throughout the interval.
  for (int k = begin; k <= end; ++k) {
    const Vec2 pos = trace.steps[k].targets[col].position();
    bool inside = false;
    for (const auto& w : trace.occlusions) inside = inside || point_in_disc(pos, w);
    if (!inside)
      throw std::invalid_argument(
          "detect_occlusion_aware: target not occluded at step " + std::to_string(k));
  }

  const int n_agents = trace.num_agents();
  auto owns_any_ooi = [&](const OwnershipRecord& rec, int agent) {
    for (int c : ooi_cols)
      if (rec.owns(agent, c)) return true;
    return false;
  };

  // (1) somebody owns t entering the interval
  bool before = false;
  for (int a = 0; a < n_agents; ++a) before = before || ownership[query.k0].owns(a, col);
  if (!before) return false;

  // (2) nobody waits out the interval: empty ownership while holding t's true
  // position in the FoV at every step
  for (int a = 0; a < n_agents; ++a) {
    bool waiting = true;
    for (int k = begin; k <= end && waiting; ++k) {
      const bool fov_on_target =
          trace.steps[k].fovs[a].contains(trace.steps[k].targets[col].position());
      waiting = fov_on_target && !owns_any_ooi(ownership[k], a);
    }
    if (waiting) return false;
  }

  // (3) somebody owns t again after the interval
  bool after = false;
  for (int a = 0; a < n_agents; ++a)
    after = after || ownership[query.k0 + query.length].owns(a, col);
  return after;
}

OcclusionShareStats occlusion_share_stats(
    const std::vector<std::pair<bool, bool>>& trials) {
  OcclusionShareStats stats;
  stats.n_trials = static_cast<int>(trials.size());
  if (trials.empty()) return stats;

  int n_e = 0, n_oa = 0, n_both = 0;
  for (const auto& [had_e, oa] : trials) {
    n_e += had_e ? 1 : 0;
    n_oa += oa ? 1 : 0;
    n_both += (had_e && oa) ? 1 : 0;
  }
  stats.n_event_trials = n_e;
  stats.p_marginal = static_cast<double>(n_oa) / trials.size();
  if (n_e > 0) stats.p_cond = static_cast<double>(n_both) / n_e;
  return stats;
}

}  // namespace mrtrack
