#pragma once

#include "mrtrack/scenario.hpp"
#include "mrtrack/trace.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mrtrack {

/// Numerical failure inside a trial (singular matrix and friends).
struct TrialError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Execute one seeded trial of the full sensing-estimation-planning loop.
/// Throws TrialError on numerical failure.
TrialTrace run_trial(const ScenarioConfig& scenario, const RunConfig& run,
                     std::uint64_t trial_seed);

struct BatchResult {
  ScenarioConfig scenario;
  RunConfig run;
  std::vector<TrialTrace> traces;  // trial i used seed base_seed + i

  int successful() const {
    int n = 0;
    for (const auto& t : traces) n += t.failed ? 0 : 1;
    return n;
  }
};

/// Independent trials with seeds base_seed + i, run in parallel. Per-trial
/// failures are recorded on the trace and do not abort the batch.
BatchResult run_batch(const ScenarioConfig& scenario, const RunConfig& run);

nlohmann::json trace_to_json(const TrialTrace& trace);
TrialTrace trace_from_json(const nlohmann::json& j);

}  // namespace mrtrack
