#pragma once

#include "mrtrack/sensing.hpp"
#include "mrtrack/world.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mrtrack {

enum class TrackKind { Ooi, Soo };

/// Gaussian track state. OOI tracks carry (px, py, vx, vy); SOO tracks are
/// position-only. P is symmetrized after every update.
struct TrackEstimate {
  int id = 0;
  std::string label;
  TrackKind kind = TrackKind::Ooi;
  Eigen::VectorXd xi;
  Eigen::MatrixXd P;

  Vec2 position() const { return xi.head<2>(); }
};

/// Team estimate of the stationary occlusion objects. Entries are point
/// estimates; planners inflate each to a disc of fixed_radius.
struct DynamicOcclusionMap {
  std::vector<TrackEstimate> tracks;
  double fixed_radius = 1.0;

  std::vector<OcclusionObject> as_discs() const;
};

/// One agent's local estimation state.
struct FilterState {
  std::vector<TrackEstimate> ooi_tracks;
  DynamicOcclusionMap occlusion_map;
};

/// JPDA posterior association weights: beta(t, j) for track t and
/// observation j, beta0(t) for the miss hypothesis. Rows sum to 1.
struct AssociationResult {
  Eigen::MatrixXd beta;
  Eigen::VectorXd beta0;
};

struct SooUpdateParams {
  double gate_chi2 = 9.21;  // 99% for 2 d.o.f.
  Mat2 birth_cov = Mat2::Identity();
  int id_namespace = 0;  // births get id = namespace * kSooIdStride + counter
};

inline constexpr int kSooIdStride = 1'000'000;

struct CiParams {
  /// SOO entries closer than this after fusion refer to the same object and
  /// are merged.
  double merge_distance = 1.5;
};

/// NCV prediction of a track; SOO tracks use the static model (identity
/// transition, zero process noise).
TrackEstimate kf_predict(const TrackEstimate& track, double dt, double q);

/// Linear Kalman measurement update with H selecting position components.
/// Joseph-form covariance update, result symmetrized.
/// Throws on singular innovation covariance.
TrackEstimate kf_update(const TrackEstimate& track, const Vec2& z,
                        const Mat2& R);

/// Information-form batch update: P_post = (P_pred^-1 + sum H^T R^-1 H)^-1
/// with the posterior trace as the scalar cost. An empty observer list
/// returns P_pred unchanged. Throws when P_pred is not invertible.
std::pair<Eigen::MatrixXd, double> info_update_trace(
    const Eigen::MatrixXd& P_pred,
    const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& observers);

/// JPDA over one agent's observations of one semantic class. Weights come
/// from exhaustive enumeration of gated joint association events with
/// detection probability p_d and clutter density lambda. When no event has
/// positive probability every track coasts (beta0 = 1).
AssociationResult associate(const std::vector<TrackEstimate>& tracks,
                            const std::vector<Vec2>& zs,
                            const std::vector<Mat2>& Rs, double gate_chi2,
                            double p_d, double clutter_density);

/// Moment-matched posterior of the association mixture for one track. Equals
/// kf_update for a hard assignment and the prior when beta0 = 1.
TrackEstimate jpda_apply(const TrackEstimate& track,
                         const std::vector<Vec2>& zs,
                         const std::vector<Mat2>& Rs,
                         const Eigen::VectorXd& beta_row, double beta0);

/// Consensus-on-information fusion over all agents' states. OOI tracks must
/// share ids across agents (throws otherwise); SOO entries are fused per id
/// over the agents holding them, then near-coincident entries are merged.
FilterState ci_fuse(const std::vector<FilterState>& locals,
                    const std::vector<double>& weights,
                    const CiParams& params = {});

/// Update an agent's SOO map with its own SOO observations: gated
/// observations refine existing entries through the static-model Kalman
/// update, the rest spawn new entries. birth_counter is owned by the caller
/// and persists across steps.
DynamicOcclusionMap update_occlusion_map(const DynamicOcclusionMap& map,
                                         const std::vector<Observation>& obs,
                                         const AgentState& observer,
                                         const AgentSpec& spec,
                                         const SooUpdateParams& params,
                                         int& birth_counter);

/// Symmetrize and sanity-check a covariance. Throws std::runtime_error on
/// NaN or clearly negative diagonal.
void enforce_covariance(Eigen::MatrixXd& P, const char* context);

}  // namespace mrtrack
