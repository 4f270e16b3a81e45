#include "mrtrack/tracking.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace mrtrack {

namespace {

Eigen::MatrixXd position_selector(int dim) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, dim);
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  return H;
}

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& M, const char* context) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string(context) + ": matrix not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(M.rows(), M.cols()));
}

double gaussian_density2(const Vec2& nu, const Mat2& S, const char* context) {
  Eigen::LLT<Mat2> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string(context) + ": singular innovation covariance");
  const Vec2 w = llt.solve(nu);
  const double md2 = nu.dot(w);
  const Mat2 L = llt.matrixL();
  const double sqrt_det = L(0, 0) * L(1, 1);
  return std::exp(-0.5 * md2) / (2.0 * M_PI * sqrt_det);
}

double mahalanobis2(const Vec2& nu, const Mat2& S, const char* context) {
  Eigen::LLT<Mat2> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string(context) + ": singular innovation covariance");
  return nu.dot(llt.solve(nu));
}

}  // namespace

void enforce_covariance(Eigen::MatrixXd& P, const char* context) {
  P = 0.5 * (P + P.transpose()).eval();
  if (!P.allFinite())
    throw std::runtime_error(std::string(context) + ": covariance not finite");
  for (int i = 0; i < P.rows(); ++i)
    if (P(i, i) < -1e-9)
      throw std::runtime_error(std::string(context) + ": negative variance");
}

std::vector<OcclusionObject> DynamicOcclusionMap::as_discs() const {
  std::vector<OcclusionObject> discs;
  discs.reserve(tracks.size());
  for (const auto& t : tracks)
    discs.push_back(OcclusionObject{t.xi(0), t.xi(1), fixed_radius, t.label});
  return discs;
}

TrackEstimate kf_predict(const TrackEstimate& track, double dt, double q) {
  if (dt <= 0.0) throw std::invalid_argument("kf_predict: dt must be positive");
  if (track.kind == TrackKind::Soo) return track;  // F = I, Q = 0

  const Mat4 F = ncv_transition(dt);
  const Mat4 Q = ncv_process_noise(q, dt);
  TrackEstimate out = track;
  out.xi = F * track.xi;
  out.P = F * track.P * F.transpose() + Q;
  enforce_covariance(out.P, "kf_predict");
  return out;
}

TrackEstimate kf_update(const TrackEstimate& track, const Vec2& z,
                        const Mat2& R) {
  const int dim = static_cast<int>(track.xi.size());
  const Eigen::MatrixXd H = position_selector(dim);
  const Mat2 S = (H * track.P * H.transpose() + R).eval();
  Eigen::LLT<Mat2> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("kf_update: singular innovation covariance");

  const Eigen::MatrixXd K = track.P * H.transpose() * llt.solve(Mat2::Identity());
  const Vec2 nu = z - H * track.xi;

  TrackEstimate out = track;
  out.xi = track.xi + K * nu;
  const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(dim, dim) - K * H;
  out.P = IKH * track.P * IKH.transpose() + K * R * K.transpose();
  enforce_covariance(out.P, "kf_update");
  return out;
}

std::pair<Eigen::MatrixXd, double> info_update_trace(
    const Eigen::MatrixXd& P_pred,
    const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& observers) {
  if (observers.empty()) return {P_pred, P_pred.trace()};

  Eigen::MatrixXd info = inverse_spd(P_pred, "info_update_trace");
  for (const auto& [H, R] : observers)
    info += H.transpose() * inverse_spd(R, "info_update_trace") * H;
  Eigen::MatrixXd P_post = inverse_spd(info, "info_update_trace");
  enforce_covariance(P_post, "info_update_trace");
  return {P_post, P_post.trace()};
}

AssociationResult associate(const std::vector<TrackEstimate>& tracks,
                            const std::vector<Vec2>& zs,
                            const std::vector<Mat2>& Rs, double gate_chi2,
                            double p_d, double clutter_density) {
  const int T = static_cast<int>(tracks.size());
  const int M = static_cast<int>(zs.size());

  AssociationResult result;
  result.beta = Eigen::MatrixXd::Zero(T, std::max(M, 1));
  result.beta0 = Eigen::VectorXd::Zero(T);

  // Per-pair gated likelihoods. S depends on the observation through R.
  Eigen::MatrixXd lik = Eigen::MatrixXd::Zero(T, std::max(M, 1));
  std::vector<std::vector<int>> gated(T);
  for (int t = 0; t < T; ++t) {
    const Eigen::MatrixXd H = position_selector(static_cast<int>(tracks[t].xi.size()));
    const Vec2 zhat = H * tracks[t].xi;
    const Mat2 PH = (H * tracks[t].P * H.transpose()).eval();
    for (int j = 0; j < M; ++j) {
      const Mat2 S = PH + Rs[j];
      const Vec2 nu = zs[j] - zhat;
      if (mahalanobis2(nu, S, "associate") <= gate_chi2) {
        gated[t].push_back(j);
        lik(t, j) = gaussian_density2(nu, S, "associate");
      }
    }
  }

  // Exhaustive enumeration of joint association events: each track takes the
  // miss hypothesis or an unused gated observation; leftover observations are
  // clutter. Event weight:
  //   prod assigned p_d * N(z; zhat, S) * prod missed (1 - p_d) * lambda^#clutter
  Eigen::MatrixXd beta_acc = Eigen::MatrixXd::Zero(T, std::max(M, 1));
  Eigen::VectorXd beta0_acc = Eigen::VectorXd::Zero(T);
  double total = 0.0;

  std::vector<int> assignment(T, -1);
  std::vector<bool> used(M, false);

  auto clutter_pow = [&](int n) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= clutter_density;
    return p;
  };

  auto record = [&](double w) {
    total += w;
    for (int t = 0; t < T; ++t) {
      if (assignment[t] < 0)
        beta0_acc(t) += w;
      else
        beta_acc(t, assignment[t]) += w;
    }
  };

  auto recurse = [&](auto&& self, int t, double w, int assigned) -> void {
    if (w == 0.0) return;
    if (t == T) {
      record(w * clutter_pow(M - assigned));
      return;
    }
    assignment[t] = -1;
    self(self, t + 1, w * (1.0 - p_d), assigned);
    for (int j : gated[t]) {
      if (used[j]) continue;
      used[j] = true;
      assignment[t] = j;
      self(self, t + 1, w * p_d * lik(t, j), assigned + 1);
      used[j] = false;
    }
    assignment[t] = -1;
  };
  recurse(recurse, 0, 1.0, 0);

  if (total > 0.0) {
    result.beta = beta_acc / total;
    result.beta0 = beta0_acc / total;
  } else {
    // No event has positive probability (e.g. p_d = 1 with no gated match):
    // every track coasts.
    result.beta0.setOnes();
  }
  return result;
}

TrackEstimate jpda_apply(const TrackEstimate& track,
                         const std::vector<Vec2>& zs,
                         const std::vector<Mat2>& Rs,
                         const Eigen::VectorXd& beta_row, double beta0) {
  if (beta0 >= 1.0 - 1e-12) return track;

  // Moment match the association mixture: miss keeps the prior, each gated
  // observation contributes its own Kalman posterior. Reduces to kf_update
  // for a hard assignment.
  const int dim = static_cast<int>(track.xi.size());
  Eigen::VectorXd mean = beta0 * track.xi;
  std::vector<std::pair<double, TrackEstimate>> hypos;
  for (int j = 0; j < beta_row.size(); ++j) {
    if (beta_row(j) <= 0.0) continue;
    hypos.emplace_back(beta_row(j), kf_update(track, zs[j], Rs[j]));
    mean += beta_row(j) * hypos.back().second.xi;
  }

  Eigen::MatrixXd P = beta0 * (track.P + (track.xi - mean) * (track.xi - mean).transpose());
  for (const auto& [w, hyp] : hypos) {
    const Eigen::VectorXd d = hyp.xi - mean;
    P += w * (hyp.P + d * d.transpose());
  }

  TrackEstimate out = track;
  out.xi = std::move(mean);
  out.P = P.topLeftCorner(dim, dim);
  enforce_covariance(out.P, "jpda_apply");
  return out;
}

namespace {

TrackEstimate fuse_tracks(const std::vector<const TrackEstimate*>& members,
                          const std::vector<double>& weights) {
  const int dim = static_cast<int>(members.front()->xi.size());
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(dim);
  for (std::size_t m = 0; m < members.size(); ++m) {
    const Eigen::MatrixXd info = inverse_spd(members[m]->P, "ci_fuse");
    omega += weights[m] * info;
    q += weights[m] * (info * members[m]->xi);
  }
  TrackEstimate out = *members.front();
  out.P = inverse_spd(omega, "ci_fuse");
  out.xi = out.P * q;
  enforce_covariance(out.P, "ci_fuse");
  return out;
}

}  // namespace

FilterState ci_fuse(const std::vector<FilterState>& locals,
                    const std::vector<double>& weights,
                    const CiParams& params) {
  if (locals.empty()) throw std::invalid_argument("ci_fuse: no inputs");
  if (locals.size() != weights.size())
    throw std::invalid_argument("ci_fuse: weight count mismatch");
  const int N = static_cast<int>(locals.size());

  FilterState fused;

  // OOI tracks: ids must agree across all agents.
  const auto& ref = locals.front().ooi_tracks;
  for (const auto& fs : locals) {
    if (fs.ooi_tracks.size() != ref.size())
      throw std::invalid_argument("ci_fuse: OOI track id mismatch");
    for (std::size_t k = 0; k < ref.size(); ++k)
      if (fs.ooi_tracks[k].id != ref[k].id)
        throw std::invalid_argument("ci_fuse: OOI track id mismatch");
  }
  for (std::size_t k = 0; k < ref.size(); ++k) {
    std::vector<const TrackEstimate*> members;
    for (const auto& fs : locals) members.push_back(&fs.ooi_tracks[k]);
    fused.ooi_tracks.push_back(fuse_tracks(members, weights));
  }

  // SOO map: fuse per id over the agents holding the entry, weights
  // renormalized. An entry held by one agent passes through unchanged, which
  // matches spawning it in the other agents before fusing.
  fused.occlusion_map.fixed_radius = locals.front().occlusion_map.fixed_radius;
  std::map<int, std::vector<std::pair<const TrackEstimate*, double>>> by_id;
  for (int a = 0; a < N; ++a)
    for (const auto& t : locals[a].occlusion_map.tracks)
      by_id[t.id].emplace_back(&t, weights[a]);

  std::vector<TrackEstimate> soo;
  for (auto& [id, holders] : by_id) {
    double wsum = 0.0;
    for (auto& [_, w] : holders) wsum += w;
    std::vector<const TrackEstimate*> members;
    std::vector<double> ws;
    for (auto& [ptr, w] : holders) {
      members.push_back(ptr);
      ws.push_back(wsum > 0.0 ? w / wsum : 1.0 / holders.size());
    }
    soo.push_back(fuse_tracks(members, ws));
  }

  // Merge entries born independently for the same physical object.
  std::vector<bool> absorbed(soo.size(), false);
  for (std::size_t a = 0; a < soo.size(); ++a) {
    if (absorbed[a]) continue;
    for (std::size_t b = a + 1; b < soo.size(); ++b) {
      if (absorbed[b]) continue;
      if ((soo[a].position() - soo[b].position()).norm() < params.merge_distance) {
        std::vector<const TrackEstimate*> pair_members{&soo[a], &soo[b]};
        std::vector<double> half{0.5, 0.5};
        TrackEstimate merged = fuse_tracks(pair_members, half);
        merged.id = std::min(soo[a].id, soo[b].id);
        soo[a] = std::move(merged);
        absorbed[b] = true;
      }
    }
  }
  for (std::size_t a = 0; a < soo.size(); ++a)
    if (!absorbed[a]) fused.occlusion_map.tracks.push_back(soo[a]);

  return fused;
}

DynamicOcclusionMap update_occlusion_map(const DynamicOcclusionMap& map,
                                         const std::vector<Observation>& obs,
                                         const AgentState& observer,
                                         const AgentSpec& spec,
                                         const SooUpdateParams& params,
                                         int& birth_counter) {
  DynamicOcclusionMap out = map;
  for (const auto& o : obs) {
    if (o.cls != ObjectClass::Soo) continue;
    const auto [d, rho] = bearing_distance(observer, o.z);
    const Mat2 R = measurement_covariance(d, rho, spec.alpha);

    int best = -1;
    double best_md2 = params.gate_chi2;
    for (int k = 0; k < static_cast<int>(out.tracks.size()); ++k) {
      const Mat2 S = Mat2(out.tracks[k].P) + R;
      const Vec2 nu = o.z - out.tracks[k].position();
      const double md2 = mahalanobis2(nu, S, "update_occlusion_map");
      if (md2 <= best_md2) {
        best_md2 = md2;
        best = k;
      }
    }

    if (best >= 0) {
      out.tracks[best] = kf_update(out.tracks[best], o.z, R);
    } else {
      TrackEstimate born;
      born.id = params.id_namespace * kSooIdStride + birth_counter++;
      born.label = o.label;
      born.kind = TrackKind::Soo;
      born.xi = o.z;
      born.P = params.birth_cov;
      out.tracks.push_back(std::move(born));
    }
  }
  return out;
}

}  // namespace mrtrack
