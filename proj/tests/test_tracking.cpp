#include "mrtrack/tracking.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mrtrack;

TEST_SUITE_BEGIN("tracking");

namespace {

TrackEstimate make_ooi(int id, const Vec4& xi, const Mat4& P) {
  TrackEstimate t;
  t.id = id;
  t.label = "target";
  t.kind = TrackKind::Ooi;
  t.xi = xi;
  t.P = P;
  return t;
}

Mat4 random_spd4(std::mt19937_64& rng, double ridge = 0.1) {
  std::normal_distribution<double> n;
  Mat4 A;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) A(i, j) = n(rng);
  return A * A.transpose() + ridge * Mat4::Identity();
}

Mat2 random_spd2(std::mt19937_64& rng, double ridge = 0.05) {
  std::normal_distribution<double> n;
  Mat2 A;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) A(i, j) = n(rng);
  return A * A.transpose() + ridge * Mat2::Identity();
}

}  // namespace

TEST_CASE("kf_predict deterministic propagation") {
  const TrackEstimate t = make_ooi(0, Vec4(0, 0, 1, 0), Mat4::Identity());
  const TrackEstimate out = kf_predict(t, 1.0, 0.0);
  CHECK(out.xi(0) == doctest::Approx(1.0));
  CHECK(out.xi(2) == doctest::Approx(1.0));
  const Mat4 F = ncv_transition(1.0);
  CHECK((Mat4(out.P) - F * F.transpose()).norm() == doctest::Approx(0.0));
}

TEST_CASE("kf_predict leaves SOO tracks untouched") {
  TrackEstimate t;
  t.kind = TrackKind::Soo;
  t.xi = Vec2(3.0, 4.0);
  t.P = 2.0 * Mat2::Identity();
  const TrackEstimate out = kf_predict(t, 0.5, 1.0);
  CHECK((out.xi - t.xi).norm() == 0.0);
  CHECK((out.P - t.P).norm() == 0.0);
}

TEST_CASE("kf_predict matches a hand-multiplied dense oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat4 P = random_spd4(rng);
    const TrackEstimate t = make_ooi(0, Vec4(1, 2, -1, 0.5), P);
    const double dt = 0.5;
    const double q = 0.3;
    const TrackEstimate out = kf_predict(t, dt, q);

    // element-wise triple product, no Eigen expressions
    const Mat4 F = ncv_transition(dt);
    const Mat4 Q = ncv_process_noise(q, dt);
    Mat4 expect = Mat4::Zero();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double acc = 0.0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) acc += F(i, a) * P(a, b) * F(j, b);
        expect(i, j) = acc + Q(i, j);
      }
    CHECK((Mat4(out.P) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("kf_update with an uninformative measurement keeps the prior") {
  const TrackEstimate t = make_ooi(0, Vec4(1, 2, 0, 0), Mat4::Identity());
  const TrackEstimate out = kf_update(t, Vec2(5.0, -3.0), 1e12 * Mat2::Identity());
  CHECK((out.xi - t.xi).norm() < 1e-6);
  CHECK((Mat4(out.P) - Mat4(t.P)).norm() < 1e-6);
}

TEST_CASE("kf_update symmetric unit case halves position covariance") {
  const TrackEstimate t = make_ooi(0, Vec4(1, 2, 0, 0), Mat4::Identity());
  const TrackEstimate out = kf_update(t, Vec2(1.0, 2.0), Mat2::Identity());
  CHECK((out.xi - t.xi).norm() < 1e-12);
  CHECK(out.P(0, 0) == doctest::Approx(0.5));
  CHECK(out.P(1, 1) == doctest::Approx(0.5));
  CHECK(out.P(2, 2) == doctest::Approx(1.0));
  CHECK(out.P(3, 3) == doctest::Approx(1.0));
}

TEST_CASE("kf_update never grows the trace") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat4 P = random_spd4(rng);
    const TrackEstimate t = make_ooi(0, Vec4::Zero(), P);
    const TrackEstimate out = kf_update(t, Vec2(0.3, -0.2), random_spd2(rng));
    CHECK(out.P.trace() <= t.P.trace() + 1e-12);
    CHECK((Mat4(out.P) - Mat4(out.P).transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("info_update_trace with no observers returns the prediction") {
  std::mt19937_64 rng(41);
  const Mat4 P = random_spd4(rng);
  const auto [post, cost] = info_update_trace(P, {});
  CHECK((post - P).norm() == 0.0);
  CHECK(cost == doctest::Approx(P.trace()));
}

TEST_CASE("two identical observers beat one") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat4 P = random_spd4(rng);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 4);
    H(0, 0) = H(1, 1) = 1.0;
    const Mat2 R = random_spd2(rng);
    const auto [p1, c1] = info_update_trace(P, {{H, R}});
    const auto [p2, c2] = info_update_trace(P, {{H, R}, {H, R}});
    CHECK(c2 < c1);
    CHECK(c1 < P.trace());
  }
}

TEST_CASE("information form equals the Kalman update") {
  std::mt19937_64 rng(47);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 4);
  H(0, 0) = H(1, 1) = 1.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Mat4 P = random_spd4(rng);
    const Mat2 R = random_spd2(rng);
    const TrackEstimate t = make_ooi(0, Vec4::Zero(), P);
    const TrackEstimate kf = kf_update(t, Vec2::Zero(), R);
    const auto [info_post, cost] = info_update_trace(P, {{H, R}});
    CHECK((info_post - Mat4(kf.P)).norm() < 1e-9);
    CHECK(cost == doctest::Approx(kf.P.trace()).epsilon(1e-9));
  }
}

TEST_CASE("info_update_trace is permutation invariant") {
  std::mt19937_64 rng(53);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 4);
  H(0, 0) = H(1, 1) = 1.0;
  const Mat4 P = random_spd4(rng);
  const Mat2 R1 = random_spd2(rng);
  const Mat2 R2 = random_spd2(rng);
  const auto [a, ca] = info_update_trace(P, {{H, R1}, {H, R2}});
  const auto [b, cb] = info_update_trace(P, {{H, R2}, {H, R1}});
  CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("info_update_trace rejects a singular prediction") {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 4);
  H(0, 0) = H(1, 1) = 1.0;
  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(4, 4);
  CHECK_THROWS(info_update_trace(singular, {{H, Mat2::Identity()}}));
}

// ---------------------------------------------------------------------------
// JPDA

namespace {

double oracle_pdf(const Vec2& nu, const Mat2& S) {
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  const Mat2 inv = (Mat2() << S(1, 1), -S(0, 1), -S(1, 0), S(0, 0)).finished() / det;
  const double md2 = nu.dot(inv * nu);
  return std::exp(-0.5 * md2) / (2.0 * M_PI * std::sqrt(det));
}

// Mixed-radix enumeration over every assignment tuple, independent of the
// implementation's recursive search.
AssociationResult oracle_associate(const std::vector<TrackEstimate>& tracks,
                                   const std::vector<Vec2>& zs,
                                   const std::vector<Mat2>& Rs, double gate,
                                   double p_d, double lambda) {
  const int T = static_cast<int>(tracks.size());
  const int M = static_cast<int>(zs.size());
  AssociationResult out;
  out.beta = Eigen::MatrixXd::Zero(T, std::max(M, 1));
  out.beta0 = Eigen::VectorXd::Zero(T);

  std::vector<int> a(T, -1);
  double total = 0.0;
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(T, std::max(M, 1));
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(T);

  auto gated_pdf = [&](int t, int j) -> double {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, tracks[t].xi.size());
    H(0, 0) = H(1, 1) = 1.0;
    const Mat2 S = Mat2(H * tracks[t].P * H.transpose()) + Rs[j];
    const Vec2 nu = zs[j] - Vec2(H * tracks[t].xi);
    const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
    const Mat2 inv = (Mat2() << S(1, 1), -S(0, 1), -S(1, 0), S(0, 0)).finished() / det;
    if (nu.dot(inv * nu) > gate) return -1.0;
    return oracle_pdf(nu, S);
  };

  for (long long code = 0; code < static_cast<long long>(std::pow(M + 1, T)); ++code) {
    long long c = code;
    bool valid = true;
    std::vector<bool> used(M, false);
    double w = 1.0;
    int assigned = 0;
    for (int t = 0; t < T && valid; ++t) {
      const int choice = static_cast<int>(c % (M + 1)) - 1;
      c /= (M + 1);
      a[t] = choice;
      if (choice < 0) {
        w *= 1.0 - p_d;
        continue;
      }
      if (used[choice]) {
        valid = false;
        break;
      }
      used[choice] = true;
      const double pdf = gated_pdf(t, choice);
      if (pdf < 0.0) {
        valid = false;
        break;
      }
      w *= p_d * pdf;
      ++assigned;
    }
    if (!valid) continue;
    for (int u = 0; u < M - assigned; ++u) w *= lambda;
    total += w;
    for (int t = 0; t < T; ++t) {
      if (a[t] < 0)
        beta0(t) += w;
      else
        beta(t, a[t]) += w;
    }
  }

  if (total > 0.0) {
    out.beta = beta / total;
    out.beta0 = beta0 / total;
  } else {
    out.beta0.setOnes();
  }
  return out;
}

}  // namespace

TEST_CASE("single gated observation is fully associated") {
  const TrackEstimate t = make_ooi(0, Vec4(0, 0, 0, 0), Mat4::Identity());
  const AssociationResult r =
      associate({t}, {Vec2(0.1, -0.1)}, {0.1 * Mat2::Identity()}, 9.21, 1.0, 0.0);
  CHECK(r.beta(0, 0) == doctest::Approx(1.0));
  CHECK(r.beta0(0) == doctest::Approx(0.0));
}

TEST_CASE("no observation means coasting") {
  const TrackEstimate t = make_ooi(0, Vec4::Zero(), Mat4::Identity());
  const AssociationResult r = associate({t}, {}, {}, 9.21, 1.0, 0.0);
  CHECK(r.beta0(0) == doctest::Approx(1.0));
}

TEST_CASE("far observation outside the gate leaves the track coasting") {
  const TrackEstimate t = make_ooi(0, Vec4::Zero(), Mat4::Identity());
  const AssociationResult r =
      associate({t}, {Vec2(50.0, 50.0)}, {0.1 * Mat2::Identity()}, 9.21, 1.0, 0.0);
  CHECK(r.beta0(0) == doctest::Approx(1.0));
}

TEST_CASE("association weights match exhaustive enumeration") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> up(-3.0, 3.0);
  std::uniform_int_distribution<int> un(1, 3);
  std::uniform_real_distribution<double> upd(0.5, 1.0);
  std::uniform_real_distribution<double> ul(0.0, 0.05);

  for (int trial = 0; trial < 300; ++trial) {
    const int T = un(rng);
    const int M = un(rng);
    std::vector<TrackEstimate> tracks;
    for (int t = 0; t < T; ++t)
      tracks.push_back(make_ooi(t, Vec4(up(rng), up(rng), 0, 0), random_spd4(rng)));
    std::vector<Vec2> zs;
    std::vector<Mat2> Rs;
    for (int j = 0; j < M; ++j) {
      zs.emplace_back(up(rng), up(rng));
      Rs.push_back(random_spd2(rng));
    }
    const double p_d = trial % 3 == 0 ? 1.0 : upd(rng);
    const double lambda = trial % 2 == 0 ? 0.0 : ul(rng);

    const AssociationResult got = associate(tracks, zs, Rs, 9.21, p_d, lambda);
    const AssociationResult want = oracle_associate(tracks, zs, Rs, 9.21, p_d, lambda);
    REQUIRE((got.beta - want.beta).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE((got.beta0 - want.beta0).cwiseAbs().maxCoeff() < 1e-9);
    for (int t = 0; t < T; ++t)
      REQUIRE(got.beta.row(t).sum() + got.beta0(t) == doctest::Approx(1.0));
  }
}

TEST_CASE("jpda_apply reduces to kf_update on hard assignment") {
  std::mt19937_64 rng(71);
  const Mat4 P = random_spd4(rng);
  const TrackEstimate t = make_ooi(0, Vec4(1, 1, 0, 0), P);
  const Vec2 z(1.2, 0.9);
  const Mat2 R = 0.2 * Mat2::Identity();
  Eigen::VectorXd beta(1);
  beta << 1.0;
  const TrackEstimate a = jpda_apply(t, {z}, {R}, beta, 0.0);
  const TrackEstimate b = kf_update(t, z, R);
  CHECK((a.xi - b.xi).norm() < 1e-12);
  CHECK((a.P - b.P).norm() < 1e-12);
}

TEST_CASE("jpda_apply with full miss keeps the prior") {
  const TrackEstimate t = make_ooi(0, Vec4(1, 1, 0, 0), Mat4::Identity());
  Eigen::VectorXd beta(1);
  beta << 0.0;
  const TrackEstimate out =
      jpda_apply(t, {Vec2(9.0, 9.0)}, {Mat2::Identity()}, beta, 1.0);
  CHECK((out.xi - t.xi).norm() == 0.0);
}

// ---------------------------------------------------------------------------
// consensus fusion

namespace {

FilterState single_track_state(const Vec4& xi, const Mat4& P) {
  FilterState fs;
  fs.ooi_tracks.push_back(make_ooi(0, xi, P));
  return fs;
}

}  // namespace

TEST_CASE("ci_fuse fixed point on identical inputs") {
  std::mt19937_64 rng(81);
  const Mat4 P = random_spd4(rng);
  const FilterState fs = single_track_state(Vec4(1, 2, 3, 4), P);
  const FilterState fused = ci_fuse({fs, fs, fs}, {0.2, 0.5, 0.3});
  CHECK((fused.ooi_tracks[0].xi - fs.ooi_tracks[0].xi).norm() < 1e-10);
  CHECK((fused.ooi_tracks[0].P - fs.ooi_tracks[0].P).norm() < 1e-10);
}

TEST_CASE("equal-weight fusion of I and 3I gives 1.5I") {
  const Vec4 xi(1, -1, 0.5, 0.0);
  const FilterState a = single_track_state(xi, Mat4::Identity());
  const FilterState b = single_track_state(xi, 3.0 * Mat4::Identity());
  const FilterState fused = ci_fuse({a, b}, {0.5, 0.5});
  CHECK((Mat4(fused.ooi_tracks[0].P) - 1.5 * Mat4::Identity()).norm() < 1e-10);
  CHECK((fused.ooi_tracks[0].xi - xi).norm() < 1e-10);
}

TEST_CASE("fused trace never exceeds the worst member") {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 100; ++trial) {
    std::normal_distribution<double> n;
    const FilterState a =
        single_track_state(Vec4(n(rng), n(rng), n(rng), n(rng)), random_spd4(rng));
    const FilterState b =
        single_track_state(Vec4(n(rng), n(rng), n(rng), n(rng)), random_spd4(rng));
    const FilterState fused = ci_fuse({a, b}, {0.5, 0.5});
    const double worst =
        std::max(a.ooi_tracks[0].P.trace(), b.ooi_tracks[0].P.trace());
    CHECK(fused.ooi_tracks[0].P.trace() <= worst + 1e-10);
  }
}

TEST_CASE("ci_fuse rejects mismatched track ids") {
  FilterState a = single_track_state(Vec4::Zero(), Mat4::Identity());
  FilterState b = single_track_state(Vec4::Zero(), Mat4::Identity());
  b.ooi_tracks[0].id = 7;
  CHECK_THROWS_AS(ci_fuse({a, b}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("ci_fuse aligns SOO maps and merges coincident births") {
  FilterState a, b;
  TrackEstimate soo_a;
  soo_a.id = 0 * kSooIdStride + 0;
  soo_a.kind = TrackKind::Soo;
  soo_a.xi = Vec2(1.0, 1.0);
  soo_a.P = 0.5 * Mat2::Identity();
  a.occlusion_map.tracks.push_back(soo_a);

  TrackEstimate soo_b = soo_a;
  soo_b.id = 1 * kSooIdStride + 0;  // other agent's birth of the same tree
  soo_b.xi = Vec2(1.2, 0.9);
  b.occlusion_map.tracks.push_back(soo_b);

  TrackEstimate far = soo_b;
  far.id = 1 * kSooIdStride + 1;
  far.xi = Vec2(8.0, -3.0);
  b.occlusion_map.tracks.push_back(far);

  const FilterState fused = ci_fuse({a, b}, {0.5, 0.5});
  CHECK(fused.occlusion_map.tracks.size() == 2);  // merged pair + distinct entry

  // entry held by a single agent passes through unchanged
  bool found_far = false;
  for (const auto& t : fused.occlusion_map.tracks)
    if (t.id == far.id) {
      found_far = true;
      CHECK((t.xi - far.xi).norm() < 1e-12);
    }
  CHECK(found_far);
}

TEST_CASE("update_occlusion_map births, refines, and separates") {
  DynamicOcclusionMap map;
  map.fixed_radius = 1.5;
  AgentState observer;
  AgentSpec spec;
  SooUpdateParams params;
  params.birth_cov = Mat2::Identity();
  params.id_namespace = 0;
  int births = 0;

  Observation o;
  o.label = "tree";
  o.cls = ObjectClass::Soo;
  o.z = Vec2(2.0, 1.0);

  map = update_occlusion_map(map, {o}, observer, spec, params, births);
  REQUIRE(map.tracks.size() == 1);
  CHECK((map.tracks[0].position() - o.z).norm() < 1e-12);

  // repeated observations shrink the trace monotonically
  double last = map.tracks[0].P.trace();
  for (int i = 0; i < 5; ++i) {
    map = update_occlusion_map(map, {o}, observer, spec, params, births);
    CHECK(map.tracks[0].P.trace() <= last + 1e-12);
    last = map.tracks[0].P.trace();
  }

  // far observation spawns a second entry
  Observation o2 = o;
  o2.z = Vec2(40.0, -20.0);
  map = update_occlusion_map(map, {o2}, observer, spec, params, births);
  CHECK(map.tracks.size() == 2);
  CHECK(births == 2);
}

TEST_SUITE_END();
