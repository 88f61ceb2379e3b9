#include "doctest.h"
#include "moodspace/errors.hpp"
#include "moodspace/pathops.hpp"
#include "small_model.hpp"

using namespace moodspace;
using namespace moodspace::testing;

namespace {

double collinearity_residual(const Eigen::MatrixXd& path, const std::vector<double>& t) {
  const Eigen::RowVectorXd origin = path.row(0);
  const Eigen::RowVectorXd slope = (path.row(Eigen::Index(t.size()) - 1) - origin) / (t.back() - t.front());
  double worst = 0.0;
  for (std::size_t s = 0; s < t.size(); ++s) {
    worst = std::max(worst, (path.row(Eigen::Index(s)) - origin - (t[s] - t.front()) * slope).norm());
  }
  return worst;
}

struct PathSetup {
  MoodSpaceModel model;
  Eigen::MatrixXd v, w;
  Eigen::MatrixXd codes;
};

const PathSetup& setup() {
  static const PathSetup s = [] {
    const Board b = small_board(11);
    PathSetup p;
    p.model = fit(b.v, b.w, small_config(11));
    p.v = b.v.tokens();
    p.w = b.w.tokens();
    p.codes = encode(p.model, p.v);
    return p;
  }();
  return s;
}

}  // namespace

TEST_CASE("connect is affine in t and starts at the anchor") {
  const PathSetup& s = setup();
  const std::vector<double> t = uniform_samples(9);
  const Eigen::RowVectorXd anchor = s.w.row(2);
  const LiftedPath p = connect(s.model, anchor, s.codes.row(2), s.codes.row(40), t);
  CHECK(p.w_path.row(0) == anchor);
  CHECK(collinearity_residual(p.w_path, t) <= 1e-9);
  CHECK((p.w_path.row(4) - 0.5 * (p.w_path.row(0) + p.w_path.row(8))).norm() <= 1e-9);
  CHECK((p.m_path.row(8) - s.codes.row(40)).norm() <= 1e-15);
  CHECK_FALSE(p.extrapolated);
  CHECK(p.mode == PathMode::Connect);

  const std::vector<double> far{0.0, 1.5};
  CHECK(connect(s.model, anchor, s.codes.row(2), s.codes.row(40), far).extrapolated);
  CHECK_THROWS_AS(connect(s.model, anchor.head(3), s.codes.row(2), s.codes.row(40), t), InvalidInput);
  CHECK_THROWS_AS(connect(s.model, anchor, s.codes.row(2).head(2), s.codes.row(40), t), InvalidInput);
}

TEST_CASE("a zero Mood-Space step lifts to the decoder's zero response") {
  const PathSetup& s = setup();
  const std::vector<double> t = uniform_samples(4);
  const LiftedPath p = connect(s.model, s.w.row(0), s.codes.row(5), s.codes.row(5), t);
  const Eigen::RowVectorXd zero_slope = decode_delta(s.model, Eigen::MatrixXd::Zero(1, 3)).row(0);
  CHECK((p.w_path.row(3) - p.w_path.row(0) - zero_slope).norm() <= 1e-12);
  CHECK(collinearity_residual(p.w_path, t) <= 1e-9);
}

TEST_CASE("analogy re-anchors the connect slope") {
  const PathSetup& s = setup();
  const std::vector<double> t = uniform_samples(5);
  const LiftedPath c = connect(s.model, s.w.row(7), s.codes.row(7), s.codes.row(50), t);
  const LiftedPath a = analogy(s.model, s.w.row(7), s.codes.row(7), s.codes.row(50), t);
  CHECK(a.w_path == c.w_path);
  CHECK(a.mode == PathMode::Analogy);
  const LiftedPath b = analogy(s.model, s.w.row(9), s.codes.row(7), s.codes.row(50), t);
  CHECK(((b.w_path.row(4) - b.w_path.row(0)) - (c.w_path.row(4) - c.w_path.row(0))).norm() <= 1e-12);
  CHECK(b.w_path.row(0) == s.w.row(9));

  const double gap = analogy_consistency(s.model, s.w.row(50), s.w.row(9), s.codes.row(7), s.codes.row(50),
                                         s.codes.row(9));
  CHECK(std::isfinite(gap));
}

TEST_CASE("segmented connect") {
  const PathSetup& s = setup();
  const LiftedPath one = segmented_connect(s.model, s.codes.row(1), s.codes.row(30), s.w.row(1), 1);
  const std::vector<double> t{0.0, 1.0};
  const LiftedPath c = connect(s.model, s.w.row(1), s.codes.row(1), s.codes.row(30), t);
  CHECK(one.w_path == c.w_path);
  CHECK(one.t == t);

  const LiftedPath four = segmented_connect(s.model, s.codes.row(1), s.codes.row(30), s.w.row(1), 4);
  REQUIRE(four.w_path.rows() == 5);
  CHECK(four.w_path.row(0) == s.w.row(1));
  const Eigen::RowVectorXd quarter = decode_delta(s.model, (s.codes.row(30) - s.codes.row(1)) / 4.0).row(0);
  CHECK((four.w_path.row(4) - s.w.row(1) - 4.0 * quarter).norm() <= 1e-9);
  CHECK_THROWS_AS(segmented_connect(s.model, s.codes.row(1), s.codes.row(30), s.w.row(1), 0), InvalidInput);
}

TEST_CASE("decode-along-path follows the decoder") {
  const PathSetup& s = setup();
  const std::vector<double> t = uniform_samples(6);
  const LiftedPath p =
      connect(s.model, s.w.row(3), s.codes.row(3), s.codes.row(60), t, LiftRule::DecodeAlongPath);
  CHECK(p.rule == LiftRule::DecodeAlongPath);
  CHECK((p.w_path - decode(s.model, p.m_path)).norm() == 0.0);
}

TEST_CASE("image path with identical A images uses the zero-step drift everywhere") {
  const PathSetup& s = setup();
  const Eigen::MatrixXd a1 = s.v.topRows(36), b1 = s.v.middleRows(36, 36);
  const std::vector<double> t = uniform_samples(3);
  const ImagePathResult r = image_path(s.model, a1, a1, b1, 4, t, 0);
  const Eigen::RowVectorXd zero_slope = decode_delta(s.model, Eigen::MatrixXd::Zero(1, 3)).row(0);
  for (Eigen::Index i = 0; i < r.slopes.rows(); ++i) CHECK((r.slopes.row(i) - zero_slope).norm() <= 1e-12);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.a1_to_a2[i] == i);
  for (const auto& path : r.token_paths) CHECK(collinearity_residual(path.w_path, t) <= 1e-9);
  CHECK((r.frame(0) - decode(s.model, encode(s.model, b1))).norm() == 0.0);
  CHECK_THROWS_AS(image_path(s.model, a1, a1, b1, 37, t, 0), InvalidInput);
}

TEST_CASE("image path with B1 = A1 applies each cluster's analogy token-wise") {
  const PathSetup& s = setup();
  const Eigen::MatrixXd a1 = s.v.topRows(36), a2 = s.v.middleRows(36, 36);
  const Eigen::MatrixXd anchors = s.w.topRows(36);
  const std::vector<double> t{1.0};
  const ImagePathResult r = image_path(s.model, a1, a2, a1, 3, t, 5, anchors);
  const auto& c = r.clusters;
  const Eigen::MatrixXd frame = r.frame(0);
  for (std::size_t p = 0; p < 36; ++p) {
    const std::size_t j = c.labels[2][p];
    CHECK(r.b1_to_a1[j] == j);
    const Eigen::RowVectorXd m1 = encode(s.model, c.centroids[0].row(Eigen::Index(j)));
    const Eigen::RowVectorXd m2 = encode(s.model, c.centroids[1].row(Eigen::Index(r.a1_to_a2[j])));
    const std::vector<double> one{1.0};
    const LiftedPath a = analogy(s.model, anchors.row(Eigen::Index(p)), m1, m2, one);
    CHECK((frame.row(Eigen::Index(p)) - a.w_path.row(0)).norm() <= 1e-12);
  }
}

TEST_CASE("image path on planted clusters") {
  const PathSetup& s = setup();
  // Three images whose tokens sit in two tight groups around training tokens.
  const Eigen::RowVectorXd lo = s.v.row(0), hi = s.v.row(35);
  const Eigen::MatrixXd noise = gaussian_matrix(3 * 20, 8, 70, 1e-3);
  auto image = [&](int which, bool swap) {
    Eigen::MatrixXd img(20, 8);
    for (int p = 0; p < 20; ++p) {
      const bool first = (p % 2 == 0) != swap;
      img.row(p) = (first ? lo : hi) + noise.row(which * 20 + p);
    }
    return img;
  };
  const Eigen::MatrixXd a1 = image(0, false), a2 = image(1, true), b1 = image(2, false);
  const std::vector<double> t = uniform_samples(3);
  const ImagePathResult r = image_path(s.model, a1, a2, b1, 2, t, 3);

  const auto& labels = r.clusters.labels;
  // Token 0 is in the `lo` group of A1 and of B1; in A2 the `lo` group holds odd tokens.
  const std::size_t a1_lo = labels[0][0], a2_lo = labels[1][1], b1_lo = labels[2][0];
  CHECK(r.a1_to_a2[a1_lo] == a2_lo);
  CHECK(r.a1_to_a2[1 - a1_lo] == 1 - a2_lo);
  CHECK(r.b1_to_a1[b1_lo] == a1_lo);
  CHECK(r.b1_to_a1[1 - b1_lo] == 1 - a1_lo);

  // Naive re-implementation from the cluster assignment.
  const Eigen::MatrixXd anchors = decode(s.model, encode(s.model, b1));
  for (std::size_t p = 0; p < 20; ++p) {
    const std::size_t i = r.b1_to_a1[labels[2][p]];
    Eigen::RowVectorXd c1 = Eigen::RowVectorXd::Zero(8), c2 = Eigen::RowVectorXd::Zero(8);
    double n1 = 0, n2 = 0;
    for (std::size_t q = 0; q < 20; ++q) {
      if (labels[0][q] == i) c1 += a1.row(Eigen::Index(q)), ++n1;
      if (labels[1][q] == r.a1_to_a2[i]) c2 += a2.row(Eigen::Index(q)), ++n2;
    }
    const Eigen::RowVectorXd drift =
        decode_delta(s.model, encode(s.model, c2 / n2) - encode(s.model, c1 / n1)).row(0);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const Eigen::RowVectorXd expect = anchors.row(Eigen::Index(p)) + t[k] * drift;
      CHECK((r.frame(k).row(Eigen::Index(p)) - expect).norm() <= 1e-9);
    }
  }
}
