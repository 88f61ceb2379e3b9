#include "doctest.h"
#include "fixtures.hpp"
#include "moodspace/binary_io.hpp"
#include "moodspace/errors.hpp"
#include "moodspace/model.hpp"
#include "moodspace/trainer.hpp"
#include "temp_dir.hpp"

using namespace moodspace;
using moodspace::testing::TempDir;

namespace {

MoodSpaceModel tiny_model(std::uint64_t seed = 4) {
  const auto board = moodspace::testing::make_board(seed, 2, 6, 8, 5);
  TrainConfig c;
  c.steps = 3;
  c.hidden = 12;
  c.mood_dim = 3;
  c.k = 8;
  c.fps_count = 40;
  c.seed = seed;
  return fit(board.v, board.w, c);
}

}  // namespace

TEST_CASE("model save/load preserves outputs and re-saves byte-identically") {
  TempDir dir;
  const MoodSpaceModel m = tiny_model();
  save_model(m, dir / "m.bin");
  const MoodSpaceModel r = load_model(dir / "m.bin");

  const Eigen::MatrixXd probe = moodspace::testing::gaussian_matrix(7, 8, 99);
  CHECK(encode(r, probe) == encode(m, probe));
  CHECK(decode(r, encode(r, probe)) == decode(m, encode(m, probe)));
  CHECK(r.loss_history.size() == m.loss_history.size());
  CHECK(r.loss_history.back().total == m.loss_history.back().total);
  CHECK(r.subset == m.subset);
  CHECK(r.provenance == m.provenance);
  CHECK(r.hyper.seed == m.hyper.seed);
  CHECK(r.hyper.weights.variance == m.hyper.weights.variance);

  save_model(r, dir / "m2.bin");
  CHECK(binary::read_file(dir / "m.bin") == binary::read_file(dir / "m2.bin"));
}

TEST_CASE("model reader rejects damaged files") {
  const auto bytes = encode_model(tiny_model());
  for (std::size_t cut : {std::size_t(4), std::size_t(40), bytes.size() / 2, bytes.size() - 1}) {
    CHECK_THROWS_AS(decode_model(std::vector<std::byte>(bytes.begin(), bytes.begin() + std::ptrdiff_t(cut))),
                    FormatError);
  }
  auto trailing = bytes;
  trailing.push_back(std::byte{0});
  CHECK_THROWS_WITH_AS(decode_model(trailing), doctest::Contains("trailing"), FormatError);
  auto magic = bytes;
  magic[0] = std::byte{'X'};
  CHECK_THROWS_WITH_AS(decode_model(magic), doctest::Contains("unrecognized format"), FormatError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.bin"), IoError);
}

TEST_CASE("feature stats standardize and invert") {
  Eigen::MatrixXd x = moodspace::testing::gaussian_matrix(20, 4, 1);
  x.col(2).setConstant(3.0);
  const FeatureStats s = FeatureStats::fit(x);
  CHECK(s.scale(2) == 1.0);
  const Eigen::MatrixXd z = s.standardize(x);
  CHECK(z.colwise().mean().norm() < 1e-12);
  CHECK((s.destandardize(z) - x).norm() < 1e-12);
}
