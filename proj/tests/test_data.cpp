#include <doctest.h>

#include <cmath>
#include <string>

#include "medfs/data.hpp"
#include "medfs/error.hpp"
#include "support.hpp"

using namespace medfs;
using medfs::testing::TempDir;
using medfs::testing::spit;

namespace {

Dataset one_row(std::initializer_list<double> values) {
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index j = 0;
  for (double v : values) x(0, j++) = v;
  return Dataset(x, Eigen::VectorXd::Ones(1), Dataset::default_names(x.cols()),
                 Task::classification);
}

}  // namespace

TEST_CASE("load_csv parses a small classification file") {
  TempDir dir("data");
  spit(dir / "a.csv", "f1,f2,label\n0.5,1,+1\n2,-3,-1\n1e-2,4,1\n");
  Dataset d = load_csv(dir / "a.csv", std::string("label"), Task::classification);
  CHECK(d.rows() == 3);
  CHECK(d.cols() == 2);
  CHECK(d.feature_names() == std::vector<std::string>{"f1", "f2"});
  CHECK(d.targets()[0] == 1.0);
  CHECK(d.targets()[1] == -1.0);
  CHECK(d.targets()[2] == 1.0);
  CHECK(d.examples()(2, 0) == doctest::Approx(0.01));

  Dataset by_index = load_csv(dir / "a.csv", std::size_t{2}, Task::classification);
  CHECK(by_index.examples() == d.examples());
}

TEST_CASE("load_csv rejects bad classification labels with the row") {
  TempDir dir("data");
  spit(dir / "bad.csv", "f1,label\n1,1\n2,0\n");
  try {
    load_csv(dir / "bad.csv", std::string("label"), Task::classification);
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("load_csv keeps real regression targets") {
  TempDir dir("data");
  spit(dir / "r.csv", "x,target\n1,0.25\n2,-3.5\n");
  Dataset d = load_csv(dir / "r.csv", std::string("target"), Task::regression);
  CHECK(d.targets()[0] == 0.25);
  CHECK(d.targets()[1] == -3.5);
}

TEST_CASE("load_csv errors") {
  TempDir dir("data");
  CHECK_THROWS_AS(load_csv(dir / "missing.csv", std::string("y"), Task::regression),
                  InvalidArgument);
  spit(dir / "nn.csv", "x,y\n1,abc\n");
  CHECK_THROWS_AS(load_csv(dir / "nn.csv", std::string("y"), Task::regression), ParseError);
  spit(dir / "ragged.csv", "x,y\n1,2,3\n");
  CHECK_THROWS_AS(load_csv(dir / "ragged.csv", std::string("y"), Task::regression), ParseError);
  spit(dir / "nocol.csv", "x,y\n1,2\n");
  CHECK_THROWS_AS(load_csv(dir / "nocol.csv", std::string("z"), Task::regression),
                  InvalidArgument);
}

TEST_CASE("save_csv round-trips") {
  TempDir dir("data");
  std::mt19937_64 rng(3);
  Dataset d = testing::random_dataset(rng, 7, 3, Task::regression);
  save_csv(d, dir / "d.csv", "y");
  Dataset back = load_csv(dir / "d.csv", std::string("y"), Task::regression);
  CHECK(back.examples() == d.examples());
  CHECK(back.targets() == d.targets());
}

TEST_CASE("Dataset validation") {
  Eigen::MatrixXd x(2, 1);
  x << 1, 2;
  CHECK_THROWS_AS(Dataset(x, Eigen::Vector2d(1, 2), Dataset::default_names(1),
                          Task::classification),
                  InvalidArgument);
  x(1, 0) = std::nan("");
  CHECK_THROWS_AS(Dataset(x, Eigen::Vector2d(1, -1), Dataset::default_names(1),
                          Task::classification),
                  InvalidArgument);
}

TEST_CASE("polynomial_expand") {
  CHECK(polynomial_expand(one_row({2}), 1).examples()(0, 0) == 2.0);

  Dataset cube = polynomial_expand(one_row({2}), 3);
  CHECK(cube.examples().row(0) == Eigen::RowVector3d(2, 4, 8));
  CHECK(cube.feature_names() == std::vector<std::string>{"f1^1", "f1^2", "f1^3"});

  Dataset two = polynomial_expand(one_row({1, -1}), 2);
  CHECK(two.examples().row(0) == Eigen::RowVector4d(1, 1, -1, 1));

  CHECK_THROWS_AS(polynomial_expand(one_row({1}), 0), InvalidArgument);
}

TEST_CASE("legendre_expand spans the monomials") {
  // P2(u) = (3u^2 - 1)/2 on u = x mapped from [-2, 2]
  Eigen::VectorXd lo(1), hi(1);
  lo << -2;
  hi << 2;
  Eigen::VectorXd e = legendre_expand(Eigen::VectorXd::Constant(1, 1.0), 3, lo, hi);
  const double u = 0.5;
  CHECK(e[0] == doctest::Approx(u));
  CHECK(e[1] == doctest::Approx((3 * u * u - 1) / 2));
  CHECK(e[2] == doctest::Approx((5 * u * u * u - 3 * u) / 2));
}

TEST_CASE("standardize") {
  Eigen::MatrixXd x(2, 1);
  x << 1, 3;
  Dataset d(x, Eigen::Vector2d(1, -1), Dataset::default_names(1), Task::classification);
  auto [z, scaling] = standardize(d);
  CHECK(z.examples()(0, 0) == doctest::Approx(-1.0));
  CHECK(z.examples()(1, 0) == doctest::Approx(1.0));
  CHECK(scaling.shift[0] == doctest::Approx(2.0));
  CHECK(scaling.scale[0] == doctest::Approx(1.0));

  Eigen::MatrixXd c(3, 1);
  c << 5, 5, 5;
  Dataset flat(c, Eigen::Vector3d(1, -1, 1), Dataset::default_names(1), Task::classification);
  auto [zc, sc] = standardize(flat);
  CHECK(zc.examples().isZero());
  CHECK(sc.scale[0] == 1.0);
  CHECK(sc.constant[0]);
}

TEST_CASE("Preprocessing replays on new data") {
  std::mt19937_64 rng(5);
  Dataset raw = testing::random_dataset(rng, 12, 2, Task::regression);
  auto [pre, train] = Preprocessing::fit(raw, 3, true);
  Dataset again = pre.apply(raw);
  CHECK((again.examples() - train.examples()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::VectorXd row = pre.apply(Eigen::VectorXd(raw.examples().row(4).transpose()));
  CHECK((row.transpose() - train.examples().row(4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gen_sinc") {
  Dataset d = gen_sinc(100, 0.0, 11);
  CHECK(d.rows() == 100);
  for (Eigen::Index t = 0; t < d.rows(); ++t) {
    CHECK(d.targets()[t] == sinc(d.examples()(t, 0)));
    CHECK(std::abs(d.examples()(t, 0)) <= 10.0);
  }
  CHECK(sinc(0.0) == 1.0);
  Dataset again = gen_sinc(100, 0.0, 11);
  CHECK(again.examples() == d.examples());
  CHECK_THROWS_AS(gen_sinc(10, -1.0, 0), InvalidArgument);
}

TEST_CASE("gen_sparse_binary") {
  SparseBinaryConfig cfg;
  SparseBinaryTask task = gen_sparse_binary(cfg);
  CHECK(task.train.rows() == 500);
  CHECK(task.test.rows() == 4724);
  CHECK(task.train.cols() == 100);
  CHECK(task.informative.size() == 10);
  const Eigen::MatrixXd& x = task.train.examples();
  CHECK((x.array() == 0.0 || x.array() == 1.0).all());

  // planted rule beats chance on test data
  const Eigen::MatrixXd& xt = task.test.examples();
  Eigen::VectorXd centred = (xt.rowwise() - xt.colwise().mean()) * task.planted_weights;
  int hits = 0;
  for (Eigen::Index t = 0; t < xt.rows(); ++t) {
    hits += (centred[t] >= 0 ? 1.0 : -1.0) == task.test.targets()[t];
  }
  // 3 sigma above 1/2 for 4724 draws is about 0.522
  CHECK(hits / double(xt.rows()) > 0.55);

  cfg.k_informative = cfg.n;
  CHECK(gen_sparse_binary(cfg).informative.size() == cfg.n);
  cfg.k_informative = cfg.n + 1;
  CHECK_THROWS_AS(gen_sparse_binary(cfg), InvalidArgument);
}

TEST_CASE("gen_housing_like and gen_gaussian_clouds") {
  RegressionSplit split = gen_housing_like(0);
  CHECK(split.train.rows() == 481);
  CHECK(split.test.rows() == 25);
  CHECK(split.train.cols() == 13);
  Dataset clouds = gen_gaussian_clouds(50, 2, 3.0, 0);
  CHECK(clouds.rows() == 100);
  CHECK(clouds.targets().sum() == 0.0);
}

TEST_CASE("index sidecar round-trip") {
  TempDir dir("data");
  std::vector<std::size_t> idx{3, 1, 4, 1, 5};
  write_index_sidecar(idx, dir / "i.json");
  CHECK(read_index_sidecar(dir / "i.json") == idx);
}
