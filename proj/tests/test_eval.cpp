#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "stepsrl/eval.hpp"
#include "stepsrl/util.hpp"

using namespace stepsrl;

namespace {

// Rank oracle by enumeration: average (fractional) rank of each value, then
// a plain double-precision Pearson correlation of the two rank vectors.
std::vector<double> reference_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    int less = 0, equal = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] < x[i]) ++less;
      if (x[j] == x[i]) ++equal;
    }
    r[i] = less + (equal + 1) / 2.0;
  }
  return r;
}

double reference_pearson(const std::vector<double>& a,
                         const std::vector<double>& b) {
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= n;
  mb /= n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

double reference_spearman(const std::vector<double>& x,
                          const std::vector<double>& y) {
  return reference_pearson(reference_ranks(x), reference_ranks(y));
}

Eigen::VectorXf vec(std::initializer_list<float> v) {
  Eigen::VectorXf out(int(v.size()));
  int i = 0;
  for (float f : v) out(i++) = f;
  return out;
}

}  // namespace

TEST_CASE("spearman: monotone data gives +1, reversed gives -1") {
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> up = {10, 20, 30, 40, 50};
  std::vector<double> down = {5, 4, 3, 2, 1};
  CHECK(spearman_rho(x, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman_rho(x, down) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("spearman is invariant under monotone transforms") {
  Rng rng(31, "spear-mono");
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(rng.uniform(-3, 3));
    y.push_back(rng.uniform(-3, 3));
  }
  std::vector<double> ex;
  for (double v : x) ex.push_back(std::exp(v));
  CHECK(spearman_rho(x, y) ==
        doctest::Approx(spearman_rho(ex, y)).epsilon(1e-12));
}

TEST_CASE("spearman matches the brute-force rank oracle, including ties") {
  Rng rng(32, "spear-oracle");
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x, y;
    for (int i = 0; i < 50; ++i) {
      // Quantized draws guarantee repeated values (ties) in both lists.
      x.push_back(std::floor(rng.uniform(0, 8)));
      y.push_back(std::floor(rng.uniform(0, 8)) + 0.1 * std::floor(rng.uniform(0, 3)));
    }
    CHECK(spearman_rho(x, y) ==
          doctest::Approx(reference_spearman(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("spearman rejects degenerate input") {
  CHECK_THROWS_AS((void)spearman_rho({1.0}, {2.0}), AnalysisError);
  CHECK_THROWS_AS((void)spearman_rho({1, 1, 1}, {1, 2, 3}), AnalysisError);
}

TEST_CASE("cosine similarity basics") {
  CHECK(cosine(vec({1, 0}), vec({1, 0})) == doctest::Approx(1.0));
  CHECK(cosine(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
  CHECK(cosine(vec({1, 2}), vec({-1, -2})) == doctest::Approx(-1.0));
  CHECK(cosine(vec({0, 0}), vec({1, 2})) == 0.0);  // zero norm -> 0
}

TEST_CASE("similarity_eval: constructed benchmark reaches rho 1") {
  RepresentationMap reps;
  // Words laid out on a line: cosine to "anchor" decreases monotonically.
  reps["anchor"] = {"anchor", vec({1, 0}), 1};
  reps["near"] = {"near", vec({1, 0.2f}), 1};
  reps["mid"] = {"mid", vec({1, 1}), 1};
  reps["far"] = {"far", vec({0.2f, 1}), 1};

  SimilarityBenchmark bench;
  bench.name = "synthetic";
  bench.pairs = {{"anchor", "near", 9.0},
                 {"anchor", "mid", 6.0},
                 {"anchor", "far", 2.0},
                 {"anchor", "missing-word", 5.0}};
  auto r = similarity_eval(reps, bench);
  CHECK(r.used_pairs == 3);
  CHECK(r.skipped_pairs == 1);
  CHECK(r.rho == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("similarity_eval with too few usable pairs is an analysis error") {
  RepresentationMap reps;
  reps["a"] = {"a", vec({1, 0}), 1};
  SimilarityBenchmark bench;
  bench.pairs = {{"a", "zzz", 1.0}, {"qqq", "rrr", 2.0}};
  CHECK_THROWS_AS((void)similarity_eval(reps, bench), AnalysisError);
}

TEST_CASE("load_benchmark parses TSV and deduplicates unordered pairs") {
  const std::string path = "bench_test.tsv";
  {
    std::ofstream os(path);
    os << "cat\tdog\t7.5\n";
    os << "dog\tcat\t3.0\n";  // same unordered pair
    os << "sun\tmoon\t4.2\n";
  }
  auto b = load_benchmark(path);
  CHECK(b.pairs.size() == 2);
  std::remove(path.c_str());
}

TEST_CASE("jacobi eigensolver matches Eigen's dense solver") {
  Rng rng(33, "jacobi");
  const int d = 7;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.uniform(-1, 1);
  Eigen::MatrixXd sym = a + a.transpose();

  Eigen::VectorXd vals;
  Eigen::MatrixXd vecs;
  jacobi_eigh(sym, vals, vecs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  for (int i = 0; i < d; ++i) {
    // jacobi_eigh sorts descending; Eigen sorts ascending.
    CHECK(vals(i) ==
          doctest::Approx(es.eigenvalues()(d - 1 - i)).epsilon(1e-10));
    // Eigenvector check up to sign: A v = lambda v.
    Eigen::VectorXd residual = sym * vecs.col(i) - vals(i) * vecs.col(i);
    CHECK(residual.norm() < 1e-9);
  }
}

TEST_CASE("pca: explained variance matches a float64 eigendecomposition") {
  Rng rng(34, "pca-var");
  RepresentationMap reps;
  const int d = 6;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 15; ++i) {
    Eigen::VectorXf a(d), b(d);
    for (int j = 0; j < d; ++j) {
      a(j) = float(rng.uniform(-1, 1));
      b(j) = float(rng.uniform(-1, 1));
    }
    const std::string na = "a" + std::to_string(i);
    const std::string nb = "b" + std::to_string(i);
    reps[na] = {na, a, 1};
    reps[nb] = {nb, b, 1};
    pairs.emplace_back(na, nb);
  }
  auto result = pca_diff_vectors(reps, pairs);
  REQUIRE(result.points.size() == pairs.size());

  // Independent covariance + dense eigendecomposition in double.
  Eigen::MatrixXd diffs(int(pairs.size()), d);
  for (int i = 0; i < int(pairs.size()); ++i)
    diffs.row(i) = (reps[pairs[std::size_t(i)].first].vector -
                    reps[pairs[std::size_t(i)].second].vector)
                       .cast<double>();
  Eigen::RowVectorXd mean = diffs.colwise().mean();
  Eigen::MatrixXd centered = diffs.rowwise() - mean;
  Eigen::MatrixXd cov =
      centered.transpose() * centered / double(pairs.size() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const double total = es.eigenvalues().sum();
  CHECK(std::fabs(result.explained_variance[0] -
                  es.eigenvalues()(d - 1) / total) < 1e-6);
  CHECK(std::fabs(result.explained_variance[1] -
                  es.eigenvalues()(d - 2) / total) < 1e-6);
}

TEST_CASE("pca on collinear differences puts all variance on one axis") {
  RepresentationMap reps;
  std::vector<std::pair<std::string, std::string>> pairs;
  Eigen::VectorXf dir = vec({3, 1, -2});
  for (int i = 0; i < 6; ++i) {
    Eigen::VectorXf base = vec({float(i), float(2 * i), float(-i)});
    const std::string na = "x" + std::to_string(i);
    const std::string nb = "y" + std::to_string(i);
    reps[na] = {na, Eigen::VectorXf(base + float(i + 1) * dir), 1};
    reps[nb] = {nb, base, 1};
    pairs.emplace_back(na, nb);
  }
  auto result = pca_diff_vectors(reps, pairs);
  CHECK(result.explained_variance[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::fabs(result.explained_variance[1]) < 1e-9);
  for (const auto& pt : result.points) CHECK(std::fabs(pt.y) < 1e-5);
}

TEST_CASE("pca sign convention: largest-magnitude loading is positive") {
  Rng rng(35, "pca-sign");
  RepresentationMap reps;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXf a(4), b(4);
    for (int j = 0; j < 4; ++j) {
      a(j) = float(rng.uniform(-1, 1));
      b(j) = float(rng.uniform(-1, 1));
    }
    const std::string na = "p" + std::to_string(i);
    const std::string nb = "q" + std::to_string(i);
    reps[na] = {na, a, 1};
    reps[nb] = {nb, b, 1};
    pairs.emplace_back(na, nb);
  }
  // Projections must be identical across runs (the sign rule removes the
  // eigenvector sign ambiguity).
  auto r1 = pca_diff_vectors(reps, pairs);
  auto r2 = pca_diff_vectors(reps, pairs);
  for (std::size_t i = 0; i < r1.points.size(); ++i) {
    CHECK(r1.points[i].x == r2.points[i].x);
    CHECK(r1.points[i].y == r2.points[i].y);
  }
}

TEST_CASE("pca with fewer than two pairs is an analysis error") {
  RepresentationMap reps;
  reps["a"] = {"a", vec({1, 2}), 1};
  reps["b"] = {"b", vec({2, 1}), 1};
  CHECK_THROWS_AS((void)pca_diff_vectors(reps, {{"a", "b"}}), AnalysisError);
}
