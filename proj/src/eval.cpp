#include "stepsrl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "stepsrl/util.hpp"

namespace stepsrl {

RepresentationMap build_representations(
    const ModelParams<float>& params,
    const std::vector<TrainingExample>& examples) {
  std::map<std::string, Eigen::VectorXd> sums;
  std::map<std::string, int> counts;
  for (const auto& ex : examples) {
    auto tr = forward(params, ex, DecodeMode::TeacherForced);
    Eigen::VectorXd z(params.cfg.d_e);
    for (int i = 0; i < params.cfg.d_e; ++i)
      z(i) = double(tr.z_new.mat()(0, i));
    auto it = sums.find(ex.word);
    if (it == sums.end()) {
      sums[ex.word] = z;
      counts[ex.word] = 1;
    } else {
      it->second += z;
      counts[ex.word] += 1;
    }
  }
  RepresentationMap out;
  for (const auto& [word, sum] : sums) {
    WordRepresentation rep;
    rep.word = word;
    rep.occurrence_count = counts[word];
    rep.vector = (sum / double(rep.occurrence_count)).cast<float>();
    out[word] = std::move(rep);
  }
  return out;
}

SimilarityBenchmark load_benchmark(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open benchmark file: " + path);
  SimilarityBenchmark bench;
  const std::size_t slash = path.find_last_of('/');
  bench.name = slash == std::string::npos ? path : path.substr(slash + 1);
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    SimilarityPair p;
    if (!(ss >> p.word_a >> p.word_b >> p.human_score))
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'word_a word_b score'");
    if (!std::isfinite(p.human_score))
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": non-finite score");
    auto key = std::minmax(p.word_a, p.word_b);
    if (!seen.insert({key.first, key.second}).second) continue;
    bench.pairs.push_back(std::move(p));
  }
  return bench;
}

double cosine(const Eigen::VectorXf& u, const Eigen::VectorXf& v) {
  const double nu = u.cast<double>().norm();
  const double nv = v.cast<double>().norm();
  if (nu == 0 || nv == 0) {
    log_warn("cosine of a zero vector, returning 0");
    return 0;
  }
  return u.cast<double>().dot(v.cast<double>()) / (nu * nv);
}

namespace {

// Average (fractional) ranks, 1-based; ties share the mean of their ranks.
std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(),
            [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0 || vb == 0)
    throw AnalysisError("spearman_rho: constant input vector");
  return cov / std::sqrt(va * vb);
}

}  // namespace

double spearman_rho(const std::vector<double>& x,
                    const std::vector<double>& y) {
  if (x.size() != y.size())
    throw AnalysisError("spearman_rho: length mismatch");
  if (x.size() < 2) throw AnalysisError("spearman_rho: need at least 2 points");
  return pearson(average_ranks(x), average_ranks(y));
}

SimilarityResult similarity_eval(const RepresentationMap& reps,
                                 const SimilarityBenchmark& benchmark) {
  SimilarityResult result;
  std::vector<double> model_scores, human_scores;
  for (const auto& p : benchmark.pairs) {
    auto a = reps.find(p.word_a);
    auto b = reps.find(p.word_b);
    if (a == reps.end() || b == reps.end()) {
      ++result.skipped_pairs;
      continue;
    }
    model_scores.push_back(cosine(a->second.vector, b->second.vector));
    human_scores.push_back(p.human_score);
  }
  result.used_pairs = int(model_scores.size());
  if (result.used_pairs < 2)
    throw AnalysisError("similarity_eval: only " +
                        std::to_string(result.used_pairs) +
                        " usable pairs in benchmark " + benchmark.name);
  result.rho = spearman_rho(model_scores, human_scores);
  return result;
}

void jacobi_eigh(const Eigen::MatrixXd& sym, Eigen::VectorXd& eigenvalues,
                 Eigen::MatrixXd& eigenvectors) {
  const int n = int(sym.rows());
  Eigen::MatrixXd a = sym;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Eigen::VectorXd ap = a.col(p), aq = a.col(q);
        a.col(p) = c * ap - s * aq;
        a.col(q) = s * ap + c * aq;
        ap = a.row(p).transpose();
        aq = a.row(q).transpose();
        a.row(p) = (c * ap - s * aq).transpose();
        a.row(q) = (s * ap + c * aq).transpose();
        Eigen::VectorXd vp = v.col(p), vq = v.col(q);
        v.col(p) = c * vp - s * vq;
        v.col(q) = s * vp + c * vq;
      }
    }
  }
  // sort descending by eigenvalue
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&a](int i, int j) { return a(i, i) > a(j, j); });
  eigenvalues.resize(n);
  eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    eigenvalues(i) = a(order[std::size_t(i)], order[std::size_t(i)]);
    eigenvectors.col(i) = v.col(order[std::size_t(i)]);
  }
}

PcaResult pca_diff_vectors(
    const RepresentationMap& reps,
    const std::vector<std::pair<std::string, std::string>>& word_pairs) {
  std::vector<std::string> labels;
  std::vector<Eigen::VectorXd> diffs;
  for (const auto& [a, b] : word_pairs) {
    auto ia = reps.find(a);
    auto ib = reps.find(b);
    if (ia == reps.end() || ib == reps.end())
      throw AnalysisError("pca_diff_vectors: word pair (" + a + "," + b +
                          ") not fully represented");
    diffs.push_back(ia->second.vector.cast<double>() -
                    ib->second.vector.cast<double>());
    labels.push_back(a + "-" + b);
  }
  const int n = int(diffs.size());
  if (n < 2)
    throw AnalysisError("pca_diff_vectors: need at least 2 pairs, got " +
                        std::to_string(n));
  const int d = int(diffs[0].size());
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i) X.row(i) = diffs[std::size_t(i)].transpose();
  const Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;
  const Eigen::MatrixXd cov = X.transpose() * X / double(n - 1);

  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  jacobi_eigh(cov, evals, evecs);

  const double total_var = evals.sum();
  if (total_var <= 0)
    throw AnalysisError("pca_diff_vectors: difference vectors have no variance");

  PcaResult result;
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd pc = evecs.col(c);
    int imax = 0;
    for (int i = 1; i < d; ++i)
      if (std::fabs(pc(i)) > std::fabs(pc(imax))) imax = i;
    if (pc(imax) < 0) pc = -pc;
    evecs.col(c) = pc;
    result.explained_variance[c] = std::max(evals(c), 0.0) / total_var;
  }
  for (int i = 0; i < n; ++i) {
    PcaPoint pt;
    pt.label = labels[std::size_t(i)];
    pt.x = X.row(i).dot(evecs.col(0));
    pt.y = X.row(i).dot(evecs.col(1));
    result.points.push_back(std::move(pt));
  }
  return result;
}

void write_pca_csv(const std::string& path, const PcaResult& result) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << "pair_label,x,y\n";
  char buf[96];
  for (const auto& p : result.points) {
    std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g\n", p.label.c_str(), p.x,
                  p.y);
    os << buf;
  }
}

void write_pca_svg(const std::string& path, const PcaResult& result) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  double m = 1e-12;
  for (const auto& p : result.points)
    m = std::max({m, std::fabs(p.x), std::fabs(p.y)});
  const double s = 220.0 / m;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='520' height='520' "
        "viewBox='0 0 520 520'>\n"
        "<line x1='0' y1='260' x2='520' y2='260' stroke='#ccc'/>\n"
        "<line x1='260' y1='0' x2='260' y2='520' stroke='#ccc'/>\n";
  for (const auto& p : result.points) {
    const double x = 260 + s * p.x;
    const double y = 260 - s * p.y;
    os << "<line x1='260' y1='260' x2='" << x << "' y2='" << y
       << "' stroke='#36c' stroke-width='1.5'/>\n"
       << "<circle cx='" << x << "' cy='" << y << "' r='3' fill='#36c'/>\n"
       << "<text x='" << x + 5 << "' y='" << y - 5
       << "' font-size='11' font-family='sans-serif'>" << p.label
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace stepsrl
