// SPDX-License-Identifier: Apache-2.0

#include "slsec/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "slsec/error.hpp"

namespace slsec {

std::vector<double> softmax(std::span<const double> v) {
  require(!v.empty(), ErrorKind::kArgument, "softmax: empty vector");
  double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::kArgument,
          "cosine_similarity: length mismatch");
  double na = l2_norm(a), nb = l2_norm(b);
  require(na > 0.0 && nb > 0.0, ErrorKind::kDegenerate,
          "cosine_similarity: zero-norm input");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

namespace {

// Deterministic dense start vector; positive entries, never symmetric.
std::vector<double> power_start(std::size_t dim, std::uint64_t salt) {
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    v[i] = 0.5 + static_cast<double>(splitmix64(i + salt) >> 11) * 0x1.0p-53;
  }
  return v;
}

void fix_sign(std::vector<double>& v) {
  for (double x : v) {
    if (x != 0.0) {
      if (x < 0.0)
        for (double& y : v) y = -y;
      return;
    }
  }
}

}  // namespace

SingularPair top_singular_vector(const Matrix& m, double tol,
                                 std::size_t max_iter) {
  require(tol > 0.0, ErrorKind::kArgument, "top_singular_vector: tol must be > 0");
  bool nonzero = false;
  for (double x : m.data) nonzero |= (x != 0.0);
  require(nonzero, ErrorKind::kDegenerate, "top_singular_vector: zero matrix");

  const std::size_t d = m.cols;
  // Gram matrix mᵀm, d×d symmetric PSD.
  Matrix gram = mul_atb(m, m);

  std::vector<double> v = power_start(d, 0x5eedull);
  double nv = l2_norm(v);
  for (double& x : v) x /= nv;

  std::vector<double> w(d);
  double lambda = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      const double* grow = gram.data.data() + i * d;
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += grow[j] * v[j];
      w[i] = acc;
    }
    double nw = l2_norm(w);
    if (nw == 0.0) {
      // Start vector landed in the null space; perturb and retry.
      v = power_start(d, 0x5eedull + it);
      nv = l2_norm(v);
      for (double& x : v) x /= nv;
      continue;
    }
    double diff2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double next = w[i] / nw;
      double dd = next - v[i];
      diff2 += dd * dd;
      v[i] = next;
    }
    lambda = nw;
    if (std::sqrt(diff2) < tol) {
      fix_sign(v);
      // Rayleigh quotient on the sign-fixed iterate.
      double rq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double* grow = gram.data.data() + i * d;
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += grow[j] * v[j];
        rq += v[i] * acc;
      }
      return SingularPair{v, std::sqrt(std::max(rq, 0.0)), it};
    }
  }
  raise(ErrorKind::kConvergence,
        "top_singular_vector: no convergence after " + std::to_string(max_iter) +
            " iterations (last sigma^2 estimate " + std::to_string(lambda) + ")");
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

struct LloydRun {
  std::vector<std::size_t> assignment;
  Matrix centroids;
  double wcss = std::numeric_limits<double>::infinity();
  std::vector<double> iter_wcss;
};

LloydRun lloyd_once(const Matrix& points, std::size_t c, RngStream& rng,
                    std::size_t max_iter) {
  const std::size_t n = points.rows, d = points.cols;
  // Distance^2-weighted seeding (k-means++). Plain random-point seeding
  // routinely leaves well-separated clusters uncovered, which skews the
  // cluster-count scoring this routine feeds.
  LloydRun run;
  run.centroids = Matrix(c, d);
  {
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    auto src = points.row(first);
    std::copy(src.begin(), src.end(), run.centroids.row(0).begin());
    std::vector<double> best_dist(n, std::numeric_limits<double>::infinity());
    for (std::size_t j = 1; j < c; ++j) {
      double total = 0.0;
      const double* prev = run.centroids.data.data() + (j - 1) * d;
      for (std::size_t i = 0; i < n; ++i) {
        best_dist[i] =
            std::min(best_dist[i], sq_dist(points.data.data() + i * d, prev, d));
        total += best_dist[i];
      }
      std::size_t pick = n - 1;
      if (total > 0.0) {
        double u = rng.uniform() * total, cum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          cum += best_dist[i];
          if (u < cum) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<std::size_t>(rng.below(n));  // all points coincide
      }
      auto picked = points.row(pick);
      std::copy(picked.begin(), picked.end(), run.centroids.row(j).begin());
    }
  }

  run.assignment.assign(n, c);  // sentinel: forces at least one update
  std::vector<double> point_dist(n, 0.0);
  std::vector<std::size_t> counts(c, 0);

  for (std::size_t it = 0; it < max_iter; ++it) {
    // Assignment step.
    bool changed = false;
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = points.data.data() + i * d;
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < c; ++j) {
        double dist = sq_dist(p, run.centroids.data.data() + j * d, d);
        if (dist < best) {
          best = dist;
          best_j = j;
        }
      }
      if (run.assignment[i] != best_j) {
        run.assignment[i] = best_j;
        changed = true;
      }
      point_dist[i] = best;
      wcss += best;
    }
    run.iter_wcss.push_back(wcss);
    run.wcss = wcss;
    if (!changed) break;

    // Update step.
    std::fill(run.centroids.data.begin(), run.centroids.data.end(), 0.0);
    std::fill(counts.begin(), counts.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = run.assignment[i];
      ++counts[j];
      const double* p = points.data.data() + i * d;
      double* cr = run.centroids.data.data() + j * d;
      for (std::size_t k = 0; k < d; ++k) cr[k] += p[k];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t j = 0; j < c; ++j) {
      if (counts[j] > 0) {
        double inv = 1.0 / static_cast<double>(counts[j]);
        for (std::size_t k = 0; k < d; ++k) run.centroids.at(j, k) *= inv;
      } else {
        // Reseed to the farthest point from its own centroid.
        std::size_t far_i = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!taken[i] && point_dist[i] > far_d) {
            far_d = point_dist[i];
            far_i = i;
          }
        }
        taken[far_i] = true;
        auto src = points.row(far_i);
        std::copy(src.begin(), src.end(), run.centroids.row(j).begin());
      }
    }
  }
  return run;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t c, RngStream& rng,
                    std::size_t restarts, std::size_t max_iter,
                    std::vector<double>* iteration_wcss) {
  const std::size_t n = points.rows;
  require(c >= 1, ErrorKind::kArgument, "kmeans: c must be >= 1");
  require(c <= n, ErrorKind::kArgument, "kmeans: more clusters than points");
  require(restarts >= 1, ErrorKind::kArgument, "kmeans: restarts must be >= 1");

  LloydRun best;
  for (std::size_t r = 0; r < restarts; ++r) {
    LloydRun run = lloyd_once(points, c, rng, max_iter);
    if (run.wcss < best.wcss) best = std::move(run);
  }
  if (iteration_wcss) *iteration_wcss = best.iter_wcss;
  return KMeansResult{std::move(best.assignment), std::move(best.centroids),
                      best.wcss};
}

double calinski_harabasz(const Matrix& points,
                         std::span<const std::size_t> assignment) {
  const std::size_t n = points.rows, d = points.cols;
  require(assignment.size() == n, ErrorKind::kArgument,
          "calinski_harabasz: assignment length mismatch");
  require(n > 0, ErrorKind::kArgument, "calinski_harabasz: no points");

  std::size_t c = 0;
  for (std::size_t a : assignment) c = std::max(c, a + 1);
  std::vector<std::size_t> counts(c, 0);
  for (std::size_t a : assignment) ++counts[a];
  std::size_t nonempty = 0;
  for (std::size_t cnt : counts) nonempty += (cnt > 0);
  require(nonempty >= 2, ErrorKind::kDegenerate,
          "calinski_harabasz: fewer than two clusters");
  require(n > nonempty, ErrorKind::kArgument,
          "calinski_harabasz: need more points than clusters");

  std::vector<double> mean(d, 0.0);
  Matrix centroids(c, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = points.data.data() + i * d;
    double* cr = centroids.data.data() + assignment[i] * d;
    for (std::size_t k = 0; k < d; ++k) {
      cr[k] += p[k];
      mean[k] += p[k];
    }
  }
  for (double& x : mean) x /= static_cast<double>(n);
  for (std::size_t j = 0; j < c; ++j) {
    if (counts[j] == 0) continue;
    double inv = 1.0 / static_cast<double>(counts[j]);
    for (std::size_t k = 0; k < d; ++k) centroids.at(j, k) *= inv;
  }

  double ssb = 0.0, ssw = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    if (counts[j] == 0) continue;
    ssb += static_cast<double>(counts[j]) *
           sq_dist(centroids.data.data() + j * d, mean.data(), d);
  }
  for (std::size_t i = 0; i < n; ++i) {
    ssw += sq_dist(points.data.data() + i * d,
                   centroids.data.data() + assignment[i] * d, d);
  }
  require(ssw > 0.0, ErrorKind::kDegenerate, "calinski_harabasz: zero within-cluster scatter");

  double num = ssb / static_cast<double>(nonempty - 1);
  double den = ssw / static_cast<double>(n - nonempty);
  return num / den;
}

}  // namespace slsec
