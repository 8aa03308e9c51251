#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "tapf/feedback.hpp"

namespace tapf {

namespace {

using Vec = std::vector<double>;

double dot(const Vec &a, const Vec &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec &a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const Vec &x, Vec &y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

// Two passes of classical Gram-Schmidt against every vector in each set.
void orthogonalize(Vec &w, const std::vector<Vec> &a, const std::vector<Vec> &b) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vec &q : a) axpy(-dot(w, q), q, w);
    for (const Vec &q : b) axpy(-dot(w, q), q, w);
  }
}

Vec random_unit(std::size_t n, Rng &rng) {
  Vec v(n);
  for (double &x : v) x = rng.uniform() - 0.5;
  const double nv = norm(v);
  for (double &x : v) x /= nv;
  return v;
}

double residual(const DiscrepancyMatrix &d, const Vec &v, double theta) {
  Vec dv(v.size());
  d.multiply(v, dv);
  axpy(-theta, v, dv);
  return norm(dv);
}

}  // namespace

SpectralResult top_eigenpairs(const DiscrepancyMatrix &d, int r, int iters, std::uint64_t seed) {
  const int n = d.dim();
  if (r < 1 || r > n) throw std::invalid_argument("eigenpair count out of range");
  SpectralResult out;
  const double dnorm = d.frobenius();
  if (dnorm == 0.0) {
    for (int k = 0; k < r; ++k) {
      Vec e(static_cast<std::size_t>(n), 0.0);
      e[k] = 1.0;
      out.values.push_back(0.0);
      out.vectors.push_back(std::move(e));
    }
    return out;
  }

  const int steps = iters > 0 ? std::min(iters, n) : std::min(2 * r + 30, n);
  const double tight = 1e-10 * dnorm;
  const double loose = 1e-6 * dnorm;
  constexpr int kMaxRestarts = 100;

  Rng rng(seed);
  std::vector<Vec> locked;
  Vec start = random_unit(static_cast<std::size_t>(n), rng);

  for (int restart = 0; static_cast<int>(locked.size()) < r; ++restart) {
    const int m = std::min(steps, n - static_cast<int>(locked.size()));
    std::vector<Vec> basis;
    Vec alpha;
    Vec beta;

    Vec q = start;
    orthogonalize(q, locked, {});
    double qn = norm(q);
    if (qn < 1e-12) {
      q = random_unit(static_cast<std::size_t>(n), rng);
      orthogonalize(q, locked, {});
      qn = norm(q);
    }
    for (double &x : q) x /= qn;

    Vec w(static_cast<std::size_t>(n));
    for (int j = 0; j < m; ++j) {
      basis.push_back(q);
      d.multiply(q, w);
      alpha.push_back(dot(w, q));
      orthogonalize(w, locked, basis);
      if (j + 1 == m) break;
      double b = norm(w);
      if (b < 1e-12 * dnorm) {
        // Invariant subspace: continue in a fresh direction.
        w = random_unit(static_cast<std::size_t>(n), rng);
        orthogonalize(w, locked, basis);
        const double wn = norm(w);
        if (wn < 1e-12) break;
        for (double &x : w) x /= wn;
        beta.push_back(0.0);
      } else {
        for (double &x : w) x /= b;
        beta.push_back(b);
      }
      q = w;
    }

    const int size = static_cast<int>(basis.size());
    Eigen::VectorXd diag(size);
    Eigen::VectorXd sub(std::max(size - 1, 0));
    for (int j = 0; j < size; ++j) diag[j] = alpha[j];
    for (int j = 0; j + 1 < size; ++j) sub[j] = beta[j];
    Eigen::VectorXd theta;
    Eigen::MatrixXd s;
    if (size == 1) {
      theta = diag;
      s = Eigen::MatrixXd::Identity(1, 1);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      theta = es.eigenvalues();
      s = es.eigenvectors();
    }

    // Ritz pairs in descending order; lock the leading converged ones.
    bool locked_any = false;
    Vec pending;
    double pending_theta = 0.0;
    double pending_res = 0.0;
    for (int c = size - 1; c >= 0 && static_cast<int>(locked.size()) < r; --c) {
      Vec y(static_cast<std::size_t>(n), 0.0);
      for (int j = 0; j < size; ++j) axpy(s(j, c), basis[j], y);
      const double yn = norm(y);
      for (double &x : y) x /= yn;
      const double res = residual(d, y, theta[c]);
      if (res <= tight) {
        out.values.push_back(theta[c]);
        locked.push_back(y);
        out.vectors.push_back(std::move(y));
        locked_any = true;
        continue;
      }
      pending = std::move(y);
      pending_theta = theta[c];
      pending_res = res;
      break;
    }
    if (static_cast<int>(locked.size()) >= r) break;

    if (restart >= kMaxRestarts) {
      if (!pending.empty() && pending_res <= loose) {
        out.values.push_back(pending_theta);
        locked.push_back(pending);
        out.vectors.push_back(pending);
        continue;
      }
      throw ConvergenceFailure(static_cast<int>(locked.size()));
    }
    if (locked_any || pending.empty()) {
      // Mix in a random direction so eigenspaces absent from the previous
      // Krylov space (repeated eigenvalues) can still be found.
      Vec fresh = random_unit(static_cast<std::size_t>(n), rng);
      if (!pending.empty()) axpy(10.0, pending, fresh);
      start = std::move(fresh);
    } else {
      start = std::move(pending);
    }
  }

  std::vector<std::size_t> order(out.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.values[a] > out.values[b]; });
  SpectralResult sorted;
  for (std::size_t i = 0; i < static_cast<std::size_t>(r); ++i) {
    sorted.values.push_back(out.values[order[i]]);
    sorted.vectors.push_back(std::move(out.vectors[order[i]]));
  }
  return sorted;
}

}  // namespace tapf
