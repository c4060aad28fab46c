#include "fbmldp/fbm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "fbmldp/errors.hpp"
#include "fbmldp/parallel.hpp"
#include "fbmldp/rng.hpp"
#include "fbmldp/special.hpp"

namespace fbmldp {

namespace {

void check_hurst(double hurst, const char* what) {
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw DomainError(std::string(what) + ": hurst must lie in (0,1), got " + std::to_string(hurst));
  }
}

void check_sampling(std::size_t n_steps, double hurst, std::size_t dim, const char* what) {
  check_hurst(hurst, what);
  if (n_steps == 0) throw DomainError(std::string(what) + ": n_steps must be positive");
  if (dim == 0 || dim > kMaxFbmDim) {
    throw DomainError(std::string(what) + ": dim must lie in 1.." + std::to_string(kMaxFbmDim));
  }
}

// int_lo^hi u^p du
double power_integral(double p, double lo, double hi) {
  return (std::pow(hi, p + 1.0) - std::pow(lo, p + 1.0)) / (p + 1.0);
}

template <class T>
std::shared_ptr<const T> cached(std::size_t n, double hurst) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, double>, std::shared_ptr<const T>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, hurst}];
  if (!slot) slot = std::make_shared<const T>(n, hurst);
  return slot;
}

}  // namespace

double covariance(double s, double t, double hurst) {
  check_hurst(hurst, "covariance");
  if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0)) throw DomainError("covariance: s, t must lie in [0,1]");
  const double e = 2.0 * hurst;
  return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
}

double c_hurst(double hurst) {
  check_hurst(hurst, "c_hurst");
  return std::sqrt(2.0 * hurst * std::tgamma(1.5 - hurst) * std::tgamma(hurst + 0.5) / std::tgamma(2.0 - 2.0 * hurst));
}

double kernel_k(double t, double s, double hurst, const NumericConfig& cfg) {
  check_hurst(hurst, "kernel_k");
  if (!(t >= 0.0 && t <= 1.0) || !(s <= 1.0)) throw DomainError("kernel_k: t, s must lie in [0,1]");
  if (!(s > 0.0)) throw DomainError("kernel_k: s must be positive");
  if (s > t) return 0.0;
  if (hurst == 0.5) return 1.0;
  if (s == t) {
    if (hurst > 0.5) return 0.0;
    throw DomainError("kernel_k: kernel is singular at s = t for hurst < 1/2");
  }
  const double a = hurst - 0.5;
  return c_hurst(hurst) / std::tgamma(hurst + 0.5) * std::pow(t - s, a) *
         gauss_2f1(a, -a, hurst + 0.5, 1.0 - t / s, cfg);
}

double kernel_covariance_quadrature(double s, double t, double hurst, std::size_t n) {
  check_hurst(hurst, "kernel_covariance_quadrature");
  if (n == 0) throw DomainError("kernel_covariance_quadrature: n must be positive");
  const double m = std::min(s, t);
  const double h = 1.0 / static_cast<double>(n);
  double q = 0.0;
  if (hurst <= 0.5) {
    for (std::size_t j = 0; j < n; ++j) {
      const double u = (static_cast<double>(j) + 0.5) * h;
      if (u >= m) break;
      q += kernel_k(t, u, hurst) * kernel_k(s, u, hurst) * h;
    }
    return q;
  }
  const double A = c_hurst(hurst) * std::tgamma(1.0 - 2.0 * hurst) / std::tgamma(0.5 - hurst);
  const double p = 2.0 * hurst - 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = static_cast<double>(j) * h;
    const double u = lo + 0.5 * h;
    if (u >= m) break;
    const double hi = lo + h;
    const double up = std::pow(u, p);
    const double St = std::pow(u, 0.5 * p) * kernel_k(t, u, hurst) - A * up;
    const double Ss = std::pow(u, 0.5 * p) * kernel_k(s, u, hurst) - A * up;
    q += St * Ss * power_integral(-p, lo, hi) + A * (St + Ss) * h + A * A * power_integral(p, lo, hi);
  }
  return q;
}

CovMatrix covariance_matrix(std::size_t n_steps, double hurst) {
  check_hurst(hurst, "covariance_matrix");
  if (n_steps == 0) throw DomainError("covariance_matrix: n_steps must be positive");
  CovMatrix c{hurst, n_steps, std::vector<double>(n_steps * n_steps)};
  const double dn = static_cast<double>(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      const double v = covariance(static_cast<double>(k + 1) / dn, static_cast<double>(j + 1) / dn, hurst);
      c.entries[k * n_steps + j] = v;
      c.entries[j * n_steps + k] = v;
    }
  }
  return c;
}

VolterraTable::VolterraTable(std::size_t n_steps, double hurst) : n_(n_steps), hurst_(hurst) {
  check_sampling(n_steps, hurst, 1, "VolterraTable");
  w_.assign(n_ * (n_ + 1) / 2, 1.0);
  if (hurst == 0.5) return;

  const double h = 1.0 / static_cast<double>(n_);
  const double p = 1.0 - 2.0 * hurst;
  std::vector<double> near_zero(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    const double lo = static_cast<double>(j) * h;
    const double mid = lo + 0.5 * h;
    near_zero[j] = std::sqrt(power_integral(p, lo, lo + h) / h / std::pow(mid, p));
  }
  // mean of x^{2H-1} over [0,h] against its value at h/2
  const double diagonal = std::sqrt(std::pow(2.0, -p) / (2.0 * hurst));

  for (std::size_t k = 1; k <= n_; ++k) {
    double* row = w_.data() + k * (k - 1) / 2;
    const double t = static_cast<double>(k) * h;
    double ss = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double mid = (static_cast<double>(j) + 0.5) * h;
      double w = kernel_k(t, mid, hurst) * near_zero[j];
      if (j + 1 == k) w *= diagonal;
      row[j] = w;
      ss += w * w * h;
    }
    const double scale = std::sqrt(std::pow(t, 2.0 * hurst) / ss);
    for (std::size_t j = 0; j < k; ++j) row[j] *= scale;
  }
}

std::shared_ptr<const VolterraTable> VolterraTable::get(std::size_t n_steps, double hurst) {
  check_sampling(n_steps, hurst, 1, "VolterraTable");
  return cached<VolterraTable>(n_steps, hurst);
}

GridFn VolterraTable::apply(const CellFn& x) const {
  if (x.n_cells() != n_) throw DomainError("VolterraTable::apply: grid mismatch");
  const std::size_t d = x.dim();
  std::vector<double> out((n_ + 1) * d, 0.0);
  for (std::size_t k = 1; k <= n_; ++k) {
    const auto r = row(k);
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += r[j] * x(j, c);
      out[k * d + c] = s;
    }
  }
  return GridFn(n_, d, std::move(out));
}

CholeskyFactor::CholeskyFactor(std::size_t n_steps, double hurst) : n_(n_steps), hurst_(hurst) {
  check_sampling(n_steps, hurst, 1, "CholeskyFactor");
  if (n_steps > kMaxCholeskySteps) {
    throw DomainError("CholeskyFactor: n_steps must be <= " + std::to_string(kMaxCholeskySteps));
  }
  const CovMatrix cov = covariance_matrix(n_steps, hurst);
  const Eigen::Map<const Eigen::MatrixXd> r(cov.entries.data(), static_cast<Eigen::Index>(n_),
                                            static_cast<Eigen::Index>(n_));
  for (double jitter = 1e-12; jitter <= 1e-8 * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd m = r;
    m.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::MatrixXd l = llt.matrixL();
    l_.resize(n_ * (n_ + 1) / 2);
    for (std::size_t k = 1; k <= n_; ++k) {
      for (std::size_t j = 0; j < k; ++j) {
        l_[k * (k - 1) / 2 + j] = l(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j));
      }
    }
    jitter_ = jitter;
    return;
  }
  throw NumericError("CholeskyFactor: factorization failed with jitter up to 1e-8 (n_steps = " +
                     std::to_string(n_steps) + ", hurst = " + std::to_string(hurst) + ")");
}

std::shared_ptr<const CholeskyFactor> CholeskyFactor::get(std::size_t n_steps, double hurst) {
  check_sampling(n_steps, hurst, 1, "CholeskyFactor");
  if (n_steps > kMaxCholeskySteps) {
    throw DomainError("CholeskyFactor: n_steps must be <= " + std::to_string(kMaxCholeskySteps));
  }
  return cached<CholeskyFactor>(n_steps, hurst);
}

GridFn CholeskyFactor::apply(const CellFn& xi) const {
  if (xi.n_cells() != n_) throw DomainError("CholeskyFactor::apply: grid mismatch");
  const std::size_t d = xi.dim();
  std::vector<double> out((n_ + 1) * d, 0.0);
  for (std::size_t k = 1; k <= n_; ++k) {
    const auto r = row(k);
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += r[j] * xi(j, c);
      out[k * d + c] = s;
    }
  }
  return GridFn(n_, d, std::move(out));
}

std::string to_string(Sampler s) { return s == Sampler::cholesky ? "cholesky" : "volterra"; }

Sampler sampler_from_string(const std::string& s) {
  if (s == "cholesky") return Sampler::cholesky;
  if (s == "volterra") return Sampler::volterra;
  throw DomainError("unknown sampler '" + s + "' (expected cholesky or volterra)");
}

CellFn draw_normals(std::size_t n_steps, std::size_t dim, std::uint64_t seed, std::uint64_t index) {
  NormalStream rng(seed, index);
  std::vector<double> v(n_steps * dim);
  for (double& x : v) x = rng();
  return CellFn(n_steps, dim, std::move(v));
}

FbmDraw draw_volterra(const VolterraTable& table, std::size_t dim, std::uint64_t seed, std::uint64_t index) {
  const CellFn xi = draw_normals(table.n_steps(), dim, seed, index);
  CellFn db = xi.scaled(std::sqrt(1.0 / static_cast<double>(table.n_steps())));
  GridFn path = table.apply(db);
  return {std::move(path), std::move(db)};
}

FbmDraw draw_cholesky(const CholeskyFactor& factor, std::size_t dim, std::uint64_t seed, std::uint64_t index) {
  CellFn xi = draw_normals(factor.n_steps(), dim, seed, index);
  GridFn path = factor.apply(xi);
  return {std::move(path), std::move(xi)};
}

namespace {

template <class Draw>
FbmBatch sample_batch(std::size_t n_steps, double hurst, std::size_t dim, std::size_t n_paths,
                      std::uint64_t seed, std::size_t workers, Sampler sampler, Draw draw) {
  FbmBatch b;
  b.hurst = hurst;
  b.n_steps = n_steps;
  b.dim = dim;
  b.seed = seed;
  b.sampler = sampler;
  b.paths.resize(n_paths);
  b.increments.resize(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t i) {
    FbmDraw d = draw(i);
    b.paths[i] = std::move(d.path);
    b.increments[i] = std::move(d.increments);
  });
  return b;
}

}  // namespace

FbmBatch sample_cholesky(std::size_t n_steps, double hurst, std::size_t dim, std::size_t n_paths,
                         std::uint64_t seed, std::size_t workers) {
  check_sampling(n_steps, hurst, dim, "sample_cholesky");
  const auto factor = CholeskyFactor::get(n_steps, hurst);
  return sample_batch(n_steps, hurst, dim, n_paths, seed, workers, Sampler::cholesky,
                      [&](std::size_t i) { return draw_cholesky(*factor, dim, seed, i); });
}

FbmBatch sample_volterra(std::size_t n_steps, double hurst, std::size_t dim, std::size_t n_paths,
                         std::uint64_t seed, std::size_t workers) {
  check_sampling(n_steps, hurst, dim, "sample_volterra");
  const auto table = VolterraTable::get(n_steps, hurst);
  return sample_batch(n_steps, hurst, dim, n_paths, seed, workers, Sampler::volterra,
                      [&](std::size_t i) { return draw_volterra(*table, dim, seed, i); });
}

}  // namespace fbmldp
