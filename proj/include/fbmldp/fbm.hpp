#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fbmldp/grid.hpp"

namespace fbmldp {

constexpr std::size_t kMaxFbmDim = 4;
constexpr std::size_t kMaxCholeskySteps = 4096;

/// R_H(s,t) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2 for s, t in [0,1].
double covariance(double s, double t, double hurst);

/// c_H = [2H Gamma(3/2-H) Gamma(H+1/2) / Gamma(2-2H)]^{1/2}.
double c_hurst(double hurst);

/// Volterra kernel
///   k_H(t,s) = c_H / Gamma(H+1/2) (t-s)^{H-1/2} F(H-1/2, 1/2-H, H+1/2; 1-t/s)
/// for 0 < s <= t <= 1, and 0 for s > t. At s = t the value is 0 for H > 1/2
/// and 1 for H = 1/2; for H < 1/2 the kernel is singular there (DomainError).
double kernel_k(double t, double s, double hurst, const NumericConfig& cfg = default_numeric_config());

/// int_0^{min(s,t)} k_H(t,u) k_H(s,u) du on n midpoint cells.
///
/// For H > 1/2 the kernel is split as k_H(t,u) = u^{1/2-H} S_t(u) + A u^{H-1/2}
/// with A = c_H Gamma(1-2H) / Gamma(1/2-H) (the u -> 0 behaviour); S_t is
/// sampled at the midpoints and the power factors are integrated exactly per
/// cell. Other H use the plain midpoint sum. Cells with midpoint >= min(s,t)
/// are dropped.
double kernel_covariance_quadrature(double s, double t, double hurst, std::size_t n);

/// Covariance of B^H at the nodes t_1..t_n, row-major n x n.
struct CovMatrix {
  double hurst = 0.0;
  std::size_t n = 0;
  std::vector<double> entries;
  double operator()(std::size_t k, std::size_t j) const noexcept { return entries[k * n + j]; }
};

CovMatrix covariance_matrix(std::size_t n_steps, double hurst);

/// Discrete Volterra map on a grid of n cells:
///   B^H(t_k) = sum_{j<k} w_{kj} dB_j,
/// with w_{kj} = k_H(t_k, s_j) at the cell midpoints s_j, corrected on the
/// first cells (u^{1-2H} behaviour) and on the diagonal cell ((t-u)^{2H-1}
/// behaviour) by the square root of cell-mean over midpoint value, and each
/// row rescaled so that h sum_j w_{kj}^2 = t_k^{2H}. For H = 1/2 all weights
/// are exactly 1.
///
/// The same weights are used for sampling, for K_H applied to control
/// densities and therefore for Girsanov shifts.
class VolterraTable {
 public:
  VolterraTable(std::size_t n_steps, double hurst);

  /// Shared, lazily built table; thread-safe.
  static std::shared_ptr<const VolterraTable> get(std::size_t n_steps, double hurst);

  std::size_t n_steps() const noexcept { return n_; }
  double hurst() const noexcept { return hurst_; }
  /// Weights of node k (1..n) on cells 0..k-1.
  std::span<const double> row(std::size_t k) const noexcept {
    return {w_.data() + k * (k - 1) / 2, k};
  }

  /// sum_{j<k} w_{kj} x_j at every node for a cell-valued input, per component.
  GridFn apply(const CellFn& x) const;

 private:
  std::size_t n_;
  double hurst_;
  std::vector<double> w_;
};

/// Lower Cholesky factor of the node covariance (t_1..t_n), with diagonal
/// jitter 1e-12 escalated x10 up to 1e-8 on failure.
class CholeskyFactor {
 public:
  CholeskyFactor(std::size_t n_steps, double hurst);
  static std::shared_ptr<const CholeskyFactor> get(std::size_t n_steps, double hurst);

  std::size_t n_steps() const noexcept { return n_; }
  double hurst() const noexcept { return hurst_; }
  double jitter() const noexcept { return jitter_; }
  /// Row k-1 of L for node t_k, entries 0..k-1.
  std::span<const double> row(std::size_t k) const noexcept {
    return {l_.data() + k * (k - 1) / 2, k};
  }
  GridFn apply(const CellFn& xi) const;

 private:
  std::size_t n_;
  double hurst_;
  double jitter_ = 0.0;
  std::vector<double> l_;
};

enum class Sampler { cholesky, volterra };

std::string to_string(Sampler s);
Sampler sampler_from_string(const std::string& s);

/// Sampled fBm paths with the noise that generated them.
/// For the Volterra sampler `increments` are the Brownian increments dB_j
/// (variance 1/n); for the Cholesky sampler they are the standard normal
/// vectors xi with path = L xi.
struct FbmBatch {
  double hurst = 0.0;
  std::size_t n_steps = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  Sampler sampler = Sampler::volterra;
  std::vector<GridFn> paths;
  std::vector<CellFn> increments;

  std::size_t size() const noexcept { return paths.size(); }
};

struct FbmDraw {
  GridFn path;
  CellFn increments;
};

/// Standard normals of path `index` under `seed`, cell-major (n x dim).
CellFn draw_normals(std::size_t n_steps, std::size_t dim, std::uint64_t seed, std::uint64_t index);

/// Single paths; path `index` is the same as in the batch samplers.
FbmDraw draw_volterra(const VolterraTable& table, std::size_t dim, std::uint64_t seed, std::uint64_t index);
FbmDraw draw_cholesky(const CholeskyFactor& factor, std::size_t dim, std::uint64_t seed, std::uint64_t index);

/// `workers` affects throughput only.
FbmBatch sample_cholesky(std::size_t n_steps, double hurst, std::size_t dim, std::size_t n_paths,
                         std::uint64_t seed, std::size_t workers = 1);
FbmBatch sample_volterra(std::size_t n_steps, double hurst, std::size_t dim, std::size_t n_paths,
                         std::uint64_t seed, std::size_t workers = 1);

/// Batch CSV: one comment header line
///   # fbmldp-batch v1 hurst=<H> n_steps=<n> dim=<d> n_paths=<N> seed=<s> sampler=<name>
/// then a column header "t,p0_c0,p0_c1,...", one row per node, 17 significant digits.
/// Increments are not part of the CSV; read_batch_csv returns paths only.
void write_batch_csv(std::ostream& os, const FbmBatch& batch);
FbmBatch read_batch_csv(std::istream& is);

/// Binary increments, little endian:
///   "FBMI" | u32 version=1 | u32 sampler (0 cholesky, 1 volterra) | u64 n_paths |
///   u64 n_steps | u64 dim | f64 hurst | u64 seed | f64[n_paths * n_steps * dim]
/// Paths are rebuilt from the increments on read.
void write_increments_binary(std::ostream& os, const FbmBatch& batch);
FbmBatch read_increments_binary(std::istream& is);

}  // namespace fbmldp
