#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbmldp/cmspace.hpp"
#include "fbmldp/optimize.hpp"
#include "fbmldp/sde.hpp"

namespace fbmldp {

/// Coefficients, initial point and discretization shared by every workflow.
struct SdeProblem {
  CoefficientSet coeffs;
  std::vector<double> x0;
  double hurst = 0.75;
  std::size_t n_steps = 256;
};

/// Throws DomainError unless hurst is in (1/2,1) and the sizes agree.
void validate(const SdeProblem& p);

enum class EventKind { terminal_exceedance, sup_exceedance, terminal_target };
std::string to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

/// terminal_exceedance: X^1_1 >= a (any real a).
/// sup_exceedance:      max_t |X_t - phi_t| >= a, a >= 0, phi the zero-control skeleton.
/// terminal_target:     |X_1 - y| <= r, r > 0.
struct EventSpec {
  EventKind kind = EventKind::terminal_exceedance;
  double a = 0.0;
  std::vector<double> y;
  double r = 0.0;

  static EventSpec terminal_exceedance(double a) { return {EventKind::terminal_exceedance, a, {}, 0.0}; }
  static EventSpec sup_exceedance(double a) { return {EventKind::sup_exceedance, a, {}, 0.0}; }
  static EventSpec terminal_target(std::vector<double> y, double r) {
    return {EventKind::terminal_target, 0.0, std::move(y), r};
  }
};

void validate(const EventSpec& e, std::size_t m);

/// Distance-like constraint violation in the event's own units; 0 exactly
/// when the path lies in the event. `reference` is phi (used by sup_exceedance).
double event_violation(const EventSpec& e, const GridFn& path, const GridFn& reference);

struct RateOptions {
  std::size_t n_ctrl = 16;
  std::size_t stages = 5;
  double mu0 = 10.0;
  double mu_factor = 10.0;
  std::size_t starts = 3;          // zero, random, sine bump (in this order)
  double random_amplitude = 0.5;
  double residual_tol = 1e-3;
  std::uint64_t seed = 0;          // random start
  std::size_t workers = 1;
  BfgsOptions bfgs;
};

struct RateDiagnostics {
  std::vector<double> penalty_schedule;
  std::vector<double> start_values;       // value after restoration, +inf if infeasible
  std::vector<std::size_t> iterations;    // BFGS iterations summed over stages, per start
  std::vector<std::size_t> evaluations;   // objective evaluations per start
  std::vector<bool> converged;            // last stage converged, per start
  std::size_t restarts = 0;
  std::size_t best_start = 0;
  std::string message;
};

struct RateResult {
  double value = 0.0;  // 1/2 cm_norm(control)^2, +inf when infeasible
  CmControl control;
  double residual = 0.0;
  bool feasible = false;
  RateDiagnostics diagnostics;
};

/// Piecewise-constant controls on n_ctrl knots, density cell j belonging to
/// knot floor(j n_ctrl / n).
CmControl knot_control(std::span<const double> theta, std::size_t n_ctrl, std::size_t n_steps, std::size_t dim,
                       double hurst);

/// Minimizes 1/2 |v_dot|^2 over knot controls subject to skeleton(v) in the
/// event: exterior quadratic penalty mu * violation^2 with mu0, mu0*factor, ...
/// over `stages`, BFGS per stage, multi-start. A penalty solution that is
/// still outside the event is scaled up by bisection until it is inside.
/// Returns the zero control at once when it is feasible. When no start ends
/// feasible the result has feasible = false and value = +inf.
RateResult rate_minimize(const SdeProblem& p, const EventSpec& e, const RateOptions& opts = {});

/// Bounded path functional h with known bounds inf_h <= h <= sup_h.
struct Functional {
  std::string name;
  std::map<std::string, double> params;
  std::function<double(const GridFn& path, std::span<const double> x0)> eval;
  double inf_h = 0.0;
  double sup_h = 0.0;
};

/// Registry (component 0 of the path, u = X_1 - x0):
///   zero                           h = 0
///   constant [c=1]                 h = c
///   terminal_gain [cap=1]          h = min(u^+, cap)
///   terminal_shortfall [level=1, cap=1]  h = min((level - u)^+, cap)
///   sup_capped [cap=1]             h = min(max_t |X_t - x0|, cap)
Functional make_functional(const std::string& name, const std::map<std::string, double>& params = {});
std::vector<std::string> functional_names();

struct LaplaceVariationalResult {
  double value = 0.0;
  CmControl control;
  bool converged = false;
  std::size_t evaluations = 0;
  std::string message;
};

/// inf over knot controls of h(skeleton(v)) + 1/2 |v_dot|^2 (deterministic
/// controls only, hence an upper bound for the infimum over adapted ones).
LaplaceVariationalResult laplace_variational(const SdeProblem& p, const Functional& h,
                                             const RateOptions& opts = {});

struct LaplaceMcResult {
  double value = 0.0;  // -eps log mean exp(-h/eps), clamped to [inf_h, sup_h]
  double std_err = 0.0;
  std::size_t n_samples = 0;
};

/// Small-noise solves on Volterra fBm paths (path i from stream (seed, i)).
LaplaceMcResult laplace_mc(const SdeProblem& p, const Functional& h, double eps, std::size_t n_samples,
                           std::uint64_t seed, std::size_t workers = 1);

struct GirsanovWeight {
  double log_weight = 0.0;
  double weight = 1.0;  // exp(log_weight); may overflow to inf, log_weight stays finite
};

/// exp{ -(1/sqrt(eps)) sum_j v_dot_j . dB_j - (1/(2 eps)) |v_dot|^2 }.
GirsanovWeight girsanov_weight(const CmControl& ctrl, double eps, const CellFn& bm_increments);

struct IsResult {
  double p_hat = 0.0;
  double std_err = 0.0;
  double log_p_hat = 0.0;  // -inf when nothing hit
  std::size_t n_samples = 0;
  std::size_t n_hits = 0;
  bool zero_hits = false;
  std::string message;
  CmControl tilt;
  std::optional<RateResult> rate;  // set when the tilt was computed here
};

/// Importance sampling of P(X^eps in event): fBm paths shifted by
/// v / sqrt(eps), small-noise solve, indicator times Girsanov weight,
/// accumulated in log space. Without `ctrl` the tilt is the rate_minimize
/// control (the zero control when the rate problem is infeasible).
IsResult is_probability(const SdeProblem& p, const EventSpec& e, double eps, std::size_t n_samples,
                        std::uint64_t seed, const std::optional<CmControl>& ctrl = std::nullopt,
                        const RateOptions& rate_opts = {}, std::size_t workers = 1);

struct ScalingRow {
  double eps = 0.0;
  double p_hat = 0.0;
  double std_err = 0.0;
  double minus_eps_log_p = 0.0;
  double rate = 0.0;
  double gap = 0.0;  // minus_eps_log_p - rate
  std::size_t n_hits = 0;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  RateResult rate;
};

/// eps_list must be strictly decreasing. One rate_minimize, then one
/// is_probability per eps tilted by its control, all with the same seed.
ScalingTable scaling_table(const SdeProblem& p, const EventSpec& e, const std::vector<double>& eps_list,
                           std::size_t n_samples, std::uint64_t seed, const RateOptions& rate_opts = {},
                           std::size_t workers = 1);

}  // namespace fbmldp
