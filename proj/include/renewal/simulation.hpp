#pragma once

// Monte Carlo side of the library: the coupled pair of backward renewal
// processes, coupling-epoch functionals, empirical TV distance to the
// stationary backward law, and the empirical Lorden check.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "renewal/coupling.hpp"
#include "renewal/law.hpp"
#include "renewal/rng.hpp"

namespace renewal {

/// One renewal of the lead process after T.
struct AttemptRecord {
  double time;      // t_i
  double age;       // B'_{t_i}: age of the other process
  bool in_window;   // event S_i: age <= Theta
  bool blocked;     // other process's next renewal already fixed by an earlier coupled draw
  bool attempted;   // coupled draw performed (in_window && !blocked)
  bool coincided;
  double kappa;     // overlap used for the draw (0 if none)
};

/// Resumable state of a coupled run.
struct CoupledState {
  double clock = 0.0;        // time of the lead's most recent renewal
  int lead = 0;              // 0: process started at b, 1: process started at b'
  double follower_last = 0.0;
  std::optional<double> follower_pending;  // next follower renewal fixed by a coupled draw
  std::optional<double> coupled_at;
  std::vector<AttemptRecord> attempt_log;
  std::uint64_t events = 0;
};

class CapExceededError : public std::runtime_error {
 public:
  CapExceededError(const std::string& what, CoupledState state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const CoupledState& state() const noexcept { return state_; }

 private:
  CoupledState state_;
};

struct PairOptions {
  std::uint64_t event_cap = 1'000'000;  // lead renewals per run
  bool keep_log = true;
};

/// One coupled run from ages (b, b'). Attempts happen at renewal times of the
/// lead process (the one renewing at T = max(t1, t1')) when the other
/// process has age <= Theta; the pair (next period, other's residual) is
/// drawn with the exact split of f against f_theta^W.
CoupledState simulate_pair(LawPtr law, double b, double b_prime, double threshold, UniformStream& rng,
                           const PairOptions& opt = {});

/// Continues a run interrupted by CapExceededError.
CoupledState resume_pair(LawPtr law, CoupledState state, double threshold, UniformStream& rng,
                         const PairOptions& opt = {});

struct Ages {
  double first;   // B_t of the process started at b
  double second;  // B'_t of the process started at b'
};

/// Ages of both processes at time `t`, with the coupling machinery on, or
/// with two independent processes when `coupling` is false.
Ages pair_ages_at(LawPtr law, double b, double b_prime, double threshold, double t, UniformStream& rng,
                  bool coupling = true);

/// B_t for a single process started with age b, at each of the sorted times.
std::vector<double> ages_at(const LawPtr& law, double b, const std::vector<double>& sorted_times,
                            UniformStream& rng);

struct AttemptStats {
  std::uint64_t lead_renewals = 0;
  std::uint64_t in_window = 0;
  std::uint64_t blocked = 0;
  std::uint64_t attempts = 0;
  std::uint64_t coincided = 0;
  double kappa_sum = 0.0;       // expected coincidences given the overlaps used
  double kappa_variance = 0.0;  // sum of kappa (1 - kappa)

  double window_rate() const;
  double success_rate() const;
};

struct TauBatch {
  std::vector<double> samples;
  AttemptStats stats;
};

/// N independent coupled runs; replica i uses stream (seed, i).
TauBatch simulate_tau(LawPtr law, double b, double b_prime, double threshold, std::size_t replicas,
                      std::uint64_t seed, const PairOptions& opt = {});

struct Estimate {
  double value;
  double std_error;  // jackknife
};

enum class Functional { power, exponential };

/// Sample mean of tau^order (power) or exp(order tau) (exponential).
Estimate estimate_tau_functional(const std::vector<double>& samples, Functional kind, double order);

struct TvEstimate {
  double t;
  double value;
  std::size_t bins;
  double bin_width;
  double noise_floor;  // mean + 3 sd of the estimator when B_t already follows the stationary law
};

/// 1/2 sum |p_hat - p| over equal-width bins on [0, U) plus an overflow bin.
/// This is an estimate of the TV distance restricted to the bin partition,
/// biased upward by sampling noise of order sqrt(bins / N).
double histogram_tv(const std::vector<double>& samples, const RenewalLaw& reference, std::size_t bins,
                    double upper);
double histogram_tv(const std::vector<double>& a, const std::vector<double>& b, std::size_t bins);

/// Empirical ||P(B_t) - P_B||_TV from B_0 = b at each time, N replicas.
/// `bins` = 0 selects ceil(N^{1/3}).
std::vector<TvEstimate> empirical_tv(LawPtr law, double b, const std::vector<double>& t_grid,
                                     std::size_t replicas, std::size_t bins, std::uint64_t seed);

struct LordenCheck {
  std::vector<double> times;
  std::vector<double> means;
  std::vector<double> std_errors;
  double sup_mean;
  double sup_time;
  double sup_std_error;
  double ratio;  // R
  bool pass;     // sup_mean <= R + 3 std_error
};

/// Estimates E B_t on a grid of `points` + 1 times over [0, horizon] from B_0 = 0.
LordenCheck lorden_check(LawPtr law, double horizon, std::size_t replicas, std::uint64_t seed,
                         int points = 50);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace renewal
