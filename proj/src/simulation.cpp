#include "renewal/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "renewal/errors.hpp"

namespace renewal {

namespace {

constexpr std::uint64_t kTvChannel = 1;
constexpr std::uint64_t kLordenChannel = 2;

// Runs fn(i) for i in [0, n) over the available hardware threads. Each index
// writes only its own output slot, so results do not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Event loop of the coupled pair. When `horizon` is set it records, for each
// process, the last renewal at or before the horizon and stops as soon as
// both ages at the horizon are known.
class PairEngine {
 public:
  PairEngine(LawPtr law, double threshold, UniformStream& rng, const PairOptions& opt,
             std::optional<double> horizon, double b, double b_prime)
      : law_(std::move(law)), threshold_(threshold), rng_(rng), opt_(opt), horizon_(horizon) {
    last_[0] = -b;
    last_[1] = -b_prime;
  }

  CoupledState start(double b, double b_prime) {
    CoupledState st;
    if (b == b_prime) {
      st.coupled_at = 0.0;
      return st;
    }
    const double t0 = sample(*forward_law(law_, b), rng_);
    const double t1 = sample(*forward_law(law_, b_prime), rng_);
    renew(0, t0);
    renew(1, t1);
    st.lead = t0 >= t1 ? 0 : 1;
    st.clock = std::max(t0, t1);
    st.follower_last = std::min(t0, t1);
    if (t0 == t1) {
      st.coupled_at = t0;
      return st;
    }
    // Follower renews with fresh periods until it would pass T; the crossing
    // draw is independent of everything else and is discarded.
    const int fol = 1 - st.lead;
    double next = st.follower_last + sample(*law_, rng_);
    while (next < st.clock) {
      st.follower_last = next;
      renew(fol, next);
      next = st.follower_last + sample(*law_, rng_);
    }
    if (next == st.clock) st.coupled_at = st.clock;
    return st;
  }

  void run(CoupledState& st) {
    while (!st.coupled_at) {
      if (horizon_ && st.clock > *horizon_) return;
      if (st.events >= opt_.event_cap) {
        throw CapExceededError("coupled run exceeded " + std::to_string(opt_.event_cap) +
                                   " lead renewals without coupling",
                               st);
      }
      ++st.events;
      step(st);
    }
  }

  void finish_common(const CoupledState& st) {
    if (!horizon_ || !st.coupled_at || *st.coupled_at > *horizon_) return;
    double last = *st.coupled_at;
    renew(0, last);
    renew(1, last);
    while (true) {
      const double next = last + sample(*law_, rng_);
      if (next > *horizon_) break;
      last = next;
      renew(0, last);
      renew(1, last);
    }
  }

  double age_at_horizon(int who) const { return *horizon_ - last_[who]; }

 private:
  void renew(int who, double time) {
    if (horizon_ && time <= *horizon_) last_[who] = std::max(last_[who], time);
  }

  void step(CoupledState& st) {
    const int lead = st.lead;
    const int fol = 1 - lead;
    const double age = st.clock - st.follower_last;
    AttemptRecord rec{st.clock, age, age <= threshold_, st.follower_pending.has_value(), false, false, 0.0};

    double lead_next = 0.0;
    double fol_next = 0.0;
    bool fol_fixed = false;  // follower's next renewal came from a coupled draw
    if (rec.in_window && !rec.blocked) {
      const auto fwd = forward_law(law_, age);
      const OverlapSplit sp(law_, fwd);
      const double u = rng_.next();
      const double u_common = rng_.next();
      const double u_residual = rng_.next();
      const CoupledPair pair = coupled_sample(sp, u, u_common, u_residual);
      rec.attempted = true;
      rec.coincided = pair.coincided;
      rec.kappa = sp.kappa();
      if (opt_.keep_log) st.attempt_log.push_back(rec);
      if (pair.coincided) {
        st.coupled_at = st.clock + pair.first;
        renew(0, *st.coupled_at);
        renew(1, *st.coupled_at);
        return;
      }
      lead_next = st.clock + pair.first;
      fol_next = st.clock + pair.second;
      fol_fixed = true;
    } else {
      if (opt_.keep_log) st.attempt_log.push_back(rec);
      lead_next = st.clock + sample(*law_, rng_);
      if (st.follower_pending) {
        fol_next = *st.follower_pending;
        fol_fixed = true;
      } else {
        fol_next = st.clock + sample(*forward_law(law_, age), rng_);
      }
    }
    st.follower_pending.reset();

    while (fol_next < lead_next) {
      st.follower_last = fol_next;
      renew(fol, fol_next);
      fol_next = st.follower_last + sample(*law_, rng_);
      fol_fixed = false;
    }
    st.clock = lead_next;
    renew(lead, lead_next);
    if (fol_next == lead_next) {
      st.follower_last = fol_next;
      st.coupled_at = lead_next;
      return;
    }
    if (fol_fixed) st.follower_pending = fol_next;
  }

  LawPtr law_;
  double threshold_;
  UniformStream& rng_;
  PairOptions opt_;
  std::optional<double> horizon_;
  double last_[2];
};

void require_nonnegative(double x, const char* name) {
  if (!(x >= 0.0)) throw DomainError(std::string(name) + " must be >= 0");
}

}  // namespace

CoupledState simulate_pair(LawPtr law, double b, double b_prime, double threshold, UniformStream& rng,
                           const PairOptions& opt) {
  require_nonnegative(b, "b");
  require_nonnegative(b_prime, "b'");
  if (!(threshold > 0.0)) throw DomainError("Theta must be positive");
  PairEngine engine(law, threshold, rng, opt, std::nullopt, b, b_prime);
  CoupledState st = engine.start(b, b_prime);
  engine.run(st);
  return st;
}

CoupledState resume_pair(LawPtr law, CoupledState state, double threshold, UniformStream& rng,
                         const PairOptions& opt) {
  PairOptions extended = opt;
  extended.event_cap = state.events + opt.event_cap;
  PairEngine engine(std::move(law), threshold, rng, extended, std::nullopt, 0.0, 0.0);
  engine.run(state);
  return state;
}

Ages pair_ages_at(LawPtr law, double b, double b_prime, double threshold, double t, UniformStream& rng,
                  bool coupling) {
  require_nonnegative(t, "t");
  if (!coupling) {
    const double first = ages_at(law, b, {t}, rng).front();
    const double second = ages_at(law, b_prime, {t}, rng).front();
    return {first, second};
  }
  if (b == b_prime) {
    const double a = ages_at(law, b, {t}, rng).front();
    return {a, a};
  }
  PairEngine engine(law, threshold, rng, PairOptions{.keep_log = false}, t, b, b_prime);
  CoupledState st = engine.start(b, b_prime);
  engine.run(st);
  engine.finish_common(st);
  return {engine.age_at_horizon(0), engine.age_at_horizon(1)};
}

std::vector<double> ages_at(const LawPtr& law, double b, const std::vector<double>& sorted_times,
                            UniformStream& rng) {
  std::vector<double> out;
  out.reserve(sorted_times.size());
  double last = -b;
  double next = sample(*forward_law(law, b), rng);
  for (double t : sorted_times) {
    while (next <= t) {
      last = next;
      next = last + sample(*law, rng);
    }
    out.push_back(t - last);
  }
  return out;
}

double AttemptStats::window_rate() const {
  return lead_renewals == 0 ? 0.0 : static_cast<double>(in_window) / static_cast<double>(lead_renewals);
}

double AttemptStats::success_rate() const {
  return attempts == 0 ? 0.0 : static_cast<double>(coincided) / static_cast<double>(attempts);
}

TauBatch simulate_tau(LawPtr law, double b, double b_prime, double threshold, std::size_t replicas,
                      std::uint64_t seed, const PairOptions& opt) {
  if (replicas == 0) throw DomainError("need at least one replica");
  std::vector<CoupledState> runs(replicas);
  parallel_for(replicas, [&](std::size_t i) {
    UniformStream rng = UniformStream::for_replica(seed, i);
    runs[i] = simulate_pair(law, b, b_prime, threshold, rng, opt);
  });
  TauBatch batch;
  batch.samples.reserve(replicas);
  for (const CoupledState& st : runs) {
    batch.samples.push_back(*st.coupled_at);
    for (const AttemptRecord& r : st.attempt_log) {
      AttemptStats& s = batch.stats;
      ++s.lead_renewals;
      s.in_window += r.in_window;
      s.blocked += r.blocked;
      if (r.attempted) {
        ++s.attempts;
        s.coincided += r.coincided;
        s.kappa_sum += r.kappa;
        s.kappa_variance += r.kappa * (1.0 - r.kappa);
      }
    }
  }
  return batch;
}

Estimate estimate_tau_functional(const std::vector<double>& samples, Functional kind, double order) {
  if (samples.empty()) throw DomainError("cannot estimate a functional from no samples");
  if (!(order >= 0.0)) throw DomainError("functional order must be >= 0");
  std::vector<double> values;
  values.reserve(samples.size());
  for (double tau : samples) {
    if (!(tau >= 0.0)) throw DomainError("coupling epochs must be >= 0");
    const double v = kind == Functional::power ? std::pow(tau, order) : std::exp(order * tau);
    if (!std::isfinite(v)) {
      throw DivergenceError("exp(beta tau) overflows for beta = " + std::to_string(order) +
                                "; rate too large for the sampled epochs",
                            order);
    }
    values.push_back(v);
  }
  const auto n = static_cast<double>(values.size());
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / n;
  if (values.size() == 1) return {mean, 0.0};
  // Jackknife: leave-one-out means (total - v) / (n - 1) average back to the mean.
  double ss = 0.0;
  for (double v : values) {
    const double loo = (total - v) / (n - 1.0);
    ss += (loo - mean) * (loo - mean);
  }
  return {mean, std::sqrt((n - 1.0) / n * ss)};
}

namespace {

// Reference probabilities of the bins [kw, (k+1)w), k < bins, and of the overflow bin [U, inf).
std::vector<double> bin_probabilities(const RenewalLaw& reference, std::size_t bins, double upper) {
  const double width = upper / static_cast<double>(bins);
  std::vector<double> p(bins + 1);
  double previous = 0.0;
  for (std::size_t k = 0; k <= bins; ++k) {
    const double edge = k < bins ? reference.cdf(width * static_cast<double>(k + 1)) : 1.0;
    p[k] = edge - previous;
    previous = edge;
  }
  return p;
}

double histogram_tv(const std::vector<double>& samples, const std::vector<double>& p, double upper) {
  const std::size_t bins = p.size() - 1;
  const double width = upper / static_cast<double>(bins);
  std::vector<double> counts(bins + 1, 0.0);
  for (double x : samples) {
    const auto k = x >= upper ? bins : static_cast<std::size_t>(x / width);
    counts[std::min(k, bins)] += 1.0;
  }
  const auto n = static_cast<double>(samples.size());
  double tv = 0.0;
  for (std::size_t k = 0; k <= bins; ++k) tv += std::abs(counts[k] / n - p[k]);
  return 0.5 * tv;
}

// Mean plus three standard deviations of the histogram estimator when the
// samples do follow the reference law, from the normal approximation
// E|p_hat - p| = sqrt(2 p (1 - p) / (pi N)).
double null_noise_floor(const std::vector<double>& p, std::size_t n) {
  const double nn = static_cast<double>(n);
  double mean = 0.0;
  double var = 0.0;
  for (double pk : p) {
    const double v = pk * (1.0 - pk) / nn;
    mean += std::sqrt(2.0 * v / std::numbers::pi);
    var += v * (1.0 - 2.0 / std::numbers::pi);
  }
  return 0.5 * mean + 1.5 * std::sqrt(var);
}

}  // namespace

double histogram_tv(const std::vector<double>& samples, const RenewalLaw& reference, std::size_t bins,
                    double upper) {
  if (samples.empty() || bins == 0 || !(upper > 0.0)) throw DomainError("histogram TV needs samples, bins and U > 0");
  return histogram_tv(samples, bin_probabilities(reference, bins, upper), upper);
}

double histogram_tv(const std::vector<double>& a, const std::vector<double>& b, std::size_t bins) {
  if (a.empty() || b.empty() || bins == 0) throw DomainError("histogram TV needs two samples and bins");
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  const double lo = std::min(*amin, *bmin);
  const double hi = std::max(*amax, *bmax);
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  const auto bin_of = [&](double x) {
    return std::min(bins - 1, static_cast<std::size_t>((x - lo) / width));
  };
  std::vector<double> ca(bins, 0.0);
  std::vector<double> cb(bins, 0.0);
  for (double x : a) ca[bin_of(x)] += 1.0;
  for (double x : b) cb[bin_of(x)] += 1.0;
  double tv = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    tv += std::abs(ca[k] / static_cast<double>(a.size()) - cb[k] / static_cast<double>(b.size()));
  }
  return 0.5 * tv;
}

std::vector<TvEstimate> empirical_tv(LawPtr law, double b, const std::vector<double>& t_grid,
                                     std::size_t replicas, std::size_t bins, std::uint64_t seed) {
  require_nonnegative(b, "b");
  if (replicas == 0) throw DomainError("need at least one replica");
  for (double t : t_grid) {
    if (!(t > 0.0)) throw DomainError("TV times must be positive");
  }
  if (bins == 0) bins = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(replicas))));

  std::vector<double> sorted = t_grid;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::vector<double>> ages(replicas);
  parallel_for(replicas, [&](std::size_t i) {
    UniformStream rng = UniformStream::for_replica(seed, i, kTvChannel);
    ages[i] = ages_at(law, b, sorted, rng);
  });

  const auto stationary = stationary_backward(law);
  // Upper edge: the stationary (1 - 1/N) quantile; mass beyond it goes to the overflow bin.
  const double upper = stationary->quantile(1.0 - 1.0 / static_cast<double>(std::max<std::size_t>(replicas, 2)));
  const std::vector<double> p = bin_probabilities(*stationary, bins, upper);
  const double floor = null_noise_floor(p, replicas);
  std::vector<TvEstimate> out;
  for (double t : t_grid) {
    const auto j = static_cast<std::size_t>(std::distance(sorted.begin(), std::find(sorted.begin(), sorted.end(), t)));
    std::vector<double> column(replicas);
    for (std::size_t i = 0; i < replicas; ++i) column[i] = ages[i][j];
    out.push_back({t, histogram_tv(column, p, upper), bins, upper / static_cast<double>(bins), floor});
  }
  return out;
}

LordenCheck lorden_check(LawPtr law, double horizon, std::size_t replicas, std::uint64_t seed, int points) {
  if (!(horizon > 0.0) || replicas == 0 || points < 1) {
    throw DomainError("Lorden check needs a positive horizon, replicas and grid points");
  }
  LordenCheck out{};
  for (int k = 0; k <= points; ++k) out.times.push_back(horizon * k / points);
  std::vector<std::vector<double>> ages(replicas);
  parallel_for(replicas, [&](std::size_t i) {
    UniformStream rng = UniformStream::for_replica(seed, i, kLordenChannel);
    ages[i] = ages_at(law, 0.0, out.times, rng);
  });
  const auto n = static_cast<double>(replicas);
  out.sup_mean = -1.0;
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    double sum = 0.0;
    double sum2 = 0.0;
    for (const auto& row : ages) {
      sum += row[k];
      sum2 += row[k] * row[k];
    }
    const double mean = sum / n;
    const double var = replicas > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)) : 0.0;
    out.means.push_back(mean);
    out.std_errors.push_back(std::sqrt(var / n));
    if (mean > out.sup_mean) {
      out.sup_mean = mean;
      out.sup_time = out.times[k];
      out.sup_std_error = out.std_errors.back();
    }
  }
  out.ratio = moment(*law, 2.0) / moment(*law, 1.0);
  out.pass = out.sup_mean <= out.ratio + 3.0 * out.sup_std_error;
  return out;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS statistic needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace renewal
