#pragma once

// Synthetic cascades from a generation-by-generation branching process.
//
// Each node of degree n exposes n friends; each friend independently reshares
// with probability p(t_parent + s) at a kernel-distributed delay s. With a
// piecewise-constant p this is sampled exactly: the child count is
// Binomial(n, p_bar) with p_bar = integral of p(t0 + s) phi(s) ds over the
// window left before the horizon, and each delay is drawn by picking a
// segment proportionally to its share of p_bar and inverting the kernel CDF
// inside it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cascade.hpp"
#include "kernel.hpp"

namespace sharecast {

struct PSegment {
  double start_s = 0.0;
  double p = 0.0;

  friend bool operator==(const PSegment&, const PSegment&) = default;
};

/// Piecewise-constant infectiousness; the last segment extends to infinity.
using PProfile = std::vector<PSegment>;

inline PProfile constant_profile(double p) { return {{0.0, p}}; }

/// High infectiousness right after posting, then a quick decay.
inline PProfile immediate_outbreak_profile(double p) {
  return {{0.0, p}, {3600.0, 0.35 * p}, {4 * 3600.0, 0.1 * p}};
}

/// Low start, a peak a few hours in, then a recession.
inline PProfile rise_and_recession_profile(double p) {
  return {{0.0, 0.3 * p}, {2 * 3600.0, p}, {8 * 3600.0, 0.3 * p}, {24 * 3600.0, 0.1 * p}};
}

/// Alternating bursts that keep the article alive for days.
inline PProfile wave_like_profile(double p) {
  PProfile out;
  for (int k = 0; k < 14; ++k) out.push_back({k * 6 * 3600.0, k % 2 == 0 ? p : 0.3 * p});
  out.push_back({14 * 6 * 3600.0, 0.1 * p});
  return out;
}

struct ConstantDegree {
  std::int64_t d = 0;
  friend bool operator==(const ConstantDegree&, const ConstantDegree&) = default;
};
struct LogNormalDegree {
  double mu = 0.0;
  double sigma = 1.0;
  friend bool operator==(const LogNormalDegree&, const LogNormalDegree&) = default;
};
struct EmpiricalDegree {
  std::vector<std::int64_t> values;
  friend bool operator==(const EmpiricalDegree&, const EmpiricalDegree&) = default;
};
using DegreeDist = std::variant<ConstantDegree, LogNormalDegree, EmpiricalDegree>;

inline double mean_degree(const DegreeDist& d) {
  struct {
    double operator()(const ConstantDegree& c) const { return static_cast<double>(c.d); }
    double operator()(const LogNormalDegree& l) const { return std::exp(l.mu + 0.5 * l.sigma * l.sigma); }
    double operator()(const EmpiricalDegree& e) const {
      if (e.values.empty()) return 0.0;
      double s = 0;
      for (auto v : e.values) s += static_cast<double>(v);
      return s / static_cast<double>(e.values.size());
    }
  } visitor;
  return std::visit(visitor, d);
}

struct SimSpec {
  KernelParams kernel = default_kernel();
  PProfile p_profile = constant_profile(0.0);
  DegreeDist degrees = ConstantDegree{100};
  std::optional<DegreeDist> root_degree;  // publisher audience; defaults to `degrees`
  double horizon_s = 7 * 86400.0;         // may be +infinity
  std::uint64_t seed = 1;
  std::size_t max_events = 1'000'000;
  std::string article_id = "sim";
  std::int64_t post_time = 0;

  friend bool operator==(const SimSpec&, const SimSpec&) = default;
};

inline void validate(const SimSpec& s) {
  validate(s.kernel);
  if (s.p_profile.empty() || s.p_profile.front().start_s != 0.0)
    throw invalid_argument("p_profile must start at 0");
  for (std::size_t i = 0; i < s.p_profile.size(); ++i) {
    if (!(s.p_profile[i].p >= 0.0 && s.p_profile[i].p <= 1.0))
      throw invalid_argument("p_profile values must lie in [0, 1]");
    if (i > 0 && !(s.p_profile[i].start_s > s.p_profile[i - 1].start_s))
      throw invalid_argument("p_profile starts must be increasing");
  }
  if (!(s.horizon_s > 0.0)) throw invalid_argument("horizon must be positive");
  if (s.max_events == 0) throw invalid_argument("max_events must be positive");
  auto check = [](const DegreeDist& d) {
    if (auto* c = std::get_if<ConstantDegree>(&d); c && c->d < 0)
      throw invalid_argument("degree must be non-negative");
    if (auto* l = std::get_if<LogNormalDegree>(&d); l && !(l->sigma >= 0.0))
      throw invalid_argument("lognormal sigma must be non-negative");
    if (auto* e = std::get_if<EmpiricalDegree>(&d)) {
      if (e->values.empty()) throw invalid_argument("empirical degree list is empty");
      for (auto v : e->values)
        if (v < 0) throw invalid_argument("degree must be non-negative");
    }
  };
  check(s.degrees);
  if (s.root_degree) check(*s.root_degree);
}

/// Thrown when a run exceeds max_events; carries the partial cascade.
class cap_exceeded : public std::runtime_error {
 public:
  explicit cap_exceeded(Cascade partial)
      : std::runtime_error("simulation exceeded max_events"), partial_(std::move(partial)) {}
  const Cascade& partial() const noexcept { return partial_; }

 private:
  Cascade partial_;
};

namespace detail {

inline std::int64_t draw_degree(const DegreeDist& d, std::mt19937_64& rng) {
  struct {
    std::mt19937_64& rng;
    std::int64_t operator()(const ConstantDegree& c) const { return c.d; }
    std::int64_t operator()(const LogNormalDegree& l) const {
      std::lognormal_distribution<double> dist(l.mu, l.sigma);
      return std::max<std::int64_t>(0, std::llround(dist(rng)));
    }
    std::int64_t operator()(const EmpiricalDegree& e) const {
      std::uniform_int_distribution<std::size_t> pick(0, e.values.size() - 1);
      return e.values[pick(rng)];
    }
  } visitor{rng};
  return std::visit(visitor, d);
}

inline Channel draw_channel(std::mt19937_64& rng) {
  static constexpr double weights[] = {0.5, 0.2, 0.25, 0.03, 0.02};
  std::discrete_distribution<int> dist(std::begin(weights), std::end(weights));
  return kAllChannels[dist(rng)];
}

// Kernel mass, scaled by p, of every profile segment intersected with the
// delay window [0, limit] of a node born at t0. Masses are relative to the
// normalized kernel.
struct SegmentWeights {
  std::vector<double> lo, hi, weight;
  double total = 0.0;
};

inline SegmentWeights segment_weights(const PProfile& prof, double t0, double limit,
                                      const KernelParams& k) {
  SegmentWeights w;
  for (std::size_t i = 0; i < prof.size(); ++i) {
    const double seg_end = i + 1 < prof.size() ? prof[i + 1].start_s : std::numeric_limits<double>::infinity();
    const double a = std::max(0.0, prof[i].start_s - t0);
    const double b = std::min(limit, seg_end - t0);
    if (!(b > a) || prof[i].p == 0.0) continue;
    const double m = prof[i].p * phi_mass(a, b, k);
    w.lo.push_back(a);
    w.hi.push_back(b);
    w.weight.push_back(m);
    w.total += m;
  }
  return w;
}

}  // namespace detail

inline Cascade simulate(const SimSpec& spec) {
  validate(spec);
  const KernelParams k = normalize(spec.kernel);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Cascade c;
  c.article_id = spec.article_id;
  c.post_time = spec.post_time;
  ShareEvent root;
  root.event_id = 0;
  root.user_id = "u0";
  root.degree = detail::draw_degree(spec.root_degree ? *spec.root_degree : spec.degrees, rng);
  root.channel = Channel::other;
  c.events.push_back(root);

  auto finish = [&](Cascade& out) {
    // Re-number in time order so ids follow canonical order.
    std::vector<std::size_t> order(out.events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin() + 1, order.end(), [&](std::size_t a, std::size_t b) {
      return out.events[a].time_s < out.events[b].time_s;
    });
    std::vector<EventId> new_id(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) new_id[order[i]] = static_cast<EventId>(i);
    std::vector<ShareEvent> sorted;
    sorted.reserve(order.size());
    for (std::size_t i : order) {
      ShareEvent e = out.events[i];
      e.event_id = new_id[i];
      if (e.parent_id) e.parent_id = new_id[static_cast<std::size_t>(*e.parent_id)];
      e.user_id = "u" + std::to_string(e.event_id);
      sorted.push_back(std::move(e));
    }
    out.events = std::move(sorted);
    out.final_size = static_cast<std::int64_t>(out.reshare_count());
  };

  std::deque<std::size_t> frontier{0};
  while (!frontier.empty()) {
    const std::size_t idx = frontier.front();
    frontier.pop_front();
    const double t0 = c.events[idx].time_s;
    const std::int64_t n = c.events[idx].degree;
    if (n <= 0) continue;
    const auto w = detail::segment_weights(spec.p_profile, t0, spec.horizon_s - t0, k);
    if (!(w.total > 0.0)) continue;
    std::binomial_distribution<std::int64_t> count(n, std::min(1.0, w.total));
    const std::int64_t kids = count(rng);
    if (kids == 0) continue;
    std::discrete_distribution<std::size_t> pick(w.weight.begin(), w.weight.end());
    for (std::int64_t j = 0; j < kids; ++j) {
      const std::size_t s = pick(rng);
      const double m_lo = phi_mass(0.0, w.lo[s], k);
      const double m_hi = m_lo + phi_mass(w.lo[s], w.hi[s], k);
      double delay = std::numeric_limits<double>::infinity();
      // Rounding at the very top of an unbounded window can land on the total mass.
      while (!std::isfinite(delay))
        delay = std::clamp(inverse_mass(m_lo + unit(rng) * (m_hi - m_lo), k), w.lo[s], w.hi[s]);
      ShareEvent e;
      e.event_id = static_cast<EventId>(c.events.size());
      e.parent_id = c.events[idx].event_id;
      e.degree = detail::draw_degree(spec.degrees, rng);
      e.channel = detail::draw_channel(rng);
      e.parent_channel = c.events[idx].channel;
      e.time_s = t0 + delay;
      c.events.push_back(std::move(e));
      frontier.push_back(c.events.size() - 1);
      if (c.events.size() - 1 > spec.max_events) {
        finish(c);
        throw cap_exceeded(std::move(c));
      }
    }
  }
  finish(c);
  return c;
}

struct MixtureComponent {
  double weight = 1.0;
  SimSpec spec;
  double p_scale_min = 1.0;  // per-article multiplier drawn uniformly from [min, max]
  double p_scale_max = 1.0;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Deterministic synthetic corpus; article i draws its component and p scale
/// from a stream seeded by (seed, i).
inline std::vector<Cascade> simulate_corpus(std::size_t n, const std::vector<MixtureComponent>& mixture,
                                            std::uint64_t seed) {
  if (n == 0) throw invalid_argument("simulate_corpus: n must be positive");
  if (mixture.empty()) throw invalid_argument("simulate_corpus: empty mixture");
  std::vector<double> weights;
  for (const auto& m : mixture) {
    if (!(m.weight >= 0.0)) throw invalid_argument("mixture weights must be non-negative");
    if (!(m.p_scale_min >= 0.0 && m.p_scale_max >= m.p_scale_min))
      throw invalid_argument("mixture p scale range is invalid");
    weights.push_back(m.weight);
  }
  std::vector<Cascade> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t article_seed = detail::splitmix64(seed ^ detail::splitmix64(i));
    std::mt19937_64 rng(article_seed);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const auto& comp = mixture[pick(rng)];
    std::uniform_real_distribution<double> scale_dist(comp.p_scale_min, comp.p_scale_max);
    const double scale = comp.p_scale_min == comp.p_scale_max ? comp.p_scale_min : scale_dist(rng);
    SimSpec spec = comp.spec;
    for (auto& seg : spec.p_profile) seg.p = std::min(1.0, seg.p * scale);
    spec.seed = detail::splitmix64(article_seed);
    std::ostringstream id;
    id << "a" << std::setw(5) << std::setfill('0') << i;
    spec.article_id = id.str();
    spec.post_time = comp.spec.post_time + static_cast<std::int64_t>(i) * 60;
    out.push_back(simulate(spec));
  }
  return out;
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo mean and standard error of the final reshare count; run r uses
/// seed spec.seed + r.
inline McEstimate mc_final_size(const SimSpec& spec, std::size_t n_runs) {
  if (n_runs == 0) throw invalid_argument("mc_final_size: n_runs must be positive");
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t r = 0; r < n_runs; ++r) {
    SimSpec run = spec;
    run.seed = spec.seed + r;
    const auto v = static_cast<double>(simulate(run).reshare_count());
    sum += v;
    sum_sq += v * v;
  }
  const auto n = static_cast<double>(n_runs);
  McEstimate est;
  est.mean = sum / n;
  if (n_runs > 1) {
    const double var = std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0));
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

}  // namespace sharecast
