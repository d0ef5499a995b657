#pragma once

// Speed-adjusted infectiousness and per-timestamp bounded mean degree.
//
// The reshare increment of each schedule frame observed so far is min-max
// normalized; the normalized speed of the frame being observed scales the raw
// infectiousness estimate, and the scaled value bounds the mean degree so the
// branching process stays subcritical.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cascade.hpp"
#include "params.hpp"
#include "seismic.hpp"

namespace sharecast {

struct FrameSpeed {
  std::size_t frame = 0;
  double increment = 0.0;  // reshares gained inside the frame (up to t for the current one)
  double norm = 1.0;

  friend bool operator==(const FrameSpeed&, const FrameSpeed&) = default;
};

struct SpeedProfile {
  std::vector<FrameSpeed> frames;  // frames 0..current
  std::size_t current_frame = 0;
  double speed_norm = 1.0;  // normalized speed of the current frame
};

/// Min-max normalization; a constant sequence maps to all ones.
inline std::vector<double> normalize_speeds(std::span<const double> increments) {
  std::vector<double> out(increments.size(), 1.0);
  if (increments.empty()) return out;
  const auto [lo, hi] = std::minmax_element(increments.begin(), increments.end());
  const double min = *lo, max = *hi;
  if (max == min) return out;
  for (std::size_t i = 0; i < increments.size(); ++i)
    out[i] = (increments[i] - min) / (max - min);
  return out;
}

/// Per-frame reshare increments up to t. Frames are taken right-closed so the
/// increments partition R_t and, at a frame boundary, the frame just completed
/// is the current one. Only frames observed so far enter the normalization.
inline SpeedProfile speed_profile(const Cascade& c, const TimeframeSchedule& schedule, double t) {
  SpeedProfile sp;
  sp.current_frame = schedule.observed_frame(t);
  std::vector<double> inc;
  inc.reserve(sp.current_frame + 1);
  for (std::size_t f = 0; f <= sp.current_frame; ++f) {
    const double hi = std::min(schedule.end_s(f), t);
    const double lo_count = f == 0 ? 0.0 : static_cast<double>(c.reshares_until(schedule.start_s(f)));
    inc.push_back(static_cast<double>(c.reshares_until(hi)) - lo_count);
  }
  const auto norms = normalize_speeds(inc);
  sp.frames.reserve(inc.size());
  for (std::size_t f = 0; f < inc.size(); ++f) sp.frames.push_back({f, inc[f], norms[f]});
  sp.speed_norm = norms.back();
  return sp;
}

inline double adjust_p(double p_t, double speed_norm) {
  if (!(p_t >= 0.0)) throw invalid_argument("adjust_p: p must be non-negative");
  if (!(speed_norm >= 0.0 && speed_norm <= 1.0))
    throw invalid_argument("adjust_p: speed norm must lie in [0, 1]");
  return speed_norm * p_t;
}

/// Clamp the mean degree into the safe zone: p_adj * n <= 1 - eps.
inline double bound_degree(double n_init, double p_adj, double eps) {
  if (!(n_init > 0.0)) throw invalid_argument("bound_degree: n_init must be positive");
  if (!(p_adj >= 0.0)) throw invalid_argument("bound_degree: p must be non-negative");
  if (p_adj == 0.0) return n_init;
  const double limit = 1.0 - eps;
  double bound = limit / p_adj;
  while (p_adj * bound > limit) bound = std::nextafter(bound, 0.0);
  return std::min(n_init, bound);
}

/// Everything the enhanced model derives at one evaluation time.
struct AdjustedState {
  double r_t = 0.0;
  Exposure x;
  double p = 0.0;
  double speed_norm = 1.0;
  double p_adj = 0.0;
  double n_star = 0.0;
};

inline std::optional<AdjustedState> adjusted_state(const Cascade& c, double t, const ModelParams& params,
                                                   double n_init) {
  auto p = try_estimate_p(c, t, params.kernel, params.min_reshares);
  if (!p) return std::nullopt;
  AdjustedState s;
  s.r_t = static_cast<double>(c.reshares_until(t));
  s.x = exposure(c, t, params.kernel);
  s.p = *p;
  s.speed_norm = speed_profile(c, params.schedule, t).speed_norm;
  s.p_adj = adjust_p(s.p, s.speed_norm);
  s.n_star = bound_degree(n_init, s.p_adj, params.epsilon_subcritical);
  return s;
}

/// Enhanced model: speed-adjusted infectiousness with the bounded mean degree.
/// The bound already keeps p_adj * n* <= 1 - eps, so the final-size formula is
/// evaluated without a second margin and never reports Supercritical.
inline std::vector<PredictionPoint> weseer_series(const Cascade& c, std::span<const double> times,
                                                  const ModelParams& params, double n_init) {
  std::vector<PredictionPoint> out;
  out.reserve(times.size());
  for (double t : times) {
    PredictionPoint pt;
    pt.time_s = t;
    pt.model = ModelTag::weseer;
    pt.n_star_used = n_init;
    pt.r_t = static_cast<double>(c.reshares_until(t));
    if (auto s = adjusted_state(c, t, params, n_init)) {
      pt.p = s->p_adj;
      pt.n_star_used = s->n_star;
      pt.forecast = predict_final(s->r_t, s->x.n_t, s->x.n_t_eff, s->p_adj, s->n_star, 0.0);
    }
    out.push_back(pt);
  }
  return out;
}

/// Speed-adjusted infectiousness with the fixed default mean degree.
inline std::vector<PredictionPoint> speed_adjusted_series(const Cascade& c, std::span<const double> times,
                                                          const ModelParams& params) {
  std::vector<PredictionPoint> out;
  out.reserve(times.size());
  for (double t : times) {
    PredictionPoint pt;
    pt.time_s = t;
    pt.model = ModelTag::speed_adjusted;
    pt.n_star_used = params.n_star_default;
    pt.r_t = static_cast<double>(c.reshares_until(t));
    if (auto s = adjusted_state(c, t, params, params.n_star_default)) {
      pt.p = s->p_adj;
      pt.forecast = predict_final(s->r_t, s->x.n_t, s->x.n_t_eff, s->p_adj, params.n_star_default,
                                  params.epsilon_subcritical);
    }
    out.push_back(pt);
  }
  return out;
}

inline std::vector<PredictionPoint> predict_series(const Cascade& c, ModelTag model,
                                                   std::span<const double> times,
                                                   const ModelParams& params, double n_init) {
  switch (model) {
    case ModelTag::seismic: return seismic_series(c, times, params);
    case ModelTag::speed_adjusted: return speed_adjusted_series(c, times, params);
    case ModelTag::weseer: return weseer_series(c, times, params, n_init);
  }
  return {};
}

struct InfectiousnessSample {
  double time_s = 0.0;
  double r_t = 0.0;
  double n_t = 0.0;
  double n_t_eff = 0.0;
  std::optional<double> p_t;
  std::optional<double> lambda_t;  // per second
  double speed_norm = 1.0;
  std::optional<double> p_t_adj;
  std::optional<double> n_star_bound;  // (1 - eps) / p_t_adj, the edge of the safe zone
};

using InfectiousnessSeries = std::vector<InfectiousnessSample>;

inline InfectiousnessSeries infectiousness_series(const Cascade& c, std::span<const double> times,
                                                  const ModelParams& params) {
  InfectiousnessSeries out;
  out.reserve(times.size());
  for (double t : times) {
    InfectiousnessSample s;
    s.time_s = t;
    s.r_t = static_cast<double>(c.reshares_until(t));
    const Exposure x = exposure(c, t, params.kernel);
    s.n_t = x.n_t;
    s.n_t_eff = x.n_t_eff;
    s.speed_norm = speed_profile(c, params.schedule, t).speed_norm;
    if (auto p = try_estimate_p(c, t, params.kernel, params.min_reshares)) {
      s.p_t = *p;
      s.lambda_t = intensity(c, t, *p, params.kernel);
      s.p_t_adj = adjust_p(*p, s.speed_norm);
      if (*s.p_t_adj > 0.0)
        s.n_star_bound = bound_degree(std::numeric_limits<double>::max(), *s.p_t_adj,
                                      params.epsilon_subcritical);
    }
    out.push_back(s);
  }
  return out;
}

// -- mean-degree recommendation ---------------------------------------------

struct CandidateResult {
  double n_init = 0.0;
  std::vector<PredictionPoint> points;
  std::vector<double> apes;  // -1 where no prediction
  double mean_ape = std::numeric_limits<double>::infinity();  // over predicted times
};

struct Recommendation {
  double best_n_init = 0.0;
  std::vector<CandidateResult> candidates;  // grid order
};

inline std::vector<double> default_grid() { return {10, 20, 45, 100, 140, 200, 500, 1000}; }

/// Runs the enhanced model for every candidate initial mean degree and picks
/// the one with the lowest mean APE against `reference_size`; ties go to the
/// smaller candidate.
inline Recommendation recommend_degree(const Cascade& c, std::span<const double> grid,
                                       double reference_size, std::span<const double> times,
                                       const ModelParams& params) {
  if (grid.empty()) throw invalid_argument("recommend_degree: empty grid");
  if (!(reference_size > 0.0)) throw invalid_argument("recommend_degree: reference size must be positive");
  Recommendation rec;
  for (double n_init : grid) {
    CandidateResult cand;
    cand.n_init = n_init;
    cand.points = weseer_series(c, times, params, n_init);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& pt : cand.points) {
      if (pt.forecast.predicted()) {
        const double a = std::abs(pt.forecast.size - reference_size) / reference_size;
        cand.apes.push_back(a);
        sum += a;
        ++n;
      } else {
        cand.apes.push_back(-1.0);
      }
    }
    if (n > 0) cand.mean_ape = sum / static_cast<double>(n);
    rec.candidates.push_back(std::move(cand));
  }
  const CandidateResult* best = &rec.candidates.front();
  for (const auto& cand : rec.candidates) {
    if (cand.mean_ape < best->mean_ape ||
        (cand.mean_ape == best->mean_ape && cand.n_init < best->n_init))
      best = &cand;
  }
  rec.best_n_init = best->n_init;
  return rec;
}

}  // namespace sharecast
