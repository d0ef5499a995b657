#pragma once

// Self-exciting point-process baseline: exposure accounting, infectiousness
// estimate, intensity, likelihood and the branching-process final-size formula.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cascade.hpp"
#include "kernel.hpp"
#include "params.hpp"

namespace sharecast {

struct Exposure {
  double n_t = 0.0;      // total exposure, root included
  double n_t_eff = 0.0;  // kernel-weighted ("effective") exposure
};

inline Exposure exposure(const Cascade& c, double t, const KernelParams& k) {
  Exposure x;
  for (const auto& e : c.events) {
    if (e.time_s > t) break;
    const auto n = static_cast<double>(e.degree);
    x.n_t += n;
    x.n_t_eff += n * phi_mass(0.0, t - e.time_s, k);
  }
  return x;
}

/// r_t / n_t_eff, or nothing when fewer than `min_reshares` reshares are observed.
inline std::optional<double> try_estimate_p(const Cascade& c, double t, const KernelParams& k,
                                            std::int64_t min_reshares = 1) {
  const auto r = static_cast<double>(c.reshares_until(t));
  if (r < static_cast<double>(min_reshares) || r == 0.0) return std::nullopt;
  const double ne = exposure(c, t, k).n_t_eff;
  if (!(ne > 0.0)) return std::nullopt;
  return r / ne;
}

/// Maximum-likelihood infectiousness at time t.
inline double estimate_p(const Cascade& c, double t, const KernelParams& k,
                         std::int64_t min_reshares = 1) {
  auto p = try_estimate_p(c, t, k, min_reshares);
  if (!p) throw insufficient_data("not enough reshares to estimate infectiousness");
  return *p;
}

/// Reshare rate per second at time t for infectiousness p.
inline double intensity(const Cascade& c, double t, double p, const KernelParams& k) {
  if (!(p >= 0.0)) throw invalid_argument("intensity: p must be non-negative");
  double sum = 0.0;
  for (const auto& e : c.events) {
    if (e.time_s > t) break;
    sum += static_cast<double>(e.degree) * phi(t - e.time_s, k);
  }
  return p * sum;
}

/// Log-likelihood of the reshares observed up to t. The intensity at a reshare
/// only counts events that precede it in cascade order, so no share triggers
/// itself. Quadratic in the number of reshares.
inline double log_likelihood(const Cascade& c, double t, double p, const KernelParams& k) {
  if (!(p > 0.0)) throw invalid_argument("log_likelihood: p must be positive");
  const std::size_t r = c.reshares_until(t);
  if (r == 0) throw insufficient_data("log_likelihood: no reshares observed");
  double ll = 0.0;
  for (std::size_t i = 1; i <= r; ++i) {
    const double ti = c.events[i].time_s;
    double rate = 0.0;
    for (std::size_t j = 0; j < i; ++j)
      rate += static_cast<double>(c.events[j].degree) * phi(ti - c.events[j].time_s, k);
    ll += std::log(p * rate);
  }
  return ll - p * exposure(c, t, k).n_t_eff;
}

enum class Regime { predicted, supercritical, insufficient_data };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::predicted: return "predicted";
    case Regime::supercritical: return "supercritical";
    case Regime::insufficient_data: return "insufficient_data";
  }
  return "insufficient_data";
}

struct Forecast {
  Regime regime = Regime::insufficient_data;
  double size = 0.0;  // meaningful only when regime == predicted

  bool predicted() const { return regime == Regime::predicted; }
  std::optional<double> value() const {
    return predicted() ? std::optional<double>(size) : std::nullopt;
  }

  static Forecast of(double v) { return {Regime::predicted, v}; }
  static Forecast supercritical() { return {Regime::supercritical, 0.0}; }
  static Forecast insufficient() { return {Regime::insufficient_data, 0.0}; }

  friend bool operator==(const Forecast&, const Forecast&) = default;
};

/// Final size R_inf = r_t + p (n_t - n_t_eff) / (1 - p n*), or Supercritical
/// once p n* reaches 1 - eps.
inline Forecast predict_final(double r_t, double n_t, double n_t_eff, double p, double n_star,
                              double eps) {
  if (!(n_star > 0.0)) throw invalid_argument("predict_final: n_star must be positive");
  if (!(p >= 0.0)) throw invalid_argument("predict_final: p must be non-negative");
  if (n_t_eff > n_t * (1.0 + 1e-9)) throw invalid_argument("predict_final: n_t_eff exceeds n_t");
  if (p * n_star >= 1.0 - eps) return Forecast::supercritical();
  const double unseen = std::max(0.0, n_t - n_t_eff);
  return Forecast::of(r_t + p * unseen / (1.0 - p * n_star));
}

enum class ModelTag { seismic, speed_adjusted, weseer };

inline std::string_view to_string(ModelTag m) {
  switch (m) {
    case ModelTag::seismic: return "seismic";
    case ModelTag::speed_adjusted: return "speed_adjusted";
    case ModelTag::weseer: return "weseer";
  }
  return "seismic";
}

inline std::optional<ModelTag> model_from_string(std::string_view s) {
  if (s == "seismic") return ModelTag::seismic;
  if (s == "speed_adjusted" || s == "speed-only" || s == "speed_only") return ModelTag::speed_adjusted;
  if (s == "weseer") return ModelTag::weseer;
  return std::nullopt;
}

struct PredictionPoint {
  double time_s = 0.0;
  Forecast forecast;
  double n_star_used = 0.0;
  ModelTag model = ModelTag::seismic;
  double r_t = 0.0;
  double p = 0.0;  // infectiousness fed to the final-size formula (0 when undefined)

  friend bool operator==(const PredictionPoint&, const PredictionPoint&) = default;
};

/// Baseline predictions with the fixed network mean degree.
inline std::vector<PredictionPoint> seismic_series(const Cascade& c, std::span<const double> times,
                                                   const ModelParams& params) {
  std::vector<PredictionPoint> out;
  out.reserve(times.size());
  for (double t : times) {
    PredictionPoint pt;
    pt.time_s = t;
    pt.model = ModelTag::seismic;
    pt.n_star_used = params.n_star_default;
    pt.r_t = static_cast<double>(c.reshares_until(t));
    if (auto p = try_estimate_p(c, t, params.kernel, params.min_reshares)) {
      const Exposure x = exposure(c, t, params.kernel);
      pt.p = params.alpha(t) * *p;
      pt.forecast = predict_final(pt.r_t, x.n_t, x.n_t_eff, pt.p, params.n_star_default,
                                  params.epsilon_subcritical);
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace sharecast
