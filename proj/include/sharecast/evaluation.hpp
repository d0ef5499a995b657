#pragma once

// Accuracy metrics and the corpus-level experiment harness.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cascade.hpp"
#include "params.hpp"
#include "seismic.hpp"
#include "weseer.hpp"

namespace sharecast {

/// APE reported when a model gives no prediction.
inline constexpr double kFailedApe = -1.0;

inline double ape(double predicted, double truth) {
  if (!(truth > 0.0)) throw invalid_argument("ape: truth must be positive");
  return std::abs(predicted - truth) / truth;
}

inline double ape(const Forecast& f, double truth) {
  if (!(truth > 0.0)) throw invalid_argument("ape: truth must be positive");
  return f.predicted() ? ape(f.size, truth) : kFailedApe;
}

struct ApePair {
  double ape1 = kFailedApe;  // against the size at the end of the observation day
  double ape2 = kFailedApe;  // against the final size
  double diff = 0.0;         // ape1 - ape2; ~0 when the cascade is mostly over after day one

  friend bool operator==(const ApePair&, const ApePair&) = default;
};

inline ApePair ape_pair(const Forecast& f, double one_day_size, double final_size) {
  if (!(one_day_size > 0.0) || !(final_size > 0.0))
    throw invalid_argument("ape_pair: sizes must be positive");
  if (!f.predicted()) return {};
  ApePair out;
  out.ape1 = ape(f.size, one_day_size);
  out.ape2 = ape(f.size, final_size);
  out.diff = out.ape1 - out.ape2;
  return out;
}

inline ApePair ape_pair(double predicted, double one_day_size, double final_size) {
  return ape_pair(Forecast::of(predicted), one_day_size, final_size);
}

namespace detail {

// Top-m ids by value (desc), ties by id (asc).
inline std::vector<std::string> top_m(std::vector<std::pair<std::string, double>> ranked, std::size_t m) {
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < m; ++i) out.push_back(ranked[i].first);
  return out;
}

}  // namespace detail

/// Fraction of the true top-m articles that also appear in the predicted top-m.
/// Unpredicted articles rank below every predicted one and never count as covered.
inline double breakout_coverage(const std::map<std::string, std::optional<double>>& predictions,
                                const std::map<std::string, double>& truths, std::size_t m) {
  if (m == 0) throw invalid_argument("breakout_coverage: m must be positive");
  if (m > truths.size()) throw invalid_argument("breakout_coverage: m exceeds corpus size");
  std::vector<std::pair<std::string, double>> pred, truth(truths.begin(), truths.end());
  for (const auto& [id, v] : predictions)
    if (v) pred.emplace_back(id, *v);
  const auto top_pred = detail::top_m(std::move(pred), m);
  const auto top_true = detail::top_m(std::move(truth), m);
  const std::unordered_set<std::string> want(top_true.begin(), top_true.end());
  std::size_t hit = 0;
  for (const auto& id : top_pred) hit += want.count(id);
  return static_cast<double>(hit) / static_cast<double>(m);
}

/// Share of articles whose predicted side of the median final size matches the
/// true side. The median is the lower middle order statistic of the truths, so
/// the metric is unchanged by any increasing transform applied to both inputs.
inline double median_accuracy(std::span<const std::optional<double>> predictions,
                              std::span<const double> truths) {
  if (predictions.size() != truths.size()) throw invalid_argument("median_accuracy: length mismatch");
  if (truths.size() < 2) throw invalid_argument("median_accuracy: need at least two articles");
  std::vector<double> sorted(truths.begin(), truths.end());
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[(sorted.size() - 1) / 2];
  std::size_t right = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!predictions[i]) continue;
    if ((*predictions[i] >= median) == (truths[i] >= median)) ++right;
  }
  return static_cast<double>(right) / static_cast<double>(truths.size());
}

/// APE histogram bins: a failure bin for -1 and half-open intervals between edges,
/// the last one unbounded.
struct ApeBins {
  std::vector<double> edges{0.0, 0.25, 0.5, 0.75, 1.0};

  std::size_t count() const { return edges.size() + 1; }

  std::size_t index(double a) const {
    if (a < 0.0) return 0;
    auto it = std::upper_bound(edges.begin(), edges.end(), a);
    return static_cast<std::size_t>(it - edges.begin());
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out{"-1"};
    auto fmt = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    for (std::size_t i = 0; i < edges.size(); ++i)
      out.push_back(i + 1 < edges.size() ? "[" + fmt(edges[i]) + "," + fmt(edges[i + 1]) + ")"
                                         : ">=" + fmt(edges[i]));
    return out;
  }
};

struct ApeHistogram {
  std::vector<double> times_s;
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;  // [time][bin]
};

/// apes[article][time] -> per-time bin counts.
inline ApeHistogram ape_histogram(const std::vector<std::vector<double>>& apes,
                                  std::span<const double> times, const ApeBins& bins = {}) {
  ApeHistogram h;
  h.times_s.assign(times.begin(), times.end());
  h.labels = bins.labels();
  h.counts.assign(times.size(), std::vector<std::size_t>(bins.count(), 0));
  for (const auto& row : apes) {
    if (row.size() != times.size()) throw invalid_argument("ape_histogram: ragged input");
    for (std::size_t j = 0; j < row.size(); ++j) ++h.counts[j][bins.index(row[j])];
  }
  return h;
}

/// Runs one model over a corpus and bins the APE against each final size.
inline ApeHistogram ape_over_time(const std::vector<Cascade>& corpus, ModelTag model,
                                  std::span<const double> times, const ModelParams& params,
                                  double n_init, const ApeBins& bins = {}) {
  std::vector<std::vector<double>> apes;
  for (const auto& c : corpus) {
    if (!c.final_size || *c.final_size <= 0) throw invalid_argument("ape_over_time: article lacks a final size");
    std::vector<double> row;
    for (const auto& pt : predict_series(c, model, times, params, n_init))
      row.push_back(ape(pt.forecast, static_cast<double>(*c.final_size)));
    apes.push_back(std::move(row));
  }
  return ape_histogram(apes, times, bins);
}

// -- corpus report ------------------------------------------------------------

struct ModelTimeStats {
  double time_s = 0.0;
  std::size_t predicted = 0;
  std::size_t failed = 0;
  double mean_ape = std::numeric_limits<double>::quiet_NaN();  // over predicted articles
  double coverage = 0.0;
  double median_accuracy = 0.0;
};

struct ModelReport {
  ModelTag model = ModelTag::seismic;
  ApeHistogram histogram;
  std::vector<ModelTimeStats> per_time;
};

struct EvaluationReport {
  std::size_t articles = 0;
  std::size_t top_m = 0;
  double n_init = 0.0;
  std::vector<ModelReport> models;
};

/// Articles without a positive final size are skipped.
inline EvaluationReport evaluate_corpus(const std::vector<Cascade>& corpus, std::span<const ModelTag> models,
                                        std::span<const double> times, const ModelParams& params,
                                        double n_init, std::size_t top_m, const ApeBins& bins = {}) {
  std::vector<const Cascade*> scored;
  for (const auto& c : corpus)
    if (c.final_size && *c.final_size > 0) scored.push_back(&c);
  if (top_m == 0 || top_m > scored.size()) throw invalid_argument("evaluate_corpus: top_m out of range");

  EvaluationReport rep;
  rep.articles = scored.size();
  rep.top_m = top_m;
  rep.n_init = n_init;
  std::map<std::string, double> truths;
  std::vector<double> truth_list;
  for (const auto* c : scored) {
    truths[c->article_id] = static_cast<double>(*c->final_size);
    truth_list.push_back(static_cast<double>(*c->final_size));
  }

  for (ModelTag model : models) {
    std::vector<std::vector<PredictionPoint>> series;
    for (const auto* c : scored) series.push_back(predict_series(*c, model, times, params, n_init));
    ModelReport mr;
    mr.model = model;
    std::vector<std::vector<double>> apes;
    for (std::size_t a = 0; a < scored.size(); ++a) {
      std::vector<double> row;
      for (const auto& pt : series[a]) row.push_back(ape(pt.forecast, truth_list[a]));
      apes.push_back(std::move(row));
    }
    mr.histogram = ape_histogram(apes, times, bins);
    for (std::size_t j = 0; j < times.size(); ++j) {
      ModelTimeStats st;
      st.time_s = times[j];
      std::map<std::string, std::optional<double>> preds;
      std::vector<std::optional<double>> pred_list;
      double sum = 0.0;
      for (std::size_t a = 0; a < scored.size(); ++a) {
        const auto v = series[a][j].forecast.value();
        preds[scored[a]->article_id] = v;
        pred_list.push_back(v);
        if (v) {
          ++st.predicted;
          sum += apes[a][j];
        } else {
          ++st.failed;
        }
      }
      if (st.predicted > 0) st.mean_ape = sum / static_cast<double>(st.predicted);
      st.coverage = breakout_coverage(preds, truths, top_m);
      if (scored.size() >= 2) st.median_accuracy = median_accuracy(pred_list, truth_list);
      mr.per_time.push_back(st);
    }
    rep.models.push_back(std::move(mr));
  }
  return rep;
}

/// Tab-separated APE table: one row per (model, time), one column per bin.
inline void write_ape_table(std::ostream& os, const EvaluationReport& rep) {
  if (rep.models.empty()) return;
  os << "model\ttime_min";
  for (const auto& l : rep.models.front().histogram.labels) os << '\t' << l;
  os << "\tmean_ape\tcoverage\tmedian_accuracy\n";
  for (const auto& m : rep.models) {
    for (std::size_t j = 0; j < m.per_time.size(); ++j) {
      os << to_string(m.model) << '\t' << m.per_time[j].time_s / 60.0;
      for (auto n : m.histogram.counts[j]) os << '\t' << n;
      os << '\t' << m.per_time[j].mean_ape << '\t' << m.per_time[j].coverage << '\t'
         << m.per_time[j].median_accuracy << '\n';
    }
  }
}

}  // namespace sharecast
