#pragma once

// JSON API over an immutable corpus. Transport-independent: `handle` maps a
// request to a response, and the serve tool binds it to an HTTP server.
//
//   GET  /articles
//   GET  /articles/{id}/prediction?model=all|seismic|speed-only|weseer&n_init=&times=
//   POST /articles/{id}/whatif            {"frame": k, "t": minutes}
//   GET  /articles/{id}/propagation?frame=k
//   GET  /articles/{id}/recommendation?grid=10,20,...&times=
//   GET  /sessions/{sid}/history
//   POST /sessions/{sid}/history          {"n_init", "timestamp"?, "article_id"?, "series_ref"?}
//
// Times in query strings and bodies are minutes since posting.

#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascade.hpp"
#include "evaluation.hpp"
#include "io.hpp"
#include "params.hpp"
#include "seismic.hpp"
#include "weseer.hpp"
#include "whatif.hpp"

namespace sharecast {

struct Request {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// JSON numbers cannot carry inf/nan; those become null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json opt_number(const std::optional<double>& v) { return v ? number_or_null(*v) : json(nullptr); }

inline json encode(const PredictionPoint& pt) {
  return json{{"time_s", pt.time_s},
              {"outcome", std::string(to_string(pt.forecast.regime))},
              {"predicted_final", pt.forecast.predicted() ? number_or_null(pt.forecast.size) : json(nullptr)},
              {"n_star", number_or_null(pt.n_star_used)},
              {"model", std::string(to_string(pt.model))},
              {"r_t", pt.r_t},
              {"p", pt.p}};
}

inline json encode(const InfectiousnessSample& s) {
  return json{{"time_s", s.time_s},       {"r_t", s.r_t},
              {"n_t", s.n_t},             {"n_t_eff", s.n_t_eff},
              {"p_t", opt_number(s.p_t)}, {"lambda_t", opt_number(s.lambda_t)},
              {"speed_norm", s.speed_norm}, {"p_t_adj", opt_number(s.p_t_adj)},
              {"n_star_bound", opt_number(s.n_star_bound)}};
}

inline json encode(const WhatIfReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back(json{{"event_id", e.event_id},
                           {"user_id", e.user_id},
                           {"time_s", e.time_s},
                           {"degree", e.degree},
                           {"big_node", e.big_node},
                           {"delete_p", opt_number(e.delete_p)},
                           {"delete_delta_p", opt_number(e.delete_delta_p)},
                           {"delete_bound", opt_number(e.delete_bound)},
                           {"delete_sign", e.delete_p ? json(std::string(to_string(e.delete_sign))) : json(nullptr)},
                           {"delete_status", e.delete_p ? "ok" : "insufficient_data"},
                           {"add_p", opt_number(e.add_p)},
                           {"add_bound", opt_number(e.add_bound)},
                           {"add_sign", std::string(to_string(e.add_sign))}});
  }
  return json{{"frame", r.frame},
              {"t_eval_s", r.t_eval},
              {"baseline_p", r.baseline_p},
              {"baseline_bound", number_or_null(r.baseline_bound)},
              {"entries", entries}};
}

inline json encode(const EvaluationReport& rep) {
  json models = json::array();
  for (const auto& m : rep.models) {
    json per_time = json::array();
    for (std::size_t j = 0; j < m.per_time.size(); ++j) {
      const auto& st = m.per_time[j];
      per_time.push_back(json{{"time_s", st.time_s},
                              {"predicted", st.predicted},
                              {"failed", st.failed},
                              {"mean_ape", number_or_null(st.mean_ape)},
                              {"coverage", st.coverage},
                              {"median_accuracy", st.median_accuracy},
                              {"ape_bins", m.histogram.counts[j]}});
    }
    models.push_back(json{{"model", std::string(to_string(m.model))}, {"bins", m.histogram.labels}, {"per_time", per_time}});
  }
  return json{{"articles", rep.articles}, {"top_m", rep.top_m}, {"n_init", rep.n_init}, {"models", models}};
}

/// Parses "a,b,c" into numbers.
inline std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw invalid_argument("not a number: '" + item + "'");
    }
    if (used != item.size() || !std::isfinite(v)) throw invalid_argument("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

/// Default evaluation times: every schedule boundary after 0, in seconds.
inline std::vector<double> boundary_times(const TimeframeSchedule& s) {
  std::vector<double> out;
  for (std::size_t k = 1; k < s.boundaries_min().size(); ++k) out.push_back(s.boundaries_min()[k] * 60.0);
  return out;
}

class Service {
 public:
  Service(std::vector<Cascade> corpus, Config config, UserTable users = {}, HistoryStore* history = nullptr)
      : corpus_(std::move(corpus)), config_(std::move(config)), params_(config_.model_params()),
        users_(std::move(users)), history_(history ? history : &own_history_) {
    for (std::size_t i = 0; i < corpus_.size(); ++i) index_[corpus_[i].article_id] = i;
  }

  Response handle(const Request& req) {
    try {
      return route(req);
    } catch (const insufficient_data& e) {
      return error(422, "insufficient_data", e.what());
    } catch (const invalid_argument& e) {
      return error(400, "bad_request", e.what());
    } catch (const out_of_window& e) {
      return error(400, "bad_request", e.what());
    } catch (const json::exception& e) {
      return error(400, "bad_request", e.what());
    } catch (const std::exception& e) {
      return error(500, "internal", e.what());
    }
  }

  const std::vector<Cascade>& corpus() const { return corpus_; }

 private:
  static Response ok(const json& j) { return {200, j.dump(), "application/json"}; }

  static Response error(int status, const std::string& kind, const std::string& msg) {
    return {status, json{{"error", kind}, {"message", msg}}.dump(), "application/json"};
  }

  static std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string p;
    while (std::getline(ss, p, '/'))
      if (!p.empty()) parts.push_back(p);
    return parts;
  }

  static std::optional<std::string> param(const Request& req, const std::string& key) {
    auto it = req.query.find(key);
    if (it == req.query.end() || it->second.empty()) return std::nullopt;
    return it->second;
  }

  static double number_param(const Request& req, const std::string& key, double fallback) {
    auto v = param(req, key);
    if (!v) return fallback;
    auto list = parse_number_list(*v);
    if (list.size() != 1) throw invalid_argument("parameter " + key + " must be a single number");
    return list.front();
  }

  std::vector<double> times_param(const Request& req) const {
    auto v = param(req, "times");
    if (!v) return boundary_times(params_.schedule);
    std::vector<double> out;
    for (double m : parse_number_list(*v)) {
      if (!(m >= 0.0) || m * 60.0 > params_.schedule.horizon_s()) throw invalid_argument("time outside observation window");
      out.push_back(m * 60.0);
    }
    if (!std::is_sorted(out.begin(), out.end())) throw invalid_argument("times must be sorted");
    return out;
  }

  Response route(const Request& req) {
    const auto parts = split_path(req.path);
    if (parts.size() == 1 && parts[0] == "articles" && req.method == "GET") return list_articles();
    if (parts.size() == 3 && parts[0] == "articles") {
      auto it = index_.find(parts[1]);
      if (it == index_.end()) return error(404, "not_found", "unknown article " + parts[1]);
      const Cascade& c = corpus_[it->second];
      if (parts[2] == "prediction" && req.method == "GET") return prediction(c, req);
      if (parts[2] == "whatif" && req.method == "POST") return whatif_view(c, req);
      if (parts[2] == "propagation" && req.method == "GET") return propagation(c, req);
      if (parts[2] == "recommendation" && req.method == "GET") return recommendation(c, req);
    }
    if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "history") {
      if (!valid_session_id(parts[1])) return error(400, "bad_request", "invalid session id");
      if (req.method == "GET") return history_list(parts[1]);
      if (req.method == "POST") return history_append(parts[1], req);
    }
    return error(404, "not_found", "no route for " + req.method + " " + req.path);
  }

  double one_day_size(const Cascade& c) const {
    return static_cast<double>(c.reshares_until(params_.schedule.horizon_s()));
  }

  Response list_articles() const {
    json arr = json::array();
    for (const auto& c : corpus_) {
      arr.push_back(json{{"id", c.article_id},
                         {"post_time", c.post_time},
                         {"observed_size", one_day_size(c)},
                         {"final_size", c.final_size ? json(*c.final_size) : json(nullptr)}});
    }
    return ok(json{{"articles", arr}});
  }

  Response prediction(const Cascade& c, const Request& req) const {
    const auto times = times_param(req);
    const double n_init = number_param(req, "n_init", config_.n_init);
    if (!(n_init > 0.0)) throw invalid_argument("n_init must be positive");
    std::vector<ModelTag> models;
    const std::string model = param(req, "model").value_or("all");
    if (model == "all") {
      models = {ModelTag::seismic, ModelTag::speed_adjusted, ModelTag::weseer};
    } else if (auto m = model_from_string(model)) {
      models = {*m};
    } else {
      throw invalid_argument("unknown model '" + model + "'");
    }

    json series = json::array();
    for (const auto& s : infectiousness_series(c, times, params_)) series.push_back(encode(s));
    const double day = one_day_size(c);
    json preds = json::object();
    for (ModelTag m : models) {
      json pts = json::array();
      for (const auto& pt : predict_series(c, m, times, params_, n_init)) {
        json j = encode(pt);
        if (day > 0.0 && c.final_size && *c.final_size > 0) {
          const auto pair = ape_pair(pt.forecast, day, static_cast<double>(*c.final_size));
          j["ape1"] = pair.ape1;
          j["ape2"] = pair.ape2;
          j["ape_diff"] = pair.diff;
        } else {
          j["ape1"] = j["ape2"] = j["ape_diff"] = nullptr;
        }
        pts.push_back(std::move(j));
      }
      preds[std::string(to_string(m))] = std::move(pts);
    }
    return ok(json{{"article_id", c.article_id},
                   {"n_init", n_init},
                   {"epsilon", params_.epsilon_subcritical},
                   {"one_day_size", day},
                   {"final_size", c.final_size ? json(*c.final_size) : json(nullptr)},
                   {"series", series},
                   {"predictions", preds}});
  }

  Response whatif_view(const Cascade& c, const Request& req) const {
    const json body = req.body.empty() ? json::object() : json::parse(req.body);
    if (!body.is_object() || !body.contains("frame") || !body["frame"].is_number_integer())
      throw invalid_argument("body needs an integer 'frame'");
    const auto frame_raw = body["frame"].get<long long>();
    if (frame_raw < 0) throw invalid_argument("frame must be non-negative");
    const auto frame = static_cast<std::size_t>(frame_raw);
    if (frame >= params_.schedule.frame_count()) throw invalid_argument("frame index out of range");
    double t = params_.schedule.end_s(frame);
    if (body.contains("t")) {
      if (!body["t"].is_number()) throw invalid_argument("'t' must be a number of minutes");
      t = body["t"].get<double>() * 60.0;
    }
    if (!(t >= 0.0) || t > params_.schedule.horizon_s()) throw invalid_argument("t outside observation window");
    const double n_init = body.contains("n_init") ? body["n_init"].get<double>() : config_.n_init;
    return ok(encode(whatif(c, frame, t, params_, n_init, config_.big_node_threshold)));
  }

  Response propagation(const Cascade& c, const Request& req) const {
    const double f = number_param(req, "frame", -1.0);
    if (!(f >= 0.0) || f != std::floor(f) || f >= static_cast<double>(params_.schedule.frame_count()))
      throw invalid_argument("frame must be a valid frame index");
    const auto frame = static_cast<std::size_t>(f);
    const auto& sched = params_.schedule;

    std::unordered_map<EventId, const ShareEvent*> by_id;
    for (const auto& e : c.events) by_id[e.event_id] = &e;

    std::map<std::string, std::size_t> channels;
    for (Channel ch : kAllChannels) channels[std::string(to_string(ch))] = 0;
    json big = json::array(), small = json::array(), links = json::array();
    std::map<std::string, std::size_t> genders, regions, ages;
    for (std::size_t i = 1; i < c.events.size(); ++i) {
      const auto& e = c.events[i];
      if (e.time_s >= sched.horizon_s() || frame_of(e.time_s, sched) != frame) continue;
      ++channels[std::string(to_string(e.channel))];
      (e.degree >= config_.big_node_threshold ? big : small).push_back(e.event_id);
      json link{{"child", e.event_id}, {"parent", e.parent_id ? json(*e.parent_id) : json(nullptr)}};
      if (e.parent_id) {
        const ShareEvent* parent = by_id.at(*e.parent_id);
        const bool root_parent = !parent->parent_id;
        const std::size_t pf = parent->time_s < sched.horizon_s() ? frame_of(parent->time_s, sched) : frame;
        link["parent_is_root"] = root_parent;
        link["parent_frame"] = pf;
        link["previous_frame"] = pf < frame;
      }
      links.push_back(std::move(link));

      auto u = users_.find(e.user_id);
      if (u == users_.end()) {
        ++genders["unknown"];
        ++ages["unknown"];
        ++regions["unknown"];
        continue;
      }
      ++genders[std::string(to_string(u->second.gender))];
      if (u->second.age) {
        const int lo = (*u->second.age / 10) * 10;
        ++ages[std::to_string(lo) + "-" + std::to_string(lo + 9)];
      } else {
        ++ages["unknown"];
      }
      ++regions[u->second.region.value_or("unknown")];
    }
    return ok(json{{"article_id", c.article_id},
                   {"frame", frame},
                   {"frame_start_min", sched.boundaries_min()[frame]},
                   {"frame_end_min", sched.boundaries_min()[frame + 1]},
                   {"channels", channels},
                   {"big_node_threshold", config_.big_node_threshold},
                   {"big_nodes", big},
                   {"small_nodes", small},
                   {"links", links},
                   {"portrait", json{{"gender", genders}, {"age_band", ages}, {"region", regions}}}});
  }

  Response recommendation(const Cascade& c, const Request& req) {
    const auto times = times_param(req);
    std::vector<double> grid = config_.grid;
    if (auto g = param(req, "grid")) grid = parse_number_list(*g);
    if (grid.empty()) throw invalid_argument("grid must not be empty");
    for (double v : grid)
      if (!(v > 0.0)) throw invalid_argument("grid values must be positive");
    // Reference: ground truth when known, else the size at the end of the window.
    const double reference = c.final_size && *c.final_size > 0 ? static_cast<double>(*c.final_size) : one_day_size(c);
    if (!(reference > 0.0)) throw insufficient_data("article has no reshares to compare against");

    std::ostringstream key;
    key << c.article_id << '|' << req.query.count("grid") << '|';
    for (double v : grid) key << v << ',';
    key << '|';
    for (double t : times) key << t << ',';
    {
      std::lock_guard lock(cache_mu_);
      if (auto it = cache_.find(key.str()); it != cache_.end()) return ok(it->second);
    }

    const auto rec = recommend_degree(c, grid, reference, times, params_);
    json cands = json::array();
    for (const auto& cand : rec.candidates) {
      json pts = json::array();
      for (const auto& pt : cand.points) pts.push_back(encode(pt));
      cands.push_back(json{{"n_init", cand.n_init},
                           {"mean_ape", number_or_null(cand.mean_ape)},
                           {"apes", cand.apes},
                           {"points", pts}});
    }
    json body{{"article_id", c.article_id},
              {"reference_size", reference},
              {"best_n_init", rec.best_n_init},
              {"candidates", cands}};
    std::lock_guard lock(cache_mu_);
    cache_.emplace(key.str(), body);
    return ok(body);
  }

  Response history_list(const std::string& sid) {
    json entries = json::array();
    for (const auto& e : history_->list(sid)) entries.push_back(encode(e));
    return ok(json{{"session_id", sid}, {"entries", entries}});
  }

  Response history_append(const std::string& sid, const Request& req) {
    const json body = json::parse(req.body.empty() ? "{}" : req.body);
    if (!body.is_object() || !body.contains("n_init") || !body["n_init"].is_number())
      throw invalid_argument("body needs a numeric 'n_init'");
    HistoryEntry e = decode_history_entry(body);
    if (!(e.n_init > 0.0)) throw invalid_argument("n_init must be positive");
    if (!e.article_id.empty() && !index_.count(e.article_id))
      return error(404, "not_found", "unknown article " + e.article_id);
    const std::size_t n = history_->append(sid, e, !body.contains("timestamp"));
    return ok(json{{"session_id", sid}, {"entries", n}});
  }

  std::vector<Cascade> corpus_;
  Config config_;
  ModelParams params_;
  UserTable users_;
  HistoryStore own_history_;
  HistoryStore* history_;
  std::unordered_map<std::string, std::size_t> index_;
  std::mutex cache_mu_;
  std::unordered_map<std::string, json> cache_;
};

}  // namespace sharecast
