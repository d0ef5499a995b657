#pragma once

// What-if analysis over one schedule frame: drop each reshare in turn
// (deletion) and rebuild the frame one reshare at a time (adding).

#include <algorithm>
#include <optional>
#include <string_view>
#include <vector>

#include "cascade.hpp"
#include "params.hpp"
#include "weseer.hpp"

namespace sharecast {

/// Removes one reshare. Its children are re-parented to its parent.
inline Cascade remove_event(const Cascade& c, EventId id) {
  auto it = std::find_if(c.events.begin(), c.events.end(),
                         [id](const ShareEvent& e) { return e.event_id == id; });
  if (it == c.events.end()) throw invalid_argument("remove_event: unknown event id");
  if (!it->parent_id) throw invalid_argument("remove_event: cannot remove the root");
  const std::optional<EventId> grandparent = it->parent_id;
  Cascade out;
  out.article_id = c.article_id;
  out.post_time = c.post_time;
  out.final_size = c.final_size;
  out.events.reserve(c.events.size() - 1);
  for (const auto& e : c.events) {
    if (e.event_id == id) continue;
    ShareEvent copy = e;
    if (copy.parent_id == id) copy.parent_id = grandparent;
    out.events.push_back(std::move(copy));
  }
  return out;
}

/// Inserts a reshare at its canonical position.
inline Cascade insert_event(const Cascade& c, const ShareEvent& e) {
  if (!e.parent_id) throw invalid_argument("insert_event: cannot insert a second root");
  Cascade out = c;
  auto pos = std::upper_bound(out.events.begin() + 1, out.events.end(), e, event_order);
  out.events.insert(pos, e);
  return out;
}

enum class Sign { plus, minus, none };

inline std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::plus: return "+";
    case Sign::minus: return "-";
    case Sign::none: return "0";
  }
  return "0";
}

inline Sign sign_of(double delta) {
  if (delta > 0.0) return Sign::plus;
  if (delta < 0.0) return Sign::minus;
  return Sign::none;
}

struct WhatIfEntry {
  EventId event_id = 0;
  std::string user_id;
  double time_s = 0.0;
  std::int64_t degree = 0;
  bool big_node = false;

  // Deletion: state without this reshare. Empty when too few reshares remain.
  std::optional<double> delete_p;
  std::optional<double> delete_delta_p;
  std::optional<double> delete_bound;
  Sign delete_sign = Sign::none;  // "+" = infectiousness rises once the node is gone

  // Adding: state after re-inserting this reshare (frame reshares added in time order).
  std::optional<double> add_p;
  std::optional<double> add_bound;
  Sign add_sign = Sign::none;  // "+" = infectiousness rises when the node is added
};

struct WhatIfReport {
  std::size_t frame = 0;
  double t_eval = 0.0;
  double baseline_p = 0.0;  // speed-adjusted infectiousness of the full cascade
  double baseline_bound = 0.0;
  std::vector<WhatIfEntry> entries;
};

inline WhatIfReport whatif(const Cascade& c, std::size_t frame, double t_eval, const ModelParams& params,
                           double n_init, std::int64_t big_node_threshold = 1000) {
  if (frame >= params.schedule.frame_count()) throw out_of_window("whatif: frame index out of range");
  std::vector<ShareEvent> members;
  for (std::size_t i = 1; i < c.events.size(); ++i) {
    const auto& e = c.events[i];
    if (e.time_s < params.schedule.horizon_s() && frame_of(e.time_s, params.schedule) == frame)
      members.push_back(e);
  }
  if (members.empty()) throw insufficient_data("whatif: frame holds no reshares");
  const auto base = adjusted_state(c, t_eval, params, n_init);
  if (!base) throw insufficient_data("whatif: infectiousness undefined at evaluation time");

  WhatIfReport rep;
  rep.frame = frame;
  rep.t_eval = t_eval;
  rep.baseline_p = base->p_adj;
  rep.baseline_bound = base->n_star;

  for (const auto& e : members) {
    WhatIfEntry w;
    w.event_id = e.event_id;
    w.user_id = e.user_id;
    w.time_s = e.time_s;
    w.degree = e.degree;
    w.big_node = e.degree >= big_node_threshold;
    if (auto s = adjusted_state(remove_event(c, e.event_id), t_eval, params, n_init)) {
      w.delete_p = s->p_adj;
      w.delete_delta_p = s->p_adj - base->p_adj;
      w.delete_bound = s->n_star;
      w.delete_sign = sign_of(*w.delete_delta_p);
    }
    rep.entries.push_back(std::move(w));
  }

  Cascade partial = c;
  for (const auto& e : members) partial = remove_event(partial, e.event_id);
  // With too few reshares the estimate is undefined; the MLE of zero reshares is 0.
  double prev = 0.0;
  if (auto s = adjusted_state(partial, t_eval, params, n_init)) prev = s->p_adj;
  for (std::size_t i = 0; i < members.size(); ++i) {
    partial = insert_event(partial, members[i]);
    auto& w = rep.entries[i];
    double now = 0.0;
    if (auto s = adjusted_state(partial, t_eval, params, n_init)) {
      w.add_p = s->p_adj;
      w.add_bound = s->n_star;
      now = s->p_adj;
    }
    w.add_sign = sign_of(now - prev);
    prev = now;
  }
  return rep;
}

}  // namespace sharecast
