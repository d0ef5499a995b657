#pragma once

// Core domain types: share events, cascades and the timeframe schedule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "errors.hpp"

namespace sharecast {

enum class Channel { moments, private_chat, group_chat, favorites, other };

inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::moments: return "moments";
    case Channel::private_chat: return "private_chat";
    case Channel::group_chat: return "group_chat";
    case Channel::favorites: return "favorites";
    case Channel::other: return "other";
  }
  return "other";
}

inline std::optional<Channel> channel_from_string(std::string_view s) {
  if (s == "moments") return Channel::moments;
  if (s == "private_chat") return Channel::private_chat;
  if (s == "group_chat") return Channel::group_chat;
  if (s == "favorites") return Channel::favorites;
  if (s == "other") return Channel::other;
  return std::nullopt;
}

inline constexpr Channel kAllChannels[] = {Channel::moments, Channel::private_chat,
                                           Channel::group_chat, Channel::favorites,
                                           Channel::other};

using EventId = std::int64_t;

struct ShareEvent {
  EventId event_id = 0;
  std::optional<EventId> parent_id;  // absent only for the root
  std::string user_id;
  std::int64_t degree = 0;  // friend count of the sharer
  Channel channel = Channel::other;
  std::optional<Channel> parent_channel;
  double time_s = 0.0;  // seconds since the article was posted

  friend bool operator==(const ShareEvent&, const ShareEvent&) = default;
};

inline bool event_order(const ShareEvent& a, const ShareEvent& b) {
  if (a.time_s != b.time_s) return a.time_s < b.time_s;
  return a.event_id < b.event_id;
}

/// The reshare tree of one article. `events[0]` is the root post; the rest are
/// reshares sorted by (time_s, event_id).
struct Cascade {
  std::string article_id;
  std::int64_t post_time = 0;  // epoch seconds
  std::vector<ShareEvent> events;
  std::optional<std::int64_t> final_size;

  const ShareEvent& root() const { return events.front(); }

  std::size_t reshare_count() const { return events.empty() ? 0 : events.size() - 1; }

  /// R_t: number of reshares (root excluded) with time_s <= t.
  std::size_t reshares_until(double t) const {
    if (events.empty()) return 0;
    auto it = std::upper_bound(events.begin() + 1, events.end(), t,
                               [](double v, const ShareEvent& e) { return v < e.time_s; });
    return static_cast<std::size_t>(it - (events.begin() + 1));
  }

  friend bool operator==(const Cascade&, const Cascade&) = default;
};

/// Sorts events into canonical order; the root stays first.
inline void canonicalize(Cascade& c) {
  std::stable_sort(c.events.begin(), c.events.end(), [](const ShareEvent& a, const ShareEvent& b) {
    const bool ra = !a.parent_id.has_value();
    const bool rb = !b.parent_id.has_value();
    if (ra != rb) return ra;
    return event_order(a, b);
  });
}

struct Violation {
  EventId event_id = 0;
  std::string rule;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Checks every structural invariant of a cascade. An empty result means valid.
inline std::vector<Violation> validate_cascade(const Cascade& c) {
  std::vector<Violation> out;
  if (c.events.empty()) {
    out.push_back({0, "missing-root"});
    return out;
  }
  const ShareEvent& root = c.events.front();
  if (root.parent_id) out.push_back({root.event_id, "root-has-parent"});
  if (root.time_s != 0.0) out.push_back({root.event_id, "root-time-nonzero"});

  std::unordered_map<EventId, double> time_of;
  std::unordered_set<EventId> reported_dup;
  for (const auto& e : c.events) {
    if (!time_of.emplace(e.event_id, e.time_s).second && reported_dup.insert(e.event_id).second)
      out.push_back({e.event_id, "duplicate-id"});
  }

  for (std::size_t i = 0; i < c.events.size(); ++i) {
    const auto& e = c.events[i];
    if (!(e.time_s >= 0.0) || !std::isfinite(e.time_s)) out.push_back({e.event_id, "negative-time"});
    if (e.degree < 0) out.push_back({e.event_id, "negative-degree"});
    if (i > 0) {
      if (!e.parent_id) {
        out.push_back({e.event_id, "extra-root"});
      } else {
        auto it = time_of.find(*e.parent_id);
        if (it == time_of.end() || *e.parent_id == e.event_id)
          out.push_back({e.event_id, "missing-parent"});
        else if (it->second > e.time_s)
          out.push_back({e.event_id, "parent-after-child"});
      }
      if (i > 1 && event_order(e, c.events[i - 1])) out.push_back({e.event_id, "unsorted"});
    }
  }
  if (c.final_size && *c.final_size < 0) out.push_back({root.event_id, "negative-final-size"});
  return out;
}

/// Uneven partition of the observation window into frames. Boundaries are in
/// minutes; frame k covers [boundaries[k], boundaries[k+1]).
class TimeframeSchedule {
 public:
  TimeframeSchedule() : TimeframeSchedule(default_boundaries()) {}

  explicit TimeframeSchedule(std::vector<double> boundaries_min)
      : boundaries_(std::move(boundaries_min)) {
    if (boundaries_.size() < 2) throw invalid_argument("schedule needs at least two boundaries");
    if (boundaries_.front() != 0.0) throw invalid_argument("schedule must start at 0");
    for (std::size_t i = 1; i < boundaries_.size(); ++i)
      if (!(boundaries_[i] > boundaries_[i - 1]) || !std::isfinite(boundaries_[i]))
        throw invalid_argument("schedule boundaries must be strictly increasing");
  }

  // 10-min bins to 2 h, 30-min bins to 8 h, hourly bins to 20 h, then one bin to 24 h.
  static std::vector<double> default_boundaries() {
    std::vector<double> b;
    for (double m = 0; m < 120; m += 10) b.push_back(m);
    for (double m = 120; m < 480; m += 30) b.push_back(m);
    for (double m = 480; m <= 1200; m += 60) b.push_back(m);
    b.push_back(1440);
    return b;
  }

  const std::vector<double>& boundaries_min() const { return boundaries_; }
  std::size_t frame_count() const { return boundaries_.size() - 1; }
  double horizon_s() const { return boundaries_.back() * 60.0; }
  double start_s(std::size_t k) const { return boundaries_.at(k) * 60.0; }
  double end_s(std::size_t k) const { return boundaries_.at(k + 1) * 60.0; }

  /// Frame whose right-closed span (start, end] holds t; t = 0 maps to frame 0.
  /// This is the frame that has just been observed when evaluating at t.
  std::size_t observed_frame(double t_s) const {
    if (!(t_s >= 0.0) || t_s > horizon_s()) throw out_of_window("time outside observation window");
    const double m = t_s / 60.0;
    auto it = std::lower_bound(boundaries_.begin() + 1, boundaries_.end(), m);
    return static_cast<std::size_t>(it - (boundaries_.begin() + 1));
  }

  friend bool operator==(const TimeframeSchedule&, const TimeframeSchedule&) = default;

 private:
  std::vector<double> boundaries_;
};

/// Index k with boundaries[k] <= t/60 < boundaries[k+1].
inline std::size_t frame_of(double t_s, const TimeframeSchedule& schedule) {
  if (!(t_s >= 0.0) || t_s >= schedule.horizon_s())
    throw out_of_window("time " + std::to_string(t_s) + " s outside observation window");
  const auto& b = schedule.boundaries_min();
  const double m = t_s / 60.0;
  auto it = std::upper_bound(b.begin(), b.end(), m);
  return static_cast<std::size_t>(it - b.begin()) - 1;
}

}  // namespace sharecast
