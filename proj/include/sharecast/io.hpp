#pragma once

// File formats. Every table is UTF-8 newline-delimited JSON, one object per
// line; blank lines are ignored.
//
//   shares:  {"article_id", "from_uid", "to_uid", "from_type", "to_type",
//             "share_ts", "post_time"}          (epoch seconds; from_uid null
//                                                 or absent marks the root post)
//   users:   {"user_id", "gender", "age", "region", "friend_count"}
//   corpus:  one canonical cascade per line (see encode(const Cascade&))
//   history: one entry per line, one file per session

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cascade.hpp"
#include "errors.hpp"
#include "kernel.hpp"
#include "params.hpp"
#include "simulator.hpp"
#include "weseer.hpp"

namespace sharecast {

using json = nlohmann::json;

/// Root directory for data files: $SHARECAST_DATA_DIR, else the working directory.
inline std::filesystem::path data_root() {
  if (const char* env = std::getenv("SHARECAST_DATA_DIR"); env && *env) return env;
  return std::filesystem::current_path();
}

inline std::filesystem::path resolve_data_path(const std::filesystem::path& p) {
  return p.is_absolute() || std::filesystem::exists(p) ? p : data_root() / p;
}

namespace detail {

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Calls fn(line_number, object) for every non-blank line.
template <typename Fn>
void for_each_record(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw parse_error(source, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw parse_error(source, lineno, "record is not an object");
    try {
      fn(lineno, obj);
    } catch (const parse_error&) {
      throw;
    } catch (const json::exception& e) {
      throw parse_error(source, lineno, e.what());
    }
  }
}

inline std::optional<std::string> opt_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw json::type_error::create(302, std::string(key) + " must be a string", &obj);
  std::string s = it->get<std::string>();
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace detail

// -- users ------------------------------------------------------------------

enum class Gender { m, f, unknown };

inline std::string_view to_string(Gender g) {
  return g == Gender::m ? "m" : g == Gender::f ? "f" : "unknown";
}

struct UserRecord {
  std::string user_id;
  Gender gender = Gender::unknown;
  std::optional<int> age;
  std::optional<std::string> region;
  std::int64_t friend_count = 0;

  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

using UserTable = std::unordered_map<std::string, UserRecord>;

inline UserTable load_users(std::istream& in, const std::string& source = "<users>") {
  UserTable out;
  detail::for_each_record(in, source, [&](std::size_t line, const json& o) {
    UserRecord u;
    auto id = detail::opt_string(o, "user_id");
    if (!id) throw parse_error(source, line, "missing user_id");
    u.user_id = *id;
    if (auto g = detail::opt_string(o, "gender")) {
      if (*g == "m" || *g == "male") u.gender = Gender::m;
      else if (*g == "f" || *g == "female") u.gender = Gender::f;
    }
    if (auto it = o.find("age"); it != o.end() && !it->is_null() && !(it->is_string() && it->get<std::string>().empty())) {
      if (it->is_number_integer()) u.age = it->get<int>();
      else if (it->is_string()) {
        try {
          u.age = std::stoi(it->get<std::string>());
        } catch (const std::exception&) {
          throw parse_error(source, line, "age is not an integer");
        }
      } else {
        throw parse_error(source, line, "age is not an integer");
      }
    }
    u.region = detail::opt_string(o, "region");
    if (auto it = o.find("friend_count"); it != o.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw parse_error(source, line, "friend_count must be an integer");
      u.friend_count = it->get<std::int64_t>();
    }
    if (u.friend_count < 0) throw parse_error(source, line, "friend_count must be non-negative");
    out[u.user_id] = std::move(u);
  });
  return out;
}

inline UserTable load_users(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return load_users(in, path.string());
}

// -- shares -----------------------------------------------------------------

/// Groups share rows into cascades. Each reshare is linked to the latest
/// earlier share by its from_uid within the same article; reshares whose
/// parent cannot be found attach to the root. Degrees come from `users`
/// (unknown users get degree 0). Both fallbacks add a line to `warnings`.
/// The result does not depend on row order.
inline std::vector<Cascade> load_shares(std::istream& in, const UserTable& users,
                                        std::vector<std::string>* warnings = nullptr,
                                        const std::string& source = "<shares>") {
  struct Row {
    std::size_t line;
    std::optional<std::string> from_uid;
    std::string to_uid;
    std::optional<Channel> from_type;
    Channel to_type;
    std::int64_t share_ts;
    std::int64_t post_time;
  };
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  auto channel = [&](std::size_t line, const std::string& s) {
    auto ch = channel_from_string(s);
    if (!ch) throw parse_error(source, line, "unknown channel '" + s + "'");
    return *ch;
  };

  std::map<std::string, std::vector<Row>> by_article;
  detail::for_each_record(in, source, [&](std::size_t line, const json& o) {
    Row r;
    r.line = line;
    auto article = detail::opt_string(o, "article_id");
    if (!article) throw parse_error(source, line, "missing article_id");
    r.from_uid = detail::opt_string(o, "from_uid");
    auto to = detail::opt_string(o, "to_uid");
    if (!to) throw parse_error(source, line, "missing to_uid");
    r.to_uid = *to;
    if (auto ft = detail::opt_string(o, "from_type")) r.from_type = channel(line, *ft);
    auto tt = detail::opt_string(o, "to_type");
    r.to_type = tt ? channel(line, *tt) : Channel::other;
    if (!o.contains("share_ts") || !o["share_ts"].is_number_integer())
      throw parse_error(source, line, "share_ts must be integer epoch seconds");
    if (!o.contains("post_time") || !o["post_time"].is_number_integer())
      throw parse_error(source, line, "post_time must be integer epoch seconds");
    r.share_ts = o["share_ts"].get<std::int64_t>();
    r.post_time = o["post_time"].get<std::int64_t>();
    if (r.share_ts < r.post_time) throw parse_error(source, line, "share_ts precedes post_time");
    if (!r.from_uid && r.share_ts != r.post_time)
      throw parse_error(source, line, "root share_ts must equal post_time");
    by_article[*article].push_back(std::move(r));
  });

  auto degree_of = [&](const std::string& uid, const std::string& article) -> std::int64_t {
    auto it = users.find(uid);
    if (it != users.end()) return it->second.friend_count;
    warn("article " + article + ": no degree for user " + uid + ", using 0");
    return 0;
  };

  std::vector<Cascade> out;
  for (auto& [article, rows] : by_article) {
    const std::int64_t post_time = rows.front().post_time;
    for (const auto& r : rows)
      if (r.post_time != post_time) throw parse_error(source, r.line, "inconsistent post_time for " + article);

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      const bool ra = !a.from_uid, rb = !b.from_uid;
      if (ra != rb) return ra;
      return std::tie(a.share_ts, a.to_uid, a.from_uid, a.to_type, a.from_type) <
             std::tie(b.share_ts, b.to_uid, b.from_uid, b.to_type, b.from_type);
    });

    Cascade c;
    c.article_id = article;
    c.post_time = post_time;
    std::size_t first = 0;
    ShareEvent root;
    root.event_id = 0;
    if (!rows.empty() && !rows.front().from_uid) {
      root.user_id = rows.front().to_uid;
      root.channel = rows.front().to_type;
      first = 1;
      if (rows.size() > 1 && !rows[1].from_uid)
        throw parse_error(source, rows[1].line, "second root row for article " + article);
    } else {
      warn("article " + article + ": no root row, synthesizing one");
    }
    root.degree = root.user_id.empty() ? 0 : degree_of(root.user_id, article);
    c.events.push_back(root);

    std::unordered_map<std::string, EventId> latest_by_user;
    if (!root.user_id.empty()) latest_by_user[root.user_id] = 0;
    for (std::size_t i = first; i < rows.size(); ++i) {
      const Row& r = rows[i];
      ShareEvent e;
      e.event_id = static_cast<EventId>(c.events.size());
      e.user_id = r.to_uid;
      e.degree = degree_of(r.to_uid, article);
      e.channel = r.to_type;
      e.parent_channel = r.from_type;
      e.time_s = static_cast<double>(r.share_ts - post_time);
      auto it = latest_by_user.find(*r.from_uid);
      if (it != latest_by_user.end()) {
        e.parent_id = it->second;
      } else {
        e.parent_id = 0;
        warn(source + ":" + std::to_string(r.line) + ": parent " + *r.from_uid + " not found, attaching to root");
      }
      latest_by_user[e.user_id] = e.event_id;
      c.events.push_back(std::move(e));
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<Cascade> load_shares(const std::filesystem::path& path, const UserTable& users,
                                        std::vector<std::string>* warnings = nullptr) {
  auto in = detail::open_in(path);
  return load_shares(in, users, warnings, path.string());
}

// -- corpus -----------------------------------------------------------------

inline json encode(const ShareEvent& e) {
  json j = json::object();
  j["id"] = e.event_id;
  j["parent"] = e.parent_id ? json(*e.parent_id) : json(nullptr);
  j["user"] = e.user_id;
  j["degree"] = e.degree;
  j["channel"] = std::string(to_string(e.channel));
  j["parent_channel"] = e.parent_channel ? json(std::string(to_string(*e.parent_channel))) : json(nullptr);
  j["t"] = e.time_s;
  return j;
}

inline json encode(const Cascade& c) {
  json j = json::object();
  j["article_id"] = c.article_id;
  j["post_time"] = c.post_time;
  j["final_size"] = c.final_size ? json(*c.final_size) : json(nullptr);
  json events = json::array();
  for (const auto& e : c.events) events.push_back(encode(e));
  j["events"] = std::move(events);
  return j;
}

inline Cascade decode_cascade(const json& j) {
  Cascade c;
  c.article_id = j.at("article_id").get<std::string>();
  c.post_time = j.at("post_time").get<std::int64_t>();
  if (j.contains("final_size") && !j["final_size"].is_null()) c.final_size = j["final_size"].get<std::int64_t>();
  for (const auto& ej : j.at("events")) {
    ShareEvent e;
    e.event_id = ej.at("id").get<EventId>();
    if (!ej.at("parent").is_null()) e.parent_id = ej["parent"].get<EventId>();
    e.user_id = ej.at("user").get<std::string>();
    e.degree = ej.at("degree").get<std::int64_t>();
    auto ch = channel_from_string(ej.at("channel").get<std::string>());
    if (!ch) throw invalid_argument("unknown channel");
    e.channel = *ch;
    if (ej.contains("parent_channel") && !ej["parent_channel"].is_null()) {
      auto pc = channel_from_string(ej["parent_channel"].get<std::string>());
      if (!pc) throw invalid_argument("unknown channel");
      e.parent_channel = *pc;
    }
    e.time_s = ej.at("t").get<double>();
    c.events.push_back(std::move(e));
  }
  return c;
}

inline void save_corpus(std::ostream& out, const std::vector<Cascade>& corpus) {
  for (const auto& c : corpus) out << encode(c).dump() << '\n';
}

inline void save_corpus(const std::filesystem::path& path, const std::vector<Cascade>& corpus) {
  auto out = detail::open_out(path);
  save_corpus(out, corpus);
}

inline std::vector<Cascade> load_corpus(std::istream& in, const std::string& source = "<corpus>") {
  std::vector<Cascade> out;
  detail::for_each_record(in, source, [&](std::size_t line, const json& o) {
    try {
      out.push_back(decode_cascade(o));
    } catch (const invalid_argument& e) {
      throw parse_error(source, line, e.what());
    }
    auto violations = validate_cascade(out.back());
    if (!violations.empty())
      throw parse_error(source, line, "invalid cascade: " + violations.front().rule + " at event " +
                                          std::to_string(violations.front().event_id));
  });
  return out;
}

inline std::vector<Cascade> load_corpus(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return load_corpus(in, path.string());
}

// -- configuration ------------------------------------------------------------

struct Config {
  KernelParams kernel = default_kernel();
  std::vector<double> schedule_min = TimeframeSchedule::default_boundaries();
  std::vector<double> grid = default_grid();
  double epsilon_subcritical = 0.01;
  double n_star_default = 140.0;
  double n_init = 140.0;
  std::int64_t min_reshares = 1;
  std::int64_t big_node_threshold = 1000;
  double truth_horizon_s = 7 * 86400.0;
  std::vector<std::pair<double, double>> correction;  // (start_s, alpha) steps; empty = identity

  ModelParams model_params() const {
    ModelParams p;
    p.kernel = kernel;
    p.n_star_default = n_star_default;
    p.epsilon_subcritical = epsilon_subcritical;
    p.correction = step_correction(correction);
    p.schedule = TimeframeSchedule(schedule_min);
    p.min_reshares = min_reshares;
    validate(p);
    return p;
  }

  friend bool operator==(const Config&, const Config&) = default;
};

inline json encode(const KernelParams& k) {
  return json{{"c", k.c}, {"s0", k.s0}, {"theta", k.theta}, {"normalized", k.normalized}};
}

/// A kernel marked normalized may omit c; it is then derived from s0 and theta.
inline KernelParams decode_kernel(const json& j) {
  KernelParams k;
  k.s0 = j.value("s0", 300.0);
  k.theta = j.value("theta", 0.242);
  k.normalized = j.value("normalized", !j.contains("c"));
  if (k.normalized) {
    k = normalize(k);
  } else {
    k.c = j.at("c").get<double>();
  }
  validate(k);
  return k;
}

inline json encode(const Config& c) {
  json corr = json::array();
  for (const auto& [t, a] : c.correction) corr.push_back(json::array({t, a}));
  return json{{"kernel", encode(c.kernel)},
              {"schedule_min", c.schedule_min},
              {"grid", c.grid},
              {"epsilon_subcritical", c.epsilon_subcritical},
              {"n_star_default", c.n_star_default},
              {"n_init", c.n_init},
              {"min_reshares", c.min_reshares},
              {"big_node_threshold", c.big_node_threshold},
              {"truth_horizon_s", c.truth_horizon_s},
              {"correction", corr}};
}

inline Config decode_config(const json& j) {
  Config c;
  if (j.contains("kernel")) c.kernel = decode_kernel(j["kernel"]);
  if (j.contains("schedule_min")) c.schedule_min = j["schedule_min"].get<std::vector<double>>();
  if (j.contains("grid")) c.grid = j["grid"].get<std::vector<double>>();
  c.epsilon_subcritical = j.value("epsilon_subcritical", c.epsilon_subcritical);
  c.n_star_default = j.value("n_star_default", c.n_star_default);
  c.n_init = j.value("n_init", c.n_init);
  c.min_reshares = j.value("min_reshares", c.min_reshares);
  c.big_node_threshold = j.value("big_node_threshold", c.big_node_threshold);
  c.truth_horizon_s = j.value("truth_horizon_s", c.truth_horizon_s);
  if (j.contains("correction"))
    for (const auto& step : j["correction"]) c.correction.emplace_back(step.at(0).get<double>(), step.at(1).get<double>());
  (void)c.model_params();  // validates
  if (c.grid.empty()) throw invalid_argument("config: grid must not be empty");
  return c;
}

inline Config load_config(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return decode_config(json::parse(in));
  } catch (const json::exception& e) {
    throw parse_error(path.string(), 0, e.what());
  }
}

inline void save_config(const std::filesystem::path& path, const Config& c) {
  auto out = detail::open_out(path);
  out << encode(c).dump(2) << '\n';
}

// -- simulation specs -------------------------------------------------------

inline json encode(const DegreeDist& d) {
  if (auto* c = std::get_if<ConstantDegree>(&d)) return json{{"constant", c->d}};
  if (auto* l = std::get_if<LogNormalDegree>(&d)) return json{{"lognormal", {{"mu", l->mu}, {"sigma", l->sigma}}}};
  return json{{"empirical", std::get<EmpiricalDegree>(d).values}};
}

inline DegreeDist decode_degree(const json& j) {
  if (j.is_number_integer()) return ConstantDegree{j.get<std::int64_t>()};
  if (j.contains("constant")) return ConstantDegree{j["constant"].get<std::int64_t>()};
  if (j.contains("lognormal")) return LogNormalDegree{j["lognormal"].at("mu").get<double>(), j["lognormal"].at("sigma").get<double>()};
  if (j.contains("empirical")) return EmpiricalDegree{j["empirical"].get<std::vector<std::int64_t>>()};
  throw invalid_argument("unknown degree distribution");
}

inline json encode(const SimSpec& s) {
  json prof = json::array();
  for (const auto& seg : s.p_profile) prof.push_back(json::array({seg.start_s, seg.p}));
  json j{{"kernel", encode(s.kernel)},
         {"p_profile", prof},
         {"degrees", encode(s.degrees)},
         {"horizon_s", s.horizon_s},
         {"seed", s.seed},
         {"max_events", s.max_events},
         {"article_id", s.article_id},
         {"post_time", s.post_time}};
  j["root_degree"] = s.root_degree ? encode(*s.root_degree) : json(nullptr);
  return j;
}

/// "p_profile" is either a list of [start_s, p] pairs or
/// {"pattern": "constant|immediate_outbreak|rise_and_recession|wave_like", "p": value}.
inline PProfile decode_profile(const json& j) {
  if (j.is_array()) {
    PProfile out;
    for (const auto& seg : j) out.push_back({seg.at(0).get<double>(), seg.at(1).get<double>()});
    return out;
  }
  const auto pattern = j.at("pattern").get<std::string>();
  const double p = j.at("p").get<double>();
  if (pattern == "constant") return constant_profile(p);
  if (pattern == "immediate_outbreak") return immediate_outbreak_profile(p);
  if (pattern == "rise_and_recession") return rise_and_recession_profile(p);
  if (pattern == "wave_like") return wave_like_profile(p);
  throw invalid_argument("unknown p_profile pattern '" + pattern + "'");
}

inline SimSpec decode_sim_spec(const json& j) {
  SimSpec s;
  if (j.contains("kernel")) s.kernel = decode_kernel(j["kernel"]);
  if (j.contains("p_profile")) s.p_profile = decode_profile(j["p_profile"]);
  if (j.contains("degrees")) s.degrees = decode_degree(j["degrees"]);
  if (j.contains("root_degree") && !j["root_degree"].is_null()) s.root_degree = decode_degree(j["root_degree"]);
  if (j.contains("horizon_s")) {
    s.horizon_s = j["horizon_s"].is_null() ? std::numeric_limits<double>::infinity() : j["horizon_s"].get<double>();
  }
  s.seed = j.value("seed", s.seed);
  s.max_events = j.value("max_events", s.max_events);
  s.article_id = j.value("article_id", s.article_id);
  s.post_time = j.value("post_time", s.post_time);
  validate(s);
  return s;
}

/// Corpus recipe: {"articles": n, "seed": s, "mixture": [{"weight", "p_scale": [lo, hi], "spec": {...}}]}.
struct CorpusSpec {
  std::size_t articles = 0;
  std::uint64_t seed = 1;
  std::vector<MixtureComponent> mixture;
};

inline CorpusSpec decode_corpus_spec(const json& j) {
  CorpusSpec cs;
  cs.articles = j.at("articles").get<std::size_t>();
  cs.seed = j.value("seed", cs.seed);
  for (const auto& m : j.at("mixture")) {
    MixtureComponent comp;
    comp.weight = m.value("weight", 1.0);
    comp.spec = decode_sim_spec(m.at("spec"));
    if (m.contains("p_scale")) {
      comp.p_scale_min = m["p_scale"].at(0).get<double>();
      comp.p_scale_max = m["p_scale"].at(1).get<double>();
    }
    cs.mixture.push_back(std::move(comp));
  }
  return cs;
}

inline json encode(const CorpusSpec& cs) {
  json mix = json::array();
  for (const auto& m : cs.mixture)
    mix.push_back(json{{"weight", m.weight}, {"p_scale", {m.p_scale_min, m.p_scale_max}}, {"spec", encode(m.spec)}});
  return json{{"articles", cs.articles}, {"seed", cs.seed}, {"mixture", mix}};
}

// -- exploration history ------------------------------------------------------

struct HistoryEntry {
  double n_init = 0.0;
  double timestamp = 0.0;  // client-supplied; defaults to the entry's position
  std::string article_id;
  std::string series_ref;  // key of the prediction query that produced the APE series

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

inline json encode(const HistoryEntry& e) {
  return json{{"n_init", e.n_init}, {"timestamp", e.timestamp}, {"article_id", e.article_id}, {"series_ref", e.series_ref}};
}

inline HistoryEntry decode_history_entry(const json& j) {
  HistoryEntry e;
  e.n_init = j.at("n_init").get<double>();
  e.timestamp = j.value("timestamp", 0.0);
  e.article_id = j.value("article_id", std::string());
  e.series_ref = j.value("series_ref", std::string());
  return e;
}

inline bool valid_session_id(const std::string& sid) {
  static const std::regex re("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(sid, re);
}

/// Append-only per-session history. Appends to one session are serialized;
/// different sessions proceed independently. With a directory, each session
/// is mirrored to <dir>/<session>.jsonl and reloaded on first access.
class HistoryStore {
 public:
  HistoryStore() = default;
  explicit HistoryStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(*dir_);
  }

  std::size_t append(const std::string& session, HistoryEntry entry, bool default_timestamp = false) {
    Session& s = session_for(session);
    std::lock_guard lock(s.mu);
    if (default_timestamp) entry.timestamp = static_cast<double>(s.entries.size());
    if (dir_) {
      std::ofstream out(*dir_ / (session + ".jsonl"), std::ios::app | std::ios::binary);
      if (!out) throw std::runtime_error("cannot append history for session " + session);
      out << encode(entry).dump() << '\n';
    }
    s.entries.push_back(std::move(entry));
    return s.entries.size();
  }

  std::vector<HistoryEntry> list(const std::string& session) {
    Session& s = session_for(session);
    std::lock_guard lock(s.mu);
    return s.entries;
  }

 private:
  struct Session {
    std::mutex mu;
    std::vector<HistoryEntry> entries;
  };

  Session& session_for(const std::string& sid) {
    if (!valid_session_id(sid)) throw invalid_argument("invalid session id");
    {
      std::shared_lock lock(mu_);
      if (auto it = sessions_.find(sid); it != sessions_.end()) return *it->second;
    }
    std::unique_lock lock(mu_);
    auto& slot = sessions_[sid];
    if (!slot) {
      slot = std::make_unique<Session>();
      if (dir_) {
        const auto path = *dir_ / (sid + ".jsonl");
        if (std::filesystem::exists(path)) {
          auto in = detail::open_in(path);
          detail::for_each_record(in, path.string(), [&](std::size_t, const json& o) {
            slot->entries.push_back(decode_history_entry(o));
          });
        }
      }
    }
    return *slot;
  }

  std::optional<std::filesystem::path> dir_;
  std::shared_mutex mu_;
  std::unordered_map<std::string, std::unique_ptr<Session>> sessions_;
};

}  // namespace sharecast
