// sharecast: simulate, predict, what-if, evaluate and serve.
//
// Exit codes: 0 success, 2 usage error, 3 data error.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "sharecast/sharecast.hpp"

namespace {

using namespace sharecast;

constexpr int kUsageError = 2;
constexpr int kDataError = 3;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::optional<double> epsilon;
  std::optional<std::int64_t> min_reshares;

  // simulate
  std::string spec_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> articles;

  // shared input
  std::string corpus_path;
  std::string shares_path;
  std::string users_path;
  std::string article_id;
  std::string model = "all";
  std::optional<double> n_init;
  std::string grid;
  std::string times;

  // whatif
  std::size_t frame = 0;
  std::optional<double> t_min;

  // evaluate
  std::string models = "seismic,speed_adjusted,weseer";
  std::size_t top_m = 100;
  std::string table_path;

  // serve
  std::string addr = "127.0.0.1:8080";
  std::string history_dir;
};

Config load_config(const Options& o) {
  Config c;
  if (!o.config_path.empty()) c = sharecast::load_config(resolve_data_path(o.config_path));
  if (o.epsilon) c.epsilon_subcritical = *o.epsilon;
  if (o.min_reshares) c.min_reshares = *o.min_reshares;
  if (o.n_init) c.n_init = *o.n_init;
  if (!o.grid.empty()) c.grid = parse_number_list(o.grid);
  try {
    (void)c.model_params();
  } catch (const sharecast::invalid_argument& e) {
    throw usage_error(e.what());
  }
  if (c.grid.empty()) throw usage_error("grid must not be empty");
  return c;
}

std::vector<Cascade> load_input(const Options& o, UserTable* users_out = nullptr) {
  UserTable users;
  if (!o.users_path.empty()) users = load_users(resolve_data_path(o.users_path));
  std::vector<Cascade> corpus;
  if (!o.corpus_path.empty()) {
    corpus = load_corpus(resolve_data_path(o.corpus_path));
  } else if (!o.shares_path.empty()) {
    std::vector<std::string> warnings;
    corpus = load_shares(resolve_data_path(o.shares_path), users, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  } else {
    throw usage_error("one of --corpus or --shares is required");
  }
  if (users_out) *users_out = std::move(users);
  return corpus;
}

const Cascade& find_article(const std::vector<Cascade>& corpus, const std::string& id) {
  for (const auto& c : corpus)
    if (c.article_id == id) return c;
  throw data_error("unknown article '" + id + "'");
}

std::vector<double> eval_times(const Options& o, const ModelParams& params) {
  if (o.times.empty()) return boundary_times(params.schedule);
  std::vector<double> out;
  for (double m : parse_number_list(o.times)) {
    if (!(m >= 0.0) || m * 60.0 > params.schedule.horizon_s()) throw usage_error("time outside observation window");
    out.push_back(m * 60.0);
  }
  if (!std::is_sorted(out.begin(), out.end())) throw usage_error("--times must be sorted");
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

int cmd_simulate(const Options& o) {
  std::ifstream in(resolve_data_path(o.spec_path));
  if (!in) throw data_error("cannot open spec " + o.spec_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw data_error(std::string("spec: ") + e.what());
  }
  std::vector<Cascade> corpus;
  try {
    if (j.contains("mixture")) {
      CorpusSpec cs = decode_corpus_spec(j);
      if (o.seed) cs.seed = *o.seed;
      if (o.articles) cs.articles = *o.articles;
      if (cs.articles == 0) throw usage_error("article count must be positive");
      corpus = simulate_corpus(cs.articles, cs.mixture, cs.seed);
    } else {
      SimSpec spec = decode_sim_spec(j);
      if (o.seed) spec.seed = *o.seed;
      corpus.push_back(simulate(spec));
    }
  } catch (const sharecast::invalid_argument& e) {
    throw data_error(std::string("spec: ") + e.what());
  } catch (const json::exception& e) {
    throw data_error(std::string("spec: ") + e.what());
  }
  save_corpus(o.out_path, corpus);
  std::cout << "wrote " << corpus.size() << " cascades to " << o.out_path << '\n';
  return 0;
}

int cmd_predict(const Options& o) {
  const Config cfg = load_config(o);
  const ModelParams params = cfg.model_params();
  const auto corpus = load_input(o);
  const Cascade& c = find_article(corpus, o.article_id);
  const auto times = eval_times(o, params);

  std::vector<ModelTag> models;
  if (o.model == "all") {
    models = {ModelTag::seismic, ModelTag::speed_adjusted, ModelTag::weseer};
  } else if (auto m = model_from_string(o.model)) {
    models = {*m};
  } else {
    throw usage_error("unknown model '" + o.model + "'");
  }

  double n_init = cfg.n_init;
  if (!o.grid.empty()) {
    const double ref = c.final_size && *c.final_size > 0
                           ? static_cast<double>(*c.final_size)
                           : static_cast<double>(c.reshares_until(params.schedule.horizon_s()));
    if (ref > 0.0) {
      const auto rec = recommend_degree(c, cfg.grid, ref, times, params);
      n_init = rec.best_n_init;
      std::cout << "# recommended n_init " << fmt(n_init) << '\n';
    } else {
      std::cout << "# no reshares to recommend against; using n_init " << fmt(n_init) << '\n';
    }
  }

  std::cout << "model\ttime_min\tr_t\toutcome\tpredicted\tn_star\tape\n";
  for (ModelTag m : models) {
    for (const auto& pt : predict_series(c, m, times, params, n_init)) {
      std::cout << to_string(m) << '\t' << fmt(pt.time_s / 60.0) << '\t' << pt.r_t << '\t'
                << to_string(pt.forecast.regime) << '\t'
                << (pt.forecast.predicted() ? fmt(pt.forecast.size) : "-") << '\t' << fmt(pt.n_star_used) << '\t';
      if (c.final_size && *c.final_size > 0)
        std::cout << fmt(ape(pt.forecast, static_cast<double>(*c.final_size)));
      else
        std::cout << '-';
      std::cout << '\n';
    }
  }
  return 0;
}

int cmd_whatif(const Options& o) {
  const Config cfg = load_config(o);
  const ModelParams params = cfg.model_params();
  const auto corpus = load_input(o);
  const Cascade& c = find_article(corpus, o.article_id);
  if (o.frame >= params.schedule.frame_count()) throw usage_error("--frame out of range");
  const double t = o.t_min ? *o.t_min * 60.0 : params.schedule.end_s(o.frame);
  if (!(t >= 0.0) || t > params.schedule.horizon_s()) throw usage_error("--t outside observation window");
  WhatIfReport rep;
  try {
    rep = whatif(c, o.frame, t, params, cfg.n_init, cfg.big_node_threshold);
  } catch (const insufficient_data& e) {
    throw data_error(e.what());
  }
  std::cout << "# frame " << rep.frame << " t_min " << fmt(rep.t_eval / 60.0) << " baseline_p "
            << fmt(rep.baseline_p) << " baseline_bound " << fmt(rep.baseline_bound) << '\n';
  std::cout << "event\tdegree\tbig\tdelete_p\tdelete_sign\tdelete_bound\tadd_p\tadd_sign\tadd_bound\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("insufficient"); };
  for (const auto& e : rep.entries) {
    std::cout << e.event_id << '\t' << e.degree << '\t' << (e.big_node ? "big" : "small") << '\t'
              << opt(e.delete_p) << '\t' << (e.delete_p ? to_string(e.delete_sign) : "-") << '\t'
              << opt(e.delete_bound) << '\t' << opt(e.add_p) << '\t' << to_string(e.add_sign) << '\t'
              << opt(e.add_bound) << '\n';
  }
  return 0;
}

int cmd_evaluate(const Options& o) {
  const Config cfg = load_config(o);
  const ModelParams params = cfg.model_params();
  const auto corpus = load_input(o);
  const auto times = eval_times(o, params);
  std::vector<ModelTag> models;
  for (const auto& name : CLI::detail::split(o.models, ',')) {
    auto m = model_from_string(name);
    if (!m) throw usage_error("unknown model '" + name + "'");
    models.push_back(*m);
  }
  std::size_t scored = 0;
  for (const auto& c : corpus) scored += c.final_size && *c.final_size > 0;
  if (o.top_m == 0 || o.top_m > scored)
    throw usage_error("--top-m must lie in [1, " + std::to_string(scored) + "]");
  const auto rep = evaluate_corpus(corpus, models, times, params, cfg.n_init, o.top_m);
  if (!o.out_path.empty()) {
    std::ofstream out(o.out_path, std::ios::binary);
    if (!out) throw data_error("cannot write " + o.out_path);
    out << encode(rep).dump(2) << '\n';
  }
  if (!o.table_path.empty()) {
    std::ofstream out(o.table_path, std::ios::binary);
    if (!out) throw data_error("cannot write " + o.table_path);
    write_ape_table(out, rep);
  } else {
    write_ape_table(std::cout, rep);
  }
  return 0;
}

int cmd_serve(const Options& o) {
  const Config cfg = load_config(o);
  UserTable users;
  auto corpus = load_input(o, &users);
  const auto colon = o.addr.rfind(':');
  if (colon == std::string::npos) throw usage_error("--addr must be host:port");
  const std::string host = o.addr.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(o.addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw usage_error("--addr must be host:port");
  }

  std::optional<HistoryStore> store;
  if (!o.history_dir.empty()) store.emplace(o.history_dir);
  Service service(std::move(corpus), cfg, std::move(users), store ? &*store : nullptr);

  httplib::Server server;
  auto bridge = [&service](const httplib::Request& hreq, httplib::Response& hres) {
    Request req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) req.query[k] = v;
    req.body = hreq.body;
    const Response res = service.handle(req);
    hres.status = res.status;
    hres.set_content(res.body, res.content_type);
  };
  server.Get(".*", bridge);
  server.Post(".*", bridge);
  std::cout << "serving " << service.corpus().size() << " articles on " << host << ':' << port << std::endl;
  if (!server.listen(host, port)) throw data_error("cannot bind " + o.addr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascade size prediction with speed-adjusted infectiousness"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "JSON config file");
  app.add_option("--epsilon", o.epsilon, "Subcritical margin eps in (0,1)");
  app.add_option("--min-reshares", o.min_reshares, "Reshares needed before estimating");

  auto add_input = [&](CLI::App* sub) {
    auto* corpus = sub->add_option("--corpus", o.corpus_path, "Canonical corpus file (JSON lines)");
    auto* shares = sub->add_option("--shares", o.shares_path, "Raw share table (JSON lines)");
    corpus->excludes(shares);
    sub->add_option("--users", o.users_path, "User table supplying degrees and portraits");
  };

  auto* sim = app.add_subcommand("simulate", "Generate synthetic cascades");
  sim->add_option("--spec", o.spec_path, "SimSpec or corpus spec JSON")->required();
  sim->add_option("--out", o.out_path, "Output corpus path")->required();
  sim->add_option("--seed", o.seed, "Override the spec seed");
  sim->add_option("-n,--articles", o.articles, "Override the article count");

  auto* pred = app.add_subcommand("predict", "Predict final size over time for one article");
  add_input(pred);
  pred->add_option("--article", o.article_id)->required();
  pred->add_option("--model", o.model, "seismic|speed-only|weseer|all");
  auto* n_init = pred->add_option("--n-init", o.n_init, "Initial mean degree");
  auto* grid = pred->add_option("--grid", o.grid, "Comma-separated candidates; picks the best n_init");
  n_init->excludes(grid);
  pred->add_option("--times", o.times, "Comma-separated evaluation times in minutes");

  auto* wi = app.add_subcommand("whatif", "Deletion/adding analysis for one frame");
  add_input(wi);
  wi->add_option("--article", o.article_id)->required();
  wi->add_option("--frame", o.frame)->required();
  wi->add_option("--t", o.t_min, "Evaluation time in minutes (default: end of frame)");
  wi->add_option("--n-init", o.n_init, "Initial mean degree");

  auto* ev = app.add_subcommand("evaluate", "APE distribution and breakout coverage over a corpus");
  add_input(ev);
  ev->add_option("--models", o.models, "Comma-separated models");
  ev->add_option("--top-m", o.top_m, "Breakout list size");
  ev->add_option("--n-init", o.n_init, "Initial mean degree for the enhanced model");
  ev->add_option("--times", o.times, "Comma-separated evaluation times in minutes");
  ev->add_option("--out", o.out_path, "JSON report path");
  ev->add_option("--table", o.table_path, "TSV table path (default: stdout)");

  auto* srv = app.add_subcommand("serve", "Serve the JSON API");
  add_input(srv);
  srv->add_option("--addr", o.addr, "host:port");
  srv->add_option("--history-dir", o.history_dir, "Directory for session histories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*pred) return cmd_predict(o);
    if (*wi) return cmd_whatif(o);
    if (*ev) return cmd_evaluate(o);
    if (*srv) return cmd_serve(o);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const sharecast::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
