#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tlan/io.hpp"
#include "tlan/log.hpp"
#include "tlan/parallel.hpp"
#include "tlan/simulation.hpp"
#include "tlan/types.hpp"
#include "tlan/workload.hpp"

namespace {

struct CommonConfig {
  double interval_s = 360.0;
  double headway_s = 3.0;
  double psi_factor = 0.5;
  int horizon = 0;  // 0 = derive from the query window
  double time_origin_s = 0.0;
};

void add_config_flags(CLI::App* cmd, CommonConfig& cfg) {
  cmd->add_option("--interval-s", cfg.interval_s, "Time interval length I, seconds")
      ->capture_default_str();
  cmd->add_option("--headway-s", cfg.headway_s, "Base headway eta, seconds")
      ->capture_default_str();
  cmd->add_option("--psi-factor", cfg.psi_factor,
                  "Transition penalty as a fraction of the free-flow traversal time")
      ->capture_default_str();
  cmd->add_option("--horizon", cfg.horizon, "Horizon in intervals (0 = auto)")
      ->capture_default_str();
  cmd->add_option("--time-origin-s", cfg.time_origin_s, "Clock time of interval 0, seconds")
      ->capture_default_str();
}

tlan::NetworkConfig to_network_config(const CommonConfig& c, int horizon_fallback) {
  tlan::NetworkConfig cfg;
  cfg.interval_length_s = c.interval_s;
  cfg.base_headway_s = c.headway_s;
  cfg.transition_penalty_factor = c.psi_factor;
  cfg.horizon_intervals = c.horizon > 0 ? c.horizon : horizon_fallback;
  cfg.time_origin_s = c.time_origin_s;
  return cfg;
}

int cmd_generate_network(const CommonConfig& common, int rows, int cols, double edge_len,
                         double speed, double jitter, std::uint64_t seed,
                         const std::string& out, bool as_json) {
  auto cfg = to_network_config(common, 1);
  tlan::RoadNetwork net =
      tlan::generate_grid_network(rows, cols, edge_len, speed, cfg, seed, jitter);
  std::string written;
  if (as_json) {
    written = out + ".json";
    tlan::io::save_network_json(net, written);
  } else {
    written = tlan::io::save_network_csv(net, out);
  }
  std::printf("network: %zu nodes, %zu edges -> %s\n", net.node_count(), net.edge_count(),
              written.c_str());
  return 0;
}

int cmd_generate_queries(const CommonConfig& common, const std::string& network_path,
                         std::size_t n, double w0, double w1, double bias, std::uint64_t seed,
                         const std::string& out) {
  const int fallback = std::max(1, static_cast<int>(std::ceil(w1 / common.interval_s)) + 128);
  tlan::RoadNetwork net = tlan::io::load_network(network_path, to_network_config(common, fallback));
  tlan::GeneratorParams params;
  params.count = n;
  params.window_start_s = w0;
  params.window_end_s = w1;
  params.hotspot_bias = bias;
  params.seed = seed;
  tlan::QuerySet qs = tlan::generate_queries(net, params);
  char comment[160];
  std::snprintf(comment, sizeof(comment),
                "generated: n=%zu window_s=[%g,%g] hotspot_bias=%g seed=%llu", n, w0, w1, bias,
                static_cast<unsigned long long>(seed));
  tlan::io::save_queries(qs, net, out, comment);
  std::printf("queries: %zu -> %s\n", qs.size(), out.c_str());
  return 0;
}

int cmd_route(const CommonConfig& common, const std::string& alg_name,
              const std::string& network_path, const std::string& queries_path,
              const tlan::ExperimentConfig& exp_in, const std::string& base_elm_path,
              const std::string& out_dir) {
  auto alg = tlan::algorithm_from_name(alg_name);
  if (!alg) {
    std::fprintf(stderr, "unknown algorithm '%s' (use ffnd|slad|tlatk|tlaa|csmat)\n",
                 alg_name.c_str());
    return 2;
  }
  if (exp_in.gamma < 1.0 && base_elm_path.empty()) {
    std::fprintf(stderr, "--gamma requires --base-elm\n");
    return 2;
  }
  if (exp_in.gamma < 0.0 || exp_in.gamma > 1.0) {
    std::fprintf(stderr, "--gamma must lie in [0, 1]\n");
    return 2;
  }

  // pre-scan the query file for an auto horizon: last departure plus slack
  int fallback = 1;
  {
    tlan::NetworkConfig probe = to_network_config(common, 1 << 20);
    tlan::RoadNetwork net = tlan::io::load_network(network_path, probe);
    tlan::QuerySet qs = tlan::io::load_queries(queries_path, net);
    const double last =
        qs.empty() ? 0.0 : qs[qs.size() - 1].query.depart;
    fallback = static_cast<int>(std::ceil(last)) + 128;
  }
  tlan::RoadNetwork net = tlan::io::load_network(network_path, to_network_config(common, fallback));
  tlan::QuerySet qs = tlan::io::load_queries(queries_path, net);
  tlan::log::info("loaded %zu nodes, %zu edges, %zu queries (horizon %d intervals)",
                  net.node_count(), net.edge_count(), qs.size(),
                  net.config().horizon_intervals);
  tlan::precompute_free_flow(net, qs);

  tlan::ExperimentConfig exp = exp_in;
  exp.algorithm = *alg;
  tlan::EdgeLoadMatrix base_elm;
  if (!base_elm_path.empty()) {
    base_elm = tlan::io::load_elm(base_elm_path, net);
    exp.base_elm = &base_elm;
  }

  tlan::ExperimentResult result = tlan::run_experiment(net, qs, exp);
  tlan::log::info("planned in %.3fs, replayed in %.3fs", result.plan_wall_seconds,
                  result.replay_wall_seconds);

  tlan::io::RunManifest manifest;
  manifest.algorithm = alg_name;
  manifest.network_file = network_path;
  manifest.network_hash = tlan::io::file_hash(network_path);
  manifest.query_file = queries_path;
  manifest.queries_hash = tlan::io::file_hash(queries_path);
  manifest.net_cfg = net.config();
  manifest.exp_cfg = exp;
  manifest.base_elm_file = base_elm_path;
  manifest.queries = result.metrics.queries;
  manifest.completed = result.metrics.completed;
  manifest.failed = result.metrics.failed;
  manifest.overflowed = result.metrics.overflowed;
  manifest.plan_wall_seconds = result.plan_wall_seconds;
  manifest.replay_wall_seconds = result.replay_wall_seconds;
  manifest.end_to_end_avg_minutes = result.metrics.end_to_end_avg_minutes;
  tlan::io::write_run_directory(out_dir, manifest, result, net);

  std::printf("%s: queries=%zu completed=%zu failed=%zu overflowed=%zu\n", alg_name.c_str(),
              result.metrics.queries, result.metrics.completed, result.metrics.failed,
              result.metrics.overflowed);
  std::printf("AJT=%s min  FFCU=%s  LD=%s  penalty=%s±%s min\n",
              tlan::io::format_g9(result.metrics.ajt_minutes).c_str(),
              tlan::io::format_g9(result.metrics.ffcu).c_str(),
              tlan::io::format_g9(result.metrics.ld).c_str(),
              tlan::io::format_g9(result.metrics.penalty_mean_minutes).c_str(),
              tlan::io::format_g9(result.metrics.penalty_std_minutes).c_str());
  std::printf("run directory: %s\n", out_dir.c_str());
  return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out_file) {
  std::string net_hash, q_hash;
  std::string csv = "algorithm,ajt_minutes,ffcu,ld,penalty_mean_minutes,penalty_std_minutes,"
                    "end_to_end_avg_minutes\n";
  for (const std::string& dir : dirs) {
    const auto mpath = (std::filesystem::path(dir) / "manifest.json").string();
    const auto spath = (std::filesystem::path(dir) / "metrics.json").string();
    tlan::io::RunManifest man = tlan::io::load_manifest_json(mpath);
    tlan::MetricsReport met = tlan::io::load_metrics_json(spath);
    if (net_hash.empty()) {
      net_hash = man.network_hash;
      q_hash = man.queries_hash;
    } else if (man.network_hash != net_hash || man.queries_hash != q_hash) {
      std::fprintf(stderr, "input mismatch: %s was produced from a different network/query set\n",
                   dir.c_str());
      return 1;
    }
    csv += man.algorithm + ',' + tlan::io::format_g9(met.ajt_minutes) + ',' +
           tlan::io::format_g9(met.ffcu) + ',' + tlan::io::format_g9(met.ld) + ',' +
           tlan::io::format_g9(met.penalty_mean_minutes) + ',' +
           tlan::io::format_g9(met.penalty_std_minutes) + ',' +
           tlan::io::format_g9(man.end_to_end_avg_minutes) + '\n';
  }
  if (out_file.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    std::ofstream out(out_file, std::ios::trunc);
    if (!out) {
      std::fprintf(stderr, "cannot write %s\n", out_file.c_str());
      return 1;
    }
    out << csv;
    std::printf("comparison -> %s\n", out_file.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch routing and simulation on temporal load-aware road networks"};
  app.require_subcommand(1);

  CommonConfig common;

  // generate
  auto* gen = app.add_subcommand("generate", "Generate synthetic networks or query workloads");
  gen->require_subcommand(1);

  auto* gen_net = gen->add_subcommand("network", "Generate a grid network");
  int rows = 10, cols = 10;
  double edge_len = 250.0, speed = 12.5, jitter = 0.0;
  std::uint64_t seed = 0;
  std::string out_stem = "network";
  bool as_json = false;
  gen_net->add_option("--rows", rows)->capture_default_str();
  gen_net->add_option("--cols", cols)->capture_default_str();
  gen_net->add_option("--edge-len-m", edge_len)->capture_default_str();
  gen_net->add_option("--speed-mps", speed)->capture_default_str();
  gen_net->add_option("--speed-jitter", jitter, "± fraction applied per directed edge")
      ->capture_default_str();
  gen_net->add_option("--seed", seed)->capture_default_str();
  gen_net->add_option("--out", out_stem, "Output stem (writes <stem>.edges.csv/.nodes.csv)")
      ->capture_default_str();
  gen_net->add_flag("--json", as_json, "Write a combined <stem>.json instead of CSV");
  add_config_flags(gen_net, common);

  auto* gen_q = gen->add_subcommand("queries", "Generate a query workload");
  std::string network_path, queries_out = "queries.csv";
  std::size_t n_queries = 100;
  double w0 = 0.0, w1 = 3600.0, bias = 0.0;
  gen_q->add_option("--network", network_path, "Network file (*.edges.csv or *.json)")
      ->required();
  gen_q->add_option("--n", n_queries)->capture_default_str();
  gen_q->add_option("--window-start-s", w0)->capture_default_str();
  gen_q->add_option("--window-end-s", w1)->capture_default_str();
  gen_q->add_option("--hotspot-bias", bias)->capture_default_str();
  gen_q->add_option("--seed", seed)->capture_default_str();
  gen_q->add_option("--out", queries_out)->capture_default_str();
  add_config_flags(gen_q, common);

  // route
  auto* route = app.add_subcommand("route", "Plan, replay, and report one algorithm run");
  std::string alg = "tlaa", queries_path, base_elm_path, run_dir = "run";
  tlan::ExperimentConfig exp;
  exp.workers = tlan::default_worker_count();
  std::string predictor = "table";
  route->add_option("--alg", alg, "ffnd|slad|tlatk|tlaa|csmat")->capture_default_str();
  route->add_option("--network", network_path)->required();
  route->add_option("--queries", queries_path)->required();
  route->add_option("--k", exp.k, "Candidate count for tlatk")->capture_default_str();
  route->add_option("--y-s", exp.window_y_s, "Rolling batch window, seconds")
      ->capture_default_str();
  route->add_option("--max-candidates", exp.max_candidates, "0 = unlimited")
      ->capture_default_str();
  route->add_option("--gamma", exp.gamma, "Control factor in [0,1]; needs --base-elm")
      ->capture_default_str();
  route->add_option("--base-elm", base_elm_path, "Background load CSV");
  route->add_option("--seed", exp.seed)->capture_default_str();
  route->add_option("--workers", exp.workers)->capture_default_str();
  route->add_option("--predictor", predictor, "zero|table (csmat only)")->capture_default_str();
  route->add_option("--out", run_dir, "Run directory")->capture_default_str();
  add_config_flags(route, common);

  // compare
  auto* cmp = app.add_subcommand("compare", "Tabulate metrics across run directories");
  std::vector<std::string> run_dirs;
  std::string cmp_out;
  cmp->add_option("dirs", run_dirs, "Run directories")->required()->expected(-2);
  cmp->add_option("--out", cmp_out, "Write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen_net->parsed()) {
      return cmd_generate_network(common, rows, cols, edge_len, speed, jitter, seed, out_stem,
                                  as_json);
    }
    if (gen_q->parsed()) {
      return cmd_generate_queries(common, network_path, n_queries, w0, w1, bias, seed,
                                  queries_out);
    }
    if (route->parsed()) {
      if (predictor != "zero" && predictor != "table") {
        std::fprintf(stderr, "unknown predictor '%s' (use zero|table)\n", predictor.c_str());
        return 2;
      }
      exp.predictor =
          predictor == "zero" ? tlan::PredictorKind::kZero : tlan::PredictorKind::kTable;
      return cmd_route(common, alg, network_path, queries_path, exp, base_elm_path, run_dir);
    }
    if (cmp->parsed()) return cmd_compare(run_dirs, cmp_out);
  } catch (const tlan::CsvError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
