#include "tlan/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tlan::io {

namespace {

std::string format_precise(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  for (std::string& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& file, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw CsvError(file, line, "invalid number '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& file, std::size_t line) {
  std::int64_t v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw CsvError(file, line, "invalid integer '" + s + "'");
  return v;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

// Minimal deterministic JSON writer; all numbers pre-formatted by the caller.
class JsonWriter {
 public:
  void raw(const std::string& s) { buf_ += s; }
  void key(const std::string& k) {
    comma();
    buf_ += '"';
    buf_ += k;
    buf_ += "\":";
    fresh_ = true;
  }
  void value_str(const std::string& v) {
    comma();
    buf_ += '"';
    for (char c : v) {
      if (c == '"' || c == '\\') buf_ += '\\';
      buf_ += c;
    }
    buf_ += '"';
  }
  void value_raw(const std::string& v) {
    comma();
    buf_ += v;
  }
  void open_obj() {
    comma();
    buf_ += '{';
    fresh_ = true;
  }
  void close_obj() {
    buf_ += '}';
    fresh_ = false;
  }
  void open_arr() {
    comma();
    buf_ += '[';
    fresh_ = true;
  }
  void close_arr() {
    buf_ += ']';
    fresh_ = false;
  }
  const std::string& str() const { return buf_; }

 private:
  void comma() {
    if (!fresh_ && !buf_.empty() && buf_.back() != '{' && buf_.back() != '[' &&
        buf_.back() != ':')
      buf_ += ',';
    fresh_ = false;
  }
  std::string buf_;
  bool fresh_ = true;
};

NetworkConfig config_from_json(const nlohmann::json& j, NetworkConfig cfg) {
  if (j.contains("interval_length_s")) cfg.interval_length_s = j["interval_length_s"];
  if (j.contains("base_headway_s")) cfg.base_headway_s = j["base_headway_s"];
  if (j.contains("transition_penalty_factor"))
    cfg.transition_penalty_factor = j["transition_penalty_factor"];
  if (j.contains("horizon_intervals")) cfg.horizon_intervals = j["horizon_intervals"];
  if (j.contains("time_origin_s")) cfg.time_origin_s = j["time_origin_s"];
  return cfg;
}

}  // namespace

std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

RoadNetwork load_network_json(const std::string& path, NetworkConfig cfg) {
  std::ifstream in = open_input(path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.contains("config")) cfg = config_from_json(doc["config"], cfg);
  RoadNetwork net;
  for (const auto& n : doc.at("nodes")) {
    std::optional<std::array<double, 2>> xy;
    if (n.contains("x") && n.contains("y"))
      xy = std::array<double, 2>{n["x"].get<double>(), n["y"].get<double>()};
    net.add_node(n.at("id").get<std::int64_t>(), xy);
  }
  for (const auto& e : doc.at("edges")) {
    std::optional<double> cap;
    if (e.contains("capacity")) cap = e["capacity"].get<double>();
    net.add_edge(e.at("edge_id").get<std::int64_t>(), e.at("src").get<std::int64_t>(),
                 e.at("dst").get<std::int64_t>(), e.at("length_m").get<double>(),
                 e.at("speed_mps").get<double>(), cap);
  }
  net.finalize(cfg);
  return net;
}

std::string nodes_path_for(const std::string& edges_path) {
  const std::string suffix = ".edges.csv";
  if (edges_path.size() <= suffix.size() ||
      edges_path.compare(edges_path.size() - suffix.size(), suffix.size(), suffix) != 0)
    throw ValidationError("network CSV must be named <stem>.edges.csv (got " + edges_path +
                          ") or use the combined .json format");
  return edges_path.substr(0, edges_path.size() - suffix.size()) + ".nodes.csv";
}

RoadNetwork load_network_csv(const std::string& edges_path, const NetworkConfig& cfg) {
  const std::string nodes_path = nodes_path_for(edges_path);
  RoadNetwork net;

  {
    std::ifstream in = open_input(nodes_path);
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      auto f = split_csv_line(line);
      if (header) {
        if (f.empty() || f[0] != "node_id")
          throw CsvError(nodes_path, lineno, "expected header node_id[,x,y]");
        header = false;
        continue;
      }
      if (f.size() != 1 && f.size() != 3)
        throw CsvError(nodes_path, lineno, "expected 1 or 3 fields");
      std::optional<std::array<double, 2>> xy;
      if (f.size() == 3)
        xy = std::array<double, 2>{parse_double(f[1], nodes_path, lineno),
                                   parse_double(f[2], nodes_path, lineno)};
      net.add_node(parse_int(f[0], nodes_path, lineno), xy);
    }
  }
  {
    std::ifstream in = open_input(edges_path);
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      auto f = split_csv_line(line);
      if (header) {
        if (f.size() < 5 || f[0] != "edge_id" || f[1] != "src" || f[2] != "dst" ||
            f[3] != "length_m" || f[4] != "speed_mps")
          throw CsvError(edges_path, lineno,
                         "expected header edge_id,src,dst,length_m,speed_mps[,capacity]");
        header = false;
        continue;
      }
      if (f.size() != 5 && f.size() != 6)
        throw CsvError(edges_path, lineno, "expected 5 or 6 fields");
      std::optional<double> cap;
      if (f.size() == 6 && !f[5].empty()) cap = parse_double(f[5], edges_path, lineno);
      net.add_edge(parse_int(f[0], edges_path, lineno), parse_int(f[1], edges_path, lineno),
                   parse_int(f[2], edges_path, lineno), parse_double(f[3], edges_path, lineno),
                   parse_double(f[4], edges_path, lineno), cap);
    }
  }
  net.finalize(cfg);
  return net;
}

}  // namespace

RoadNetwork load_network(const std::string& path, NetworkConfig cfg) {
  if (path.size() > 5 && path.compare(path.size() - 5, 5, ".json") == 0)
    return load_network_json(path, cfg);
  return load_network_csv(path, cfg);
}

std::string save_network_csv(const RoadNetwork& net, const std::string& stem) {
  const std::string edges_path = stem + ".edges.csv";
  const std::string nodes_path = stem + ".nodes.csv";
  {
    std::ofstream out = open_output(nodes_path);
    out << "node_id,x,y\n";
    for (NodeIndex v = 0; v < net.node_count(); ++v) {
      auto xy = net.node_xy(v);
      out << net.node_id(v);
      if (xy)
        out << ',' << format_precise((*xy)[0]) << ',' << format_precise((*xy)[1]);
      else
        out << ",0,0";
      out << '\n';
    }
  }
  {
    std::ofstream out = open_output(edges_path);
    out << "edge_id,src,dst,length_m,speed_mps,capacity\n";
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
      const EdgeRecord& rec = net.edge(e);
      out << rec.id << ',' << net.node_id(rec.from) << ',' << net.node_id(rec.to) << ','
          << format_precise(rec.attrs.length_m) << ',' << format_precise(rec.attrs.speed_limit_mps)
          << ',' << format_precise(rec.attrs.free_flow_capacity) << '\n';
    }
  }
  return edges_path;
}

std::string network_to_json(const RoadNetwork& net) {
  const NetworkConfig& cfg = net.config();
  JsonWriter w;
  w.open_obj();
  w.key("config");
  w.open_obj();
  w.key("interval_length_s");
  w.value_raw(format_precise(cfg.interval_length_s));
  w.key("base_headway_s");
  w.value_raw(format_precise(cfg.base_headway_s));
  w.key("transition_penalty_factor");
  w.value_raw(format_precise(cfg.transition_penalty_factor));
  w.key("horizon_intervals");
  w.value_raw(std::to_string(cfg.horizon_intervals));
  w.key("time_origin_s");
  w.value_raw(format_precise(cfg.time_origin_s));
  w.close_obj();
  w.key("nodes");
  w.open_arr();
  for (NodeIndex v = 0; v < net.node_count(); ++v) {
    w.open_obj();
    w.key("id");
    w.value_raw(std::to_string(net.node_id(v)));
    if (auto xy = net.node_xy(v)) {
      w.key("x");
      w.value_raw(format_precise((*xy)[0]));
      w.key("y");
      w.value_raw(format_precise((*xy)[1]));
    }
    w.close_obj();
  }
  w.close_arr();
  w.key("edges");
  w.open_arr();
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const EdgeRecord& rec = net.edge(e);
    w.open_obj();
    w.key("edge_id");
    w.value_raw(std::to_string(rec.id));
    w.key("src");
    w.value_raw(std::to_string(net.node_id(rec.from)));
    w.key("dst");
    w.value_raw(std::to_string(net.node_id(rec.to)));
    w.key("length_m");
    w.value_raw(format_precise(rec.attrs.length_m));
    w.key("speed_mps");
    w.value_raw(format_precise(rec.attrs.speed_limit_mps));
    w.key("capacity");
    w.value_raw(format_precise(rec.attrs.free_flow_capacity));
    w.close_obj();
  }
  w.close_arr();
  w.close_obj();
  return w.str() + "\n";
}

void save_network_json(const RoadNetwork& net, const std::string& path) {
  open_output(path) << network_to_json(net);
}

QuerySet load_queries(const std::string& path, const RoadNetwork& net) {
  std::ifstream in = open_input(path);
  QuerySet qs;
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  const NetworkConfig& cfg = net.config();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = split_csv_line(line);
    if (header) {
      if (f.size() != 4 || f[0] != "query_id" || f[1] != "src" || f[2] != "dst" ||
          f[3] != "depart_s")
        throw CsvError(path, lineno, "expected header query_id,src,dst,depart_s");
      header = false;
      continue;
    }
    if (f.size() != 4) throw CsvError(path, lineno, "expected 4 fields");
    Query q;
    q.id = parse_int(f[0], path, lineno);
    const std::int64_t src = parse_int(f[1], path, lineno);
    const std::int64_t dst = parse_int(f[2], path, lineno);
    auto si = net.find_node(src);
    auto di = net.find_node(dst);
    if (!si) throw CsvError(path, lineno, "unknown node " + std::to_string(src));
    if (!di) throw CsvError(path, lineno, "unknown node " + std::to_string(dst));
    if (*si == *di) throw CsvError(path, lineno, "source equals destination");
    q.source = *si;
    q.destination = *di;
    q.depart = cfg.seconds_to_intervals(parse_double(f[3], path, lineno));
    if (q.depart < 0.0 || q.depart >= cfg.horizon_intervals)
      throw CsvError(path, lineno, "departure outside horizon");
    qs.add(q);
  }
  qs.sort_and_validate(net);
  return qs;
}

void save_queries(const QuerySet& qs, const RoadNetwork& net, const std::string& path,
                  const std::string& header_comment) {
  std::ofstream out = open_output(path);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "query_id,src,dst,depart_s\n";
  const NetworkConfig& cfg = net.config();
  for (const QueryRecord& r : qs.records())
    out << r.query.id << ',' << net.node_id(r.query.source) << ','
        << net.node_id(r.query.destination) << ','
        << format_precise(cfg.intervals_to_seconds(r.query.depart)) << '\n';
}

EdgeLoadMatrix load_elm(const std::string& path, const RoadNetwork& net) {
  std::ifstream in = open_input(path);
  EdgeLoadMatrix elm(net.config().horizon_intervals);
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = split_csv_line(line);
    if (header) {
      if (f.size() != 3 || f[0] != "edge_id" || f[1] != "interval" || f[2] != "load")
        throw CsvError(path, lineno, "expected header edge_id,interval,load");
      header = false;
      continue;
    }
    if (f.size() != 3) throw CsvError(path, lineno, "expected 3 fields");
    const std::int64_t edge_id = parse_int(f[0], path, lineno);
    auto e = net.find_edge(edge_id);
    if (!e) throw CsvError(path, lineno, "unknown edge " + std::to_string(edge_id));
    const std::int64_t tau = parse_int(f[1], path, lineno);
    const std::int64_t load = parse_int(f[2], path, lineno);
    if (load < 0) throw CsvError(path, lineno, "negative load");
    if (load > 0) elm.set_load(*e, static_cast<Interval>(tau), static_cast<int>(load));
  }
  return elm;
}

void save_elm(const EdgeLoadMatrix& elm, const RoadNetwork& net, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "edge_id,interval,load\n";
  auto cells = elm.sorted_cells();
  std::sort(cells.begin(), cells.end(), [&net](const auto& a, const auto& b) {
    return std::tie(net.edge(std::get<0>(a)).id, std::get<1>(a)) <
           std::tie(net.edge(std::get<0>(b)).id, std::get<1>(b));
  });
  for (const auto& [e, tau, load] : cells)
    out << net.edge(e).id << ',' << tau << ',' << load << '\n';
}

void save_paths_csv(const std::vector<ReplayedQuery>& rows, const RoadNetwork& net,
                    const std::string& path) {
  std::ofstream out = open_output(path);
  out << "query_id,hop_index,edge_id,entry_time_s,exit_time_s\n";
  const NetworkConfig& cfg = net.config();
  for (const ReplayedQuery& r : rows)
    for (std::size_t i = 0; i < r.actual.hops.size(); ++i) {
      const Hop& h = r.actual.hops[i];
      out << r.query_id << ',' << i << ',' << net.edge(h.edge).id << ','
          << format_g9(cfg.intervals_to_seconds(h.entry)) << ','
          << format_g9(cfg.intervals_to_seconds(h.exit)) << '\n';
    }
}

void save_penalties_csv(const std::vector<ReplayedQuery>& rows, const RoadNetwork& net,
                        const std::string& path) {
  std::ofstream out = open_output(path);
  out << "query_id,pi_minutes\n";
  const double minutes_per_interval = net.config().interval_length_s / 60.0;
  for (const ReplayedQuery& r : rows)
    out << r.query_id << ',' << format_g9(r.penalty * minutes_per_interval) << '\n';
}

std::string metrics_to_json(const MetricsReport& m) {
  JsonWriter w;
  w.open_obj();
  w.key("empty");
  w.value_raw(m.empty ? "true" : "false");
  w.key("queries");
  w.value_raw(std::to_string(m.queries));
  w.key("completed");
  w.value_raw(std::to_string(m.completed));
  w.key("failed");
  w.value_raw(std::to_string(m.failed));
  w.key("overflowed");
  w.value_raw(std::to_string(m.overflowed));
  w.key("ajt_minutes");
  w.value_raw(format_g9(m.ajt_minutes));
  w.key("ffcu");
  w.value_raw(format_g9(m.ffcu));
  w.key("ld");
  w.value_raw(format_g9(m.ld));
  w.key("penalty_mean_minutes");
  w.value_raw(format_g9(m.penalty_mean_minutes));
  w.key("penalty_std_minutes");
  w.value_raw(format_g9(m.penalty_std_minutes));
  w.key("penalty_histogram_1min");
  w.open_arr();
  for (std::int64_t b : m.penalty_histogram_1min) w.value_raw(std::to_string(b));
  w.close_arr();
  w.close_obj();
  return w.str() + "\n";
}

void save_metrics_json(const MetricsReport& m, const std::string& path) {
  open_output(path) << metrics_to_json(m);
}

void save_manifest_json(const RunManifest& m, const std::string& path) {
  JsonWriter w;
  w.open_obj();
  w.key("algorithm");
  w.value_str(m.algorithm);
  w.key("network_file");
  w.value_str(m.network_file);
  w.key("network_hash");
  w.value_str(m.network_hash);
  w.key("query_file");
  w.value_str(m.query_file);
  w.key("queries_hash");
  w.value_str(m.queries_hash);
  w.key("config");
  w.open_obj();
  w.key("interval_length_s");
  w.value_raw(format_g9(m.net_cfg.interval_length_s));
  w.key("base_headway_s");
  w.value_raw(format_g9(m.net_cfg.base_headway_s));
  w.key("transition_penalty_factor");
  w.value_raw(format_g9(m.net_cfg.transition_penalty_factor));
  w.key("horizon_intervals");
  w.value_raw(std::to_string(m.net_cfg.horizon_intervals));
  w.key("time_origin_s");
  w.value_raw(format_g9(m.net_cfg.time_origin_s));
  w.key("k");
  w.value_raw(std::to_string(m.exp_cfg.k));
  w.key("y_s");
  w.value_raw(format_g9(m.exp_cfg.window_y_s));
  w.key("max_candidates");
  w.value_raw(std::to_string(m.exp_cfg.max_candidates));
  w.key("gamma");
  w.value_raw(format_g9(m.exp_cfg.gamma));
  w.key("base_elm");
  w.value_str(m.base_elm_file);
  w.key("predictor");
  w.value_str(m.exp_cfg.predictor == PredictorKind::kTable ? "table" : "zero");
  w.key("seed");
  w.value_raw(std::to_string(m.exp_cfg.seed));
  w.key("workers");
  w.value_raw(std::to_string(m.exp_cfg.workers));
  w.close_obj();
  w.key("counts");
  w.open_obj();
  w.key("queries");
  w.value_raw(std::to_string(m.queries));
  w.key("completed");
  w.value_raw(std::to_string(m.completed));
  w.key("failed");
  w.value_raw(std::to_string(m.failed));
  w.key("overflowed");
  w.value_raw(std::to_string(m.overflowed));
  w.close_obj();
  w.key("wall_times");
  w.open_obj();
  w.key("plan_s");
  w.value_raw(format_g9(m.plan_wall_seconds));
  w.key("replay_s");
  w.value_raw(format_g9(m.replay_wall_seconds));
  w.close_obj();
  w.key("end_to_end_avg_minutes");
  w.value_raw(format_g9(m.end_to_end_avg_minutes));
  w.close_obj();
  open_output(path) << w.str() << "\n";
}

RunManifest load_manifest_json(const std::string& path) {
  std::ifstream in = open_input(path);
  nlohmann::json j = nlohmann::json::parse(in);
  RunManifest m;
  m.algorithm = j.at("algorithm").get<std::string>();
  m.network_file = j.at("network_file").get<std::string>();
  m.network_hash = j.at("network_hash").get<std::string>();
  m.query_file = j.at("query_file").get<std::string>();
  m.queries_hash = j.at("queries_hash").get<std::string>();
  const auto& c = j.at("config");
  m.net_cfg.interval_length_s = c.at("interval_length_s");
  m.net_cfg.base_headway_s = c.at("base_headway_s");
  m.net_cfg.transition_penalty_factor = c.at("transition_penalty_factor");
  m.net_cfg.horizon_intervals = c.at("horizon_intervals");
  m.net_cfg.time_origin_s = c.at("time_origin_s");
  m.exp_cfg.k = c.at("k");
  m.exp_cfg.window_y_s = c.at("y_s");
  m.exp_cfg.max_candidates = c.at("max_candidates");
  m.exp_cfg.gamma = c.at("gamma");
  m.base_elm_file = c.at("base_elm").get<std::string>();
  m.exp_cfg.predictor =
      c.at("predictor").get<std::string>() == "zero" ? PredictorKind::kZero : PredictorKind::kTable;
  m.exp_cfg.seed = c.at("seed").get<std::uint64_t>();
  m.exp_cfg.workers = c.at("workers");
  const auto& n = j.at("counts");
  m.queries = n.at("queries");
  m.completed = n.at("completed");
  m.failed = n.at("failed");
  m.overflowed = n.at("overflowed");
  const auto& t = j.at("wall_times");
  m.plan_wall_seconds = t.at("plan_s");
  m.replay_wall_seconds = t.at("replay_s");
  m.end_to_end_avg_minutes = j.at("end_to_end_avg_minutes");
  return m;
}

MetricsReport load_metrics_json(const std::string& path) {
  std::ifstream in = open_input(path);
  nlohmann::json j = nlohmann::json::parse(in);
  MetricsReport m;
  m.empty = j.at("empty");
  m.queries = j.at("queries");
  m.completed = j.at("completed");
  m.failed = j.at("failed");
  m.overflowed = j.at("overflowed");
  m.ajt_minutes = j.at("ajt_minutes");
  m.ffcu = j.at("ffcu");
  m.ld = j.at("ld");
  m.penalty_mean_minutes = j.at("penalty_mean_minutes");
  m.penalty_std_minutes = j.at("penalty_std_minutes");
  m.penalty_histogram_1min = j.at("penalty_histogram_1min").get<std::vector<std::int64_t>>();
  m.end_to_end_avg_minutes = j.value("end_to_end_avg_minutes", 0.0);
  return m;
}

void write_run_directory(const std::string& dir, const RunManifest& manifest,
                         const ExperimentResult& result, const RoadNetwork& net) {
  std::filesystem::create_directories(dir);
  const auto p = [&dir](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };
  save_manifest_json(manifest, p("manifest.json"));
  save_metrics_json(result.metrics, p("metrics.json"));
  save_paths_csv(result.replay.completed, net, p("paths.csv"));
  save_penalties_csv(result.replay.completed, net, p("penalties.csv"));
  save_elm(result.replay.elm, net, p("elm.csv"));
}

}  // namespace tlan::io
