#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tlan/elm.hpp"
#include "tlan/network.hpp"
#include "tlan/simulation.hpp"
#include "tlan/workload.hpp"

namespace tlan::io {

/// Fixed 9-significant-digit formatting used for all numeric output.
std::string format_g9(double v);

/// FNV-1a 64 over the file's bytes, as hex. Used to pin run inputs in
/// manifests.
std::string file_hash(const std::string& path);

/// Loads a network from either a combined JSON document ("*.json", with
/// optional config section overriding cfg) or an edge CSV "<stem>.edges.csv"
/// with its sibling "<stem>.nodes.csv".
RoadNetwork load_network(const std::string& path, NetworkConfig cfg);

/// Writes "<stem>.edges.csv" + "<stem>.nodes.csv"; returns the edges path.
std::string save_network_csv(const RoadNetwork& net, const std::string& stem);
void save_network_json(const RoadNetwork& net, const std::string& path);

/// Serialize to the combined JSON document as a string (deterministic; used
/// for byte-identity checks).
std::string network_to_json(const RoadNetwork& net);

QuerySet load_queries(const std::string& path, const RoadNetwork& net);
void save_queries(const QuerySet& qs, const RoadNetwork& net, const std::string& path,
                  const std::string& header_comment = "");

EdgeLoadMatrix load_elm(const std::string& path, const RoadNetwork& net);
void save_elm(const EdgeLoadMatrix& elm, const RoadNetwork& net, const std::string& path);

void save_paths_csv(const std::vector<ReplayedQuery>& rows, const RoadNetwork& net,
                    const std::string& path);
void save_penalties_csv(const std::vector<ReplayedQuery>& rows, const RoadNetwork& net,
                        const std::string& path);

/// metrics.json carries only deterministic quantities (no wall times) so
/// equal runs are byte-identical.
std::string metrics_to_json(const MetricsReport& m);
void save_metrics_json(const MetricsReport& m, const std::string& path);

struct RunManifest {
  std::string algorithm;
  std::string network_file;
  std::string network_hash;
  std::string query_file;
  std::string queries_hash;
  NetworkConfig net_cfg;
  ExperimentConfig exp_cfg;
  std::string base_elm_file;
  std::size_t queries = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t overflowed = 0;
  double plan_wall_seconds = 0.0;
  double replay_wall_seconds = 0.0;
  double end_to_end_avg_minutes = 0.0;
};

void save_manifest_json(const RunManifest& m, const std::string& path);
RunManifest load_manifest_json(const std::string& path);
MetricsReport load_metrics_json(const std::string& path);

/// Writes manifest.json, paths.csv, elm.csv, metrics.json, penalties.csv
/// into dir (created if missing).
void write_run_directory(const std::string& dir, const RunManifest& manifest,
                         const ExperimentResult& result, const RoadNetwork& net);

}  // namespace tlan::io
