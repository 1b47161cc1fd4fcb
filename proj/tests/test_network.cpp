#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "tlan/io.hpp"
#include "tlan/network.hpp"

using namespace tlan;

namespace {

NetworkConfig make_cfg(double interval_s, double headway_s, double factor, int horizon = 64) {
  NetworkConfig cfg;
  cfg.interval_length_s = interval_s;
  cfg.base_headway_s = headway_s;
  cfg.transition_penalty_factor = factor;
  cfg.horizon_intervals = horizon;
  return cfg;
}

EdgeAttrs make_attrs(double length_m, double speed_mps) {
  EdgeAttrs a;
  a.length_m = length_m;
  a.speed_limit_mps = speed_mps;
  return a;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "tlan_test_network";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("free-flow capacity follows the headway model") {
  // delta=300m, z=15m/s: transit 20s, psi=0.5*20=10s, I=360s
  const double expected = 300.0 / (15.0 * 3.0) + 360.0 / (3.0 + 10.0);
  CHECK(compute_free_flow_capacity(make_attrs(300, 15), make_cfg(360, 3, 0.5)) ==
        approx_abs(expected, 1e-9));

  // edge holding exactly one headway, no transition penalty, I = eta
  CHECK(compute_free_flow_capacity(make_attrs(30, 10), make_cfg(3, 3, 0.0)) ==
        doctest::Approx(2.0));

  // delta=100m, z=10m/s: transit 10s, psi=5s via factor 0.5
  const double expected2 = 100.0 / (10.0 * 3.0) + 360.0 / (3.0 + 5.0);
  CHECK(compute_free_flow_capacity(make_attrs(100, 10), make_cfg(360, 3, 0.5)) ==
        approx_abs(expected2, 1e-9));
}

TEST_CASE("capacity is monotone in interval and length, antitone in headway") {
  const EdgeAttrs a = make_attrs(300, 15);
  double prev = 0.0;
  for (double interval_s : {60.0, 120.0, 240.0, 480.0}) {
    const double f = compute_free_flow_capacity(a, make_cfg(interval_s, 3, 0.5));
    CHECK(f > prev);
    prev = f;
  }
  prev = 0.0;
  for (double len : {100.0, 200.0, 400.0, 800.0}) {
    const double f = compute_free_flow_capacity(make_attrs(len, 15), make_cfg(360, 3, 0.0));
    CHECK(f > prev);
    prev = f;
  }
  prev = 1e18;
  for (double eta : {1.0, 2.0, 4.0, 8.0}) {
    const double f = compute_free_flow_capacity(a, make_cfg(360, eta, 0.5));
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("minimum travel time folds the transition penalty in") {
  CHECK(compute_min_travel_time(make_attrs(300, 15), make_cfg(360, 3, 0.5)) ==
        approx_abs((20.0 + 10.0) / 360.0, 1e-12));
  // factor 0: plain delta/(z*I)
  CHECK(compute_min_travel_time(make_attrs(300, 15), make_cfg(360, 3, 0.0)) ==
        approx_abs(20.0 / 360.0, 1e-12));
  // one full interval
  CHECK(compute_min_travel_time(make_attrs(360.0 * 12.0, 12.0), make_cfg(360, 3, 0.0)) ==
        doctest::Approx(1.0));
}

TEST_CASE("config invariants are rejected up front") {
  NetworkConfig cfg = make_cfg(360, 3, 0.5);
  cfg.interval_length_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = make_cfg(360, -1, 0.5);
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = make_cfg(360, 3, -0.1);
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = make_cfg(360, 3, 0.5, 0);
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("network construction validates structure") {
  const NetworkConfig cfg = make_cfg(360, 3, 0.5);

  SUBCASE("self loop rejected") {
    RoadNetwork net;
    net.add_node(1);
    net.add_edge(0, 1, 1, 100, 10);
    CHECK_THROWS_AS(net.finalize(cfg), ValidationError);
  }
  SUBCASE("dangling endpoint rejected") {
    RoadNetwork net;
    net.add_node(1);
    net.add_node(2);
    net.add_edge(0, 1, 3, 100, 10);
    CHECK_THROWS_AS(net.finalize(cfg), ValidationError);
  }
  SUBCASE("duplicate directed pair rejected") {
    RoadNetwork net;
    net.add_node(1);
    net.add_node(2);
    net.add_edge(0, 1, 2, 100, 10);
    net.add_edge(1, 1, 2, 120, 10);
    CHECK_THROWS_AS(net.finalize(cfg), ValidationError);
  }
  SUBCASE("non-positive attribute rejected") {
    RoadNetwork net;
    net.add_node(1);
    net.add_node(2);
    net.add_edge(0, 1, 2, -5, 10);
    CHECK_THROWS_AS(net.finalize(cfg), ValidationError);
  }
  SUBCASE("opposite directions are distinct edges") {
    RoadNetwork net;
    net.add_node(1);
    net.add_node(2);
    net.add_edge(0, 1, 2, 100, 10);
    net.add_edge(1, 2, 1, 100, 10);
    net.finalize(cfg);
    CHECK(net.edge_count() == 2);
  }
}

TEST_CASE("grid generator shapes and determinism") {
  const NetworkConfig cfg = make_cfg(360, 3, 0.5);
  RoadNetwork g22 = generate_grid_network(2, 2, 250, 12.5, cfg, 7);
  CHECK(g22.node_count() == 4);
  CHECK(g22.edge_count() == 8);

  RoadNetwork g2020 = generate_grid_network(20, 20, 250, 12.5, cfg, 7);
  CHECK(g2020.node_count() == 400);
  CHECK(g2020.edge_count() == 1520);

  RoadNetwork a = generate_grid_network(5, 4, 250, 12.5, cfg, 99, 0.1);
  RoadNetwork b = generate_grid_network(5, 4, 250, 12.5, cfg, 99, 0.1);
  CHECK(io::network_to_json(a) == io::network_to_json(b));

  RoadNetwork c = generate_grid_network(5, 4, 250, 12.5, cfg, 100, 0.1);
  CHECK(io::network_to_json(a) != io::network_to_json(c));
}

TEST_CASE("network file ingestion") {
  const NetworkConfig cfg = make_cfg(360, 3, 0.5);
  const auto dir = temp_dir();

  SUBCASE("minimal two-node file") {
    {
      std::ofstream(dir / "mini.nodes.csv") << "node_id,x,y\n1,0,0\n2,100,0\n";
      std::ofstream(dir / "mini.edges.csv")
          << "edge_id,src,dst,length_m,speed_mps\n10,1,2,100,10\n";
    }
    RoadNetwork net = io::load_network((dir / "mini.edges.csv").string(), cfg);
    CHECK(net.node_count() == 2);
    CHECK(net.edge_count() == 1);
    const EdgeAttrs& a = net.edge(0).attrs;
    CHECK(a.free_flow_capacity == doctest::Approx(compute_free_flow_capacity(a, cfg)));
  }
  SUBCASE("unknown endpoint reports the line") {
    {
      std::ofstream(dir / "bad.nodes.csv") << "node_id\n1\n2\n";
      std::ofstream(dir / "bad.edges.csv")
          << "edge_id,src,dst,length_m,speed_mps\n10,1,7,100,10\n";
    }
    CHECK_THROWS_AS(io::load_network((dir / "bad.edges.csv").string(), cfg), ValidationError);
  }
  SUBCASE("duplicate directed edge rejected") {
    {
      std::ofstream(dir / "dup.nodes.csv") << "node_id\n1\n2\n";
      std::ofstream(dir / "dup.edges.csv")
          << "edge_id,src,dst,length_m,speed_mps\n10,1,2,100,10\n11,1,2,90,10\n";
    }
    CHECK_THROWS_AS(io::load_network((dir / "dup.edges.csv").string(), cfg), ValidationError);
  }
  SUBCASE("six-intersection fixture file parses with explicit capacities") {
    tlan::RoadNetwork fig1 = fixtures::fig1_network();
    const std::string edges = io::save_network_csv(fig1, (dir / "fig1").string());
    RoadNetwork back = io::load_network(edges, fixtures::basic_cfg(360, 3, 0.0, 64));
    CHECK(back.node_count() == 6);
    CHECK(back.edge_count() == 8);
    for (EdgeIndex e = 0; e < back.edge_count(); ++e)
      CHECK(back.edge(e).attrs.free_flow_capacity == 4.0);
  }
  SUBCASE("malformed number reports file and line") {
    {
      std::ofstream(dir / "num.nodes.csv") << "node_id\n1\n2\n";
      std::ofstream(dir / "num.edges.csv")
          << "edge_id,src,dst,length_m,speed_mps\n10,1,2,abc,10\n";
    }
    try {
      io::load_network((dir / "num.edges.csv").string(), cfg);
      FAIL("expected CsvError");
    } catch (const CsvError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("round trips preserve attributes") {
  const NetworkConfig cfg = make_cfg(360, 3, 0.5, 96);
  RoadNetwork net = generate_grid_network(4, 5, 217.3, 13.7, cfg, 42, 0.08);
  const auto dir = temp_dir();

  SUBCASE("csv") {
    const std::string edges = io::save_network_csv(net, (dir / "rt").string());
    RoadNetwork back = io::load_network(edges, cfg);
    REQUIRE(back.edge_count() == net.edge_count());
    REQUIRE(back.node_count() == net.node_count());
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
      CHECK(back.edge(e).id == net.edge(e).id);
      CHECK(back.edge(e).attrs.length_m ==
            approx_abs(net.edge(e).attrs.length_m, 1e-12));
      CHECK(back.edge(e).attrs.speed_limit_mps ==
            approx_abs(net.edge(e).attrs.speed_limit_mps, 1e-12));
      CHECK(back.edge(e).attrs.min_travel_time ==
            approx_abs(net.edge(e).attrs.min_travel_time, 1e-12));
      CHECK(back.edge(e).attrs.free_flow_capacity ==
            approx_abs(net.edge(e).attrs.free_flow_capacity, 1e-12));
    }
  }
  SUBCASE("json carries its own config") {
    const std::string path = (dir / "rt.json").string();
    io::save_network_json(net, path);
    NetworkConfig other;  // defaults differ; the file's config section wins
    other.horizon_intervals = 5;
    RoadNetwork back = io::load_network(path, other);
    CHECK(back.config().interval_length_s == cfg.interval_length_s);
    CHECK(back.config().horizon_intervals == cfg.horizon_intervals);
    CHECK(io::network_to_json(back) == io::network_to_json(net));
  }
}

TEST_CASE("free-flow heuristic distances") {
  NetworkConfig cfg = make_cfg(360, 3, 0.0);
  RoadNetwork net;
  for (int i = 1; i <= 4; ++i) net.add_node(i);
  // a -> b -> c with 0.1-interval edges; node 4 disconnected
  net.add_edge(0, 1, 2, 360, 10);  // 36s = 0.1 interval
  net.add_edge(1, 2, 3, 360, 10);
  net.finalize(cfg);

  const NodeIndex a = *net.find_node(1), b = *net.find_node(2), c = *net.find_node(3),
                  d = *net.find_node(4);
  auto h = free_flow_heuristic(net, c);
  CHECK(h[c] == 0.0);
  CHECK(h[b] == approx_abs(0.1, 1e-12));
  CHECK(h[a] == approx_abs(0.2, 1e-12));
  CHECK(h[d] == kInfCost);
}
