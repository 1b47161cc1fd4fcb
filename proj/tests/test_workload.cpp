#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "support.hpp"
#include "tlan/io.hpp"
#include "tlan/workload.hpp"

using namespace tlan;

namespace {

std::filesystem::path temp_file(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "tlan_test_workload";
  std::filesystem::create_directories(dir);
  return dir / name;
}

RoadNetwork small_grid(std::uint64_t seed = 1) {
  return generate_grid_network(5, 5, 250.0, 12.5, fixtures::basic_cfg(360, 3, 0.5, 64), seed,
                               0.05);
}

}  // namespace

TEST_CASE("query csv ingestion") {
  RoadNetwork net = small_grid();

  SUBCASE("single valid row") {
    auto p = temp_file("one.csv");
    std::ofstream(p) << "query_id,src,dst,depart_s\n7,0,24,1800\n";
    QuerySet qs = io::load_queries(p.string(), net);
    REQUIRE(qs.size() == 1);
    CHECK(qs[0].query.id == 7);
    CHECK(qs[0].query.depart == approx_abs(5.0, 1e-12));
  }
  SUBCASE("source equal to destination is rejected with the row") {
    auto p = temp_file("same.csv");
    std::ofstream(p) << "query_id,src,dst,depart_s\n1,3,3,0\n";
    try {
      io::load_queries(p.string(), net);
      FAIL("expected CsvError");
    } catch (const CsvError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unknown node is rejected") {
    auto p = temp_file("unknown.csv");
    std::ofstream(p) << "query_id,src,dst,depart_s\n1,3,999,0\n";
    CHECK_THROWS_AS(io::load_queries(p.string(), net), CsvError);
  }
  SUBCASE("duplicate ids are rejected") {
    auto p = temp_file("dup.csv");
    std::ofstream(p) << "query_id,src,dst,depart_s\n1,0,5,0\n1,2,6,30\n";
    CHECK_THROWS_AS(io::load_queries(p.string(), net), ValidationError);
  }
  SUBCASE("unsorted input comes out sorted by departure") {
    auto p = temp_file("unsorted.csv");
    std::ofstream(p) << "query_id,src,dst,depart_s\n1,0,5,720\n2,2,6,0\n3,1,9,360\n";
    QuerySet qs = io::load_queries(p.string(), net);
    REQUIRE(qs.size() == 3);
    CHECK(qs[0].query.id == 2);
    CHECK(qs[1].query.id == 3);
    CHECK(qs[2].query.id == 1);
  }
  SUBCASE("comment headers are skipped and round trips are exact") {
    GeneratorParams params;
    params.count = 50;
    params.window_end_s = 3600;
    params.hotspot_bias = 0.3;
    params.seed = 4;
    QuerySet qs = generate_queries(net, params);
    auto p = temp_file("rt.csv");
    io::save_queries(qs, net, p.string(), "seed=4 n=50");
    QuerySet back = io::load_queries(p.string(), net);
    REQUIRE(back.size() == qs.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
      CHECK(back[i].query.id == qs[i].query.id);
      CHECK(back[i].query.source == qs[i].query.source);
      CHECK(back[i].query.destination == qs[i].query.destination);
      CHECK(back[i].query.depart == approx_abs(qs[i].query.depart, 1e-12));
    }
  }
}

TEST_CASE("query generation") {
  RoadNetwork net = small_grid();

  SUBCASE("one query within the window") {
    GeneratorParams params;
    params.count = 1;
    params.window_start_s = 360;
    params.window_end_s = 720;
    params.seed = 9;
    QuerySet qs = generate_queries(net, params);
    REQUIRE(qs.size() == 1);
    CHECK(qs[0].query.depart >= 1.0);
    CHECK(qs[0].query.depart <= 2.0);
    CHECK(qs[0].query.source != qs[0].query.destination);
  }
  SUBCASE("same seed reproduces the set") {
    GeneratorParams params;
    params.count = 100;
    params.window_end_s = 3600;
    params.hotspot_bias = 0.4;
    params.seed = 123;
    QuerySet a = generate_queries(net, params);
    QuerySet b = generate_queries(net, params);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].query.source == b[i].query.source);
      CHECK(a[i].query.destination == b[i].query.destination);
      CHECK(a[i].query.depart == b[i].query.depart);
    }
  }
  SUBCASE("unbiased endpoints pass a chi-square uniformity check") {
    GeneratorParams params;
    params.count = 10000;
    params.window_end_s = 3600;
    params.hotspot_bias = 0.0;
    params.seed = 42;
    QuerySet qs = generate_queries(net, params);
    const double n_nodes = static_cast<double>(net.node_count());
    const double expected = static_cast<double>(qs.size()) / n_nodes;
    std::vector<double> src_count(net.node_count(), 0.0), dst_count(net.node_count(), 0.0);
    for (const QueryRecord& r : qs.records()) {
      src_count[r.query.source] += 1.0;
      dst_count[r.query.destination] += 1.0;
    }
    auto chi2 = [&](const std::vector<double>& counts) {
      double s = 0.0;
      for (double c : counts) s += (c - expected) * (c - expected) / expected;
      return s;
    };
    // 24 degrees of freedom at 5% significance
    CHECK(chi2(src_count) < 36.415);
    CHECK(chi2(dst_count) < 36.415);
  }
  SUBCASE("full bias sends every destination to the hotspot set") {
    GeneratorParams params;
    params.count = 500;
    params.window_end_s = 3600;
    params.hotspot_bias = 1.0;
    params.seed = 8;
    QuerySet qs = generate_queries(net, params);
    const auto hubs = hotspot_nodes(net);
    const std::set<NodeIndex> hub_set(hubs.begin(), hubs.end());
    for (const QueryRecord& r : qs.records()) CHECK(hub_set.count(r.query.destination) == 1);
  }
}

TEST_CASE("free-flow precomputation") {
  SUBCASE("line graph costs") {
    NetworkConfig cfg = fixtures::basic_cfg(360, 3, 0.0, 64);
    RoadNetwork net;
    for (int i = 0; i < 3; ++i) net.add_node(i);
    net.add_edge(0, 0, 1, 0.1 * 3600, 10);
    net.add_edge(1, 1, 2, 0.1 * 3600, 10);
    net.finalize(cfg);
    QuerySet qs;
    Query q;
    q.id = 1;
    q.source = 0;
    q.destination = 2;
    q.depart = 0.0;
    qs.add(q);
    qs.sort_and_validate(net);
    precompute_free_flow(net, qs);
    CHECK(qs[0].reachable);
    CHECK(qs[0].phi_cost == approx_abs(0.2, 1e-12));
    CHECK(qs[0].phi_edges.size() == 2);
  }
  SUBCASE("unreachable queries are flagged") {
    NetworkConfig cfg = fixtures::basic_cfg(360, 3, 0.0, 64);
    RoadNetwork net;
    for (int i = 0; i < 3; ++i) net.add_node(i);
    net.add_edge(0, 0, 1, 100, 10);
    net.finalize(cfg);
    QuerySet qs;
    Query q;
    q.id = 1;
    q.source = 2;
    q.destination = 0;
    q.depart = 0.0;
    qs.add(q);
    qs.sort_and_validate(net);
    precompute_free_flow(net, qs);
    CHECK_FALSE(qs[0].reachable);
    CHECK(qs[0].phi_cost == kInfCost);
  }
  SUBCASE("idempotent") {
    RoadNetwork net = small_grid();
    GeneratorParams params;
    params.count = 30;
    params.window_end_s = 3600;
    params.seed = 2;
    QuerySet qs = generate_queries(net, params);
    precompute_free_flow(net, qs);
    std::vector<double> first;
    for (const QueryRecord& r : qs.records()) first.push_back(r.phi_cost);
    precompute_free_flow(net, qs);
    for (std::size_t i = 0; i < qs.size(); ++i) CHECK(qs[i].phi_cost == first[i]);
  }
}
