#include <gtest/gtest.h>

#include <random>

#include "dfr/task_graph.hpp"

using namespace dfr;

TEST(TaskGraph, ThreeProcessesTwoIterations) {
  auto g = build_task_graph(ProcessTopology::line(3), 2, 6, 200e9);
  EXPECT_EQ(g.size(), 6u);
  const auto& t = g.node({1, 1});
  std::vector<TaskId> want{{0, 0}, {1, 0}, {2, 0}};
  EXPECT_EQ(t.inputs, want);
  EXPECT_DOUBLE_EQ(t.flops, 200e9);
}

TEST(TaskGraph, SingleProcessIsAChain) {
  auto g = build_task_graph(ProcessTopology::line(1), 5, 6, 1.0);
  EXPECT_EQ(g.size(), 5u);
  EXPECT_TRUE(g.node({0, 0}).inputs.empty());
  for (Iteration i = 1; i < 5; ++i) {
    ASSERT_EQ(g.node({0, i}).inputs.size(), 1u);
    EXPECT_EQ(g.node({0, i}).inputs[0], (TaskId{0, i - 1}));
  }
}

TEST(TaskGraph, HundredProcessesExhaustiveWiring) {
  const std::int64_t n = 100;
  auto g = build_task_graph(ProcessTopology::line(n), 1000, 6, 200e9);
  EXPECT_EQ(g.size(), 100000u);
  for (const auto& node : g.nodes()) {
    const auto [p, i] = node.id;
    if (i == 0) {
      EXPECT_TRUE(node.inputs.empty());
      continue;
    }
    std::vector<TaskId> want;
    for (ProcessIndex q = p - 1; q <= p + 1; ++q) {
      if (q >= 0 && q < n) want.push_back({q, i - 1});
    }
    ASSERT_EQ(node.inputs, want) << "task (" << p << ", " << i << ")";
    for (const auto& in : node.inputs) ASSERT_EQ(in.iteration, i - 1);
  }
  EXPECT_EQ(g.node({0, 5}).inputs.size(), 2u);
  EXPECT_EQ(g.node({99, 5}).inputs.size(), 2u);
  EXPECT_EQ(g.node({50, 5}).inputs.size(), 3u);
}

TEST(TaskGraph, Deterministic) {
  auto a = build_task_graph(ProcessTopology::line(7), 9, 3, 5.0);
  auto b = build_task_graph(ProcessTopology::line(7), 9, 3, 5.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.nodes()[k].id, b.nodes()[k].id);
    EXPECT_EQ(a.nodes()[k].inputs, b.nodes()[k].inputs);
  }
}

TEST(TaskGraph, RejectsCartesianAndBadArguments) {
  try {
    build_task_graph(ProcessTopology::cartesian(2, 4), 10, 6, 1.0);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported dimensionality"), std::string::npos);
  }
  EXPECT_THROW(build_task_graph(ProcessTopology::line(3), 0, 6, 1.0), std::invalid_argument);
  EXPECT_THROW(build_task_graph(ProcessTopology::line(3), 5, 0, 1.0), std::invalid_argument);
  EXPECT_THROW(ProcessTopology::line(0), std::invalid_argument);
  EXPECT_THROW(ProcessTopology::cartesian(0, 3), std::invalid_argument);
}

TEST(Topology, LineDistance) {
  auto t = ProcessTopology::line(10);
  EXPECT_EQ(partition_distance(t, 4, 4), 0);
  EXPECT_EQ(partition_distance(t, 2, 7), 5);
  EXPECT_THROW(partition_distance(t, 2, 10), std::out_of_range);
  EXPECT_THROW(partition_distance(t, -1, 0), std::out_of_range);
}

TEST(Topology, CartesianColumnMajorMap) {
  auto t = ProcessTopology::cartesian(2, 4);
  EXPECT_EQ(t.coords(1), (ProcessTopology::Coord{1, 0}));
  EXPECT_EQ(t.coords(5), (ProcessTopology::Coord{1, 2}));
  EXPECT_EQ(t.rank_at(1, 2), 5);
  EXPECT_EQ(partition_distance(t, 1, 5), 2);
  for (ProcessIndex r = 0; r < t.size(); ++r) EXPECT_EQ(t.rank_at(t.coords(r).row, t.coords(r).col), r);
}

TEST(Topology, Neighbours) {
  auto line = ProcessTopology::line(5);
  EXPECT_EQ(neighbours(line, 0), (std::vector<ProcessIndex>{1}));
  EXPECT_EQ(neighbours(line, 2), (std::vector<ProcessIndex>{1, 3}));
  EXPECT_EQ(neighbours(line, 4), (std::vector<ProcessIndex>{3}));
  auto grid = ProcessTopology::cartesian(2, 4);
  EXPECT_EQ(neighbours(grid, 1), (std::vector<ProcessIndex>{0, 3}));
  EXPECT_EQ(neighbours(grid, 2), (std::vector<ProcessIndex>{0, 3, 4}));
  EXPECT_THROW(neighbours(grid, 8), std::out_of_range);
}

TEST(Topology, DistanceIsAMetric) {
  std::mt19937_64 rng(7);
  for (auto topo : {ProcessTopology::line(40), ProcessTopology::cartesian(5, 7), ProcessTopology::cartesian(1, 9)}) {
    std::uniform_int_distribution<ProcessIndex> pick(0, topo.size() - 1);
    for (int k = 0; k < 2000; ++k) {
      const auto a = pick(rng), b = pick(rng), c = pick(rng);
      const auto ab = partition_distance(topo, a, b);
      EXPECT_EQ(ab, partition_distance(topo, b, a));
      EXPECT_EQ(ab == 0, a == b);
      EXPECT_LE(partition_distance(topo, a, c), ab + partition_distance(topo, b, c));
    }
  }
}
