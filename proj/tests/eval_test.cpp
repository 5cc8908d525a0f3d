#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lorentz/eval.hpp"
#include "test_util.hpp"

using namespace lorentz;

namespace {

LorentzPoint point_on_axis(double t, int axis, int dim) {
  Vec spatial(dim, 0.0);
  spatial[axis] = std::sinh(t);
  Vec coords(dim + 1);
  coords[0] = std::cosh(t);
  for (int i = 0; i < dim; ++i) coords[i + 1] = spatial[i];
  return LorentzPoint{coords};
}

EmbeddingTable random_table(Rng& rng, const std::vector<std::string>& ids, int dim,
                            double max_norm) {
  EmbeddingTable t(ids, dim);
  for (size_t i = 0; i < t.size(); ++i)
    t.set_point(i, testutil::random_point(rng, dim, max_norm));
  return t;
}

// sort-based rank oracle: position of d(u,v) in the ascending list of
// unobserved-candidate distances, ties counted against
long oracle_rank(const EmbeddingTable& t, const EdgeSet& obs, size_t u, size_t v) {
  std::vector<double> dists;
  for (size_t c = 0; c < t.size(); ++c)
    if (c != u && !obs.observed(u, c)) dists.push_back(lorentz_distance(t.row(u), t.row(c)));
  std::sort(dists.begin(), dists.end());
  const double dv = lorentz_distance(t.row(u), t.row(v));
  return long(std::upper_bound(dists.begin(), dists.end(), dv) - dists.begin()) + 1;
}

// average precision from the fully sorted candidate list
double oracle_ap(const EmbeddingTable& t, const EdgeSet& obs, size_t u) {
  struct Cand {
    double dist;
    bool pos;
    size_t idx;
  };
  std::vector<Cand> cands;
  for (size_t c = 0; c < t.size(); ++c)
    if (c != u) cands.push_back({lorentz_distance(t.row(u), t.row(c)), obs.observed(u, c), c});
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.pos != b.pos) return !a.pos;  // negatives first on ties
    return a.idx < b.idx;
  });
  double ap = 0.0;
  size_t hits = 0;
  for (size_t q = 0; q < cands.size(); ++q)
    if (cands[q].pos) ap += double(++hits) / double(q + 1);
  return hits ? ap / double(hits) : 0.0;
}

// textbook average-rank transform via pairwise counting
std::vector<double> oracle_ranks(const std::vector<double>& xs) {
  std::vector<double> r(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    size_t less = 0, equal = 0;
    for (size_t j = 0; j < xs.size(); ++j) {
      less += xs[j] < xs[i];
      equal += xs[j] == xs[i];
    }
    r[i] = double(less) + 0.5 * double(equal - 1) + 1.0;
  }
  return r;
}

double oracle_spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto rx = oracle_ranks(xs);
  const auto ry = oracle_ranks(ys);
  long double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= xs.size();
  my /= ys.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return double(sxy / std::sqrt(sxx * syy));
}

EdgeSet chain_edges(size_t n) {
  std::vector<std::pair<size_t, size_t>> pairs;
  for (size_t i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
  return EdgeSet::from_pairs(n, pairs);
}

TEST(RankEdge, ExtremesOnALine) {
  // a--b observed; c,d unobserved, farther / nearer along the same axis
  EmbeddingTable t({"a", "b", "c", "d"}, 2);
  t.set_point(0, point_on_axis(0.0, 0, 2));
  t.set_point(1, point_on_axis(1.0, 0, 2));
  t.set_point(2, point_on_axis(2.0, 0, 2));
  t.set_point(3, point_on_axis(3.0, 0, 2));
  const auto obs = EdgeSet::from_pairs(4, {{0, 1}});
  EXPECT_EQ(rank_edge(t, obs, "a", "b"), 1);  // beats both unobserved

  EmbeddingTable far = t;
  far.set_point(1, point_on_axis(5.0, 0, 2));
  EXPECT_EQ(rank_edge(far, obs, "a", "b"), 3);  // loses to both -> C+1
}

TEST(RankEdge, ErrorsOnBadInput) {
  EmbeddingTable t({"a", "b"}, 2);
  const auto obs = EdgeSet::from_pairs(2, {{0, 1}});
  EXPECT_THROW(rank_edge(t, obs, "zz", "b"), DataError);
}

TEST(RankEdge, MatchesSortOracleOnRandomInstances) {
  Rng rng(401);
  for (int inst = 0; inst < 30; ++inst) {
    const size_t n = 20;
    std::vector<std::string> ids;
    for (size_t i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
    const auto t = random_table(rng, ids, 3, 2.0);
    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.2) pairs.emplace_back(i, j);
    if (pairs.empty()) continue;
    const auto obs = EdgeSet::from_pairs(n, pairs);
    for (auto& [u, v] : pairs) {
      EXPECT_EQ(rank_edge(t, obs, ids[u], ids[v]), oracle_rank(t, obs, u, v));
      EXPECT_EQ(rank_edge(t, obs, ids[v], ids[u]), oracle_rank(t, obs, v, u));
    }
  }
}

TEST(ReconstructionMetrics, PerfectEmbedding) {
  EmbeddingTable t({"a", "b", "c"}, 2);
  t.set_point(0, point_on_axis(0.0, 0, 2));
  t.set_point(1, point_on_axis(1.0, 0, 2));
  t.set_point(2, point_on_axis(2.0, 0, 2));
  const auto [mr, map] = reconstruction_metrics(t, chain_edges(3));
  EXPECT_DOUBLE_EQ(mr, 1.0);
  EXPECT_DOUBLE_EQ(map, 1.0);
}

TEST(ReconstructionMetrics, MatchesBruteForceOnRandomInstances) {
  Rng rng(409);
  for (int inst = 0; inst < 30; ++inst) {
    const size_t n = 5 + rng.below(46);
    std::vector<std::string> ids;
    for (size_t i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
    const auto t = random_table(rng, ids, 3, 2.0);
    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.25) pairs.emplace_back(i, j);
    if (pairs.empty()) continue;
    const auto obs = EdgeSet::from_pairs(n, pairs);

    double rank_sum = 0.0, ap_sum = 0.0;
    size_t edges = 0, nodes_with_edges = 0;
    for (size_t u = 0; u < n; ++u) {
      if (obs.neighbors[u].empty()) continue;
      ++nodes_with_edges;
      ap_sum += oracle_ap(t, obs, u);
      for (size_t v : obs.neighbors[u]) {
        rank_sum += double(oracle_rank(t, obs, u, v));
        ++edges;
      }
    }
    const auto [mr, map] = reconstruction_metrics(t, obs);
    EXPECT_NEAR(mr, rank_sum / double(edges), 1e-12);
    EXPECT_NEAR(map, ap_sum / double(nodes_with_edges), 1e-12);

    // thread count must not change the result
    const auto [mr2, map2] = reconstruction_metrics(t, obs, 3);
    EXPECT_EQ(mr, mr2);
    EXPECT_EQ(map, map2);
  }
}

TEST(NormalizedRank, ChainAndTree) {
  TaxonomyDag chain;
  chain.add_edge("a", "b");
  chain.add_edge("b", "c");  // c root, b middle, a leaf
  EXPECT_DOUBLE_EQ(normalized_rank(chain, "c"), 0.0);
  EXPECT_DOUBLE_EQ(normalized_rank(chain, "b"), 0.5);
  EXPECT_DOUBLE_EQ(normalized_rank(chain, "a"), 1.0);

  const auto tree = testutil::balanced_tree(3, 4);
  const auto ranks = normalized_ranks(tree);
  EXPECT_DOUBLE_EQ(ranks[tree.index_of("n0")], 0.0);
  EXPECT_DOUBLE_EQ(ranks[tree.index_of("n120")], 1.0);
}

TEST(NormalizedRank, IsolatedNodeCountsAsRoot) {
  TaxonomyDag dag;
  dag.add_node("alone");
  dag.add_edge("x", "y");
  EXPECT_DOUBLE_EQ(normalized_rank(dag, "alone"), 0.0);
}

TEST(NormalizedRank, BoundsAndChainMonotonicityOnForests) {
  Rng rng(419);
  for (int inst = 0; inst < 20; ++inst) {
    // random forest: every node gets exactly one parent among earlier nodes
    TaxonomyDag dag;
    const size_t n = 5 + rng.below(60);
    dag.add_node("n0");
    for (size_t i = 1; i < n; ++i) {
      if (rng.uniform() < 0.1) {
        dag.add_node("n" + std::to_string(i));  // new root
      } else {
        dag.add_edge("n" + std::to_string(i), "n" + std::to_string(rng.below(i)));
      }
    }
    const auto ranks = normalized_ranks(dag);
    for (double r : ranks) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
    for (size_t u = 0; u < dag.node_count(); ++u)
      for (size_t c : dag.children(u)) EXPECT_GE(ranks[c], ranks[u]);
  }
}

TEST(SpearmanRho, TextbookCases) {
  const std::vector<double> xs{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(spearman_rho(xs, std::vector<double>{2, 4, 6, 8, 10}), 1.0);
  EXPECT_DOUBLE_EQ(spearman_rho(xs, std::vector<double>{5, 4, 3, 2, 1}), -1.0);
  // 1 - 6*sum(d^2)/(n(n^2-1)) with d^2 = (0,1,1,1,1)
  EXPECT_NEAR(spearman_rho(xs, std::vector<double>{1, 3, 2, 5, 4}), 0.8, 1e-15);
}

TEST(SpearmanRho, ErrorsAndTies) {
  const std::vector<double> xs{1, 2, 3};
  EXPECT_THROW(spearman_rho(xs, std::vector<double>{7, 7, 7}), DataError);
  EXPECT_THROW(spearman_rho(xs, std::vector<double>{1, 2}), std::invalid_argument);
  EXPECT_THROW(spearman_rho(std::vector<double>{1}, std::vector<double>{1}),
               std::invalid_argument);

  Rng rng(421);
  for (int inst = 0; inst < 50; ++inst) {
    const size_t n = 3 + rng.below(40);
    std::vector<double> a(n), b(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = double(rng.below(6));  // plenty of ties
      b[i] = double(rng.below(6));
    }
    const bool a_const = std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; });
    const bool b_const = std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; });
    if (a_const || b_const) continue;
    EXPECT_NEAR(spearman_rho(a, b), oracle_spearman(a, b), 1e-12);
  }
}

TEST(SpearmanRho, TieFreeMatchesClassicFormula) {
  Rng rng(431);
  for (int inst = 0; inst < 50; ++inst) {
    const size_t n = 4 + rng.below(30);
    std::vector<double> xs(n), ys(n);
    std::vector<double> perm(n);
    std::iota(perm.begin(), perm.end(), 1.0);
    rng.shuffle(perm);
    for (size_t i = 0; i < n; ++i) xs[i] = perm[i];
    rng.shuffle(perm);
    for (size_t i = 0; i < n; ++i) ys[i] = perm[i];
    double d2 = 0.0;
    for (size_t i = 0; i < n; ++i) d2 += (xs[i] - ys[i]) * (xs[i] - ys[i]);
    const double classic = 1.0 - 6.0 * d2 / (double(n) * (double(n) * n - 1.0));
    EXPECT_NEAR(spearman_rho(xs, ys), classic, 1e-12);
  }
}

TEST(GeneralityNorm, BasepointAndMonotoneAlongRay) {
  EmbeddingTable t({"origin", "near", "far"}, 2);
  t.set_point(0, lift(Vec{0, 0}));
  t.set_point(1, point_on_axis(0.5, 0, 2));
  t.set_point(2, point_on_axis(1.5, 0, 2));
  EXPECT_DOUBLE_EQ(generality_norm(t, "origin"), 0.0);
  EXPECT_LT(generality_norm(t, "near"), generality_norm(t, "far"));
  EXPECT_THROW(generality_norm(t, "missing"), DataError);

  Rng rng(433);
  for (int it = 0; it < 500; ++it) {
    const double t1 = rng.uniform(0.0, 4.0);
    const double t2 = t1 + rng.uniform(0.01, 2.0);
    EmbeddingTable ray({"p", "q"}, 3);
    ray.set_point(0, point_on_axis(t1, 1, 3));
    ray.set_point(1, point_on_axis(t2, 1, 3));
    EXPECT_LT(generality_norm(ray, "p"), generality_norm(ray, "q"));
  }
}

TEST(GeneralityNorm, InvariantUnderModelRoundtrip) {
  Rng rng(439);
  for (int it = 0; it < 1000; ++it) {
    const auto x = testutil::random_point(rng, 3, 5);
    const auto back = from_poincare(to_poincare(x));
    EXPECT_NEAR(to_poincare(x).norm(), to_poincare(back).norm(), 1e-10);
  }
}

TEST(Evaluate, PerfectTinyEmbedding) {
  TaxonomyDag dag;
  dag.add_edge("a", "b");
  dag.add_edge("b", "c");  // root c
  EmbeddingTable t({"a", "b", "c"}, 2);
  t.set_point(0, point_on_axis(2.0, 0, 2));  // leaf farthest out
  t.set_point(1, point_on_axis(1.0, 0, 2));
  t.set_point(2, lift(Vec{0, 0}));           // root at the disk center
  const auto report = evaluate(t, dag);
  EXPECT_DOUBLE_EQ(report.mean_rank, 1.0);
  EXPECT_DOUBLE_EQ(report.map, 1.0);
  EXPECT_DOUBLE_EQ(report.spearman_rho, 1.0);
  ASSERT_EQ(report.per_node.size(), 3u);
  for (const auto& pn : report.per_node) {
    EXPECT_GE(pn.norm, 0.0);
    EXPECT_LT(pn.norm, 1.0);
    EXPECT_GE(pn.normalized_rank, 0.0);
    EXPECT_LE(pn.normalized_rank, 1.0);
  }
}

TEST(Evaluate, ReportFieldsWithinRanges) {
  Rng rng(443);
  const auto dag = testutil::random_dag(rng, 30, 2, 0.6);
  std::vector<std::string> ids = dag.ids();
  const auto t = random_table(rng, ids, 3, 2.0);
  const auto report = evaluate(t, dag, 2);
  EXPECT_GE(report.mean_rank, 1.0);
  EXPECT_GE(report.map, 0.0);
  EXPECT_LE(report.map, 1.0);
  EXPECT_GE(report.spearman_rho, -1.0);
  EXPECT_LE(report.spearman_rho, 1.0);
}

TEST(Evaluate, CoverageMismatchListsMissingIds) {
  TaxonomyDag dag;
  dag.add_edge("a", "b");
  dag.add_edge("c", "b");
  EmbeddingTable t({"a", "b"}, 2);
  try {
    evaluate(t, dag);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("c"), std::string::npos);
  }
}

}  // namespace
