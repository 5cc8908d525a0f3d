#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "lorentz/data.hpp"
#include "lorentz/error.hpp"
#include "lorentz/geometry.hpp"
#include "lorentz/optimizer.hpp"

// Reconstruction and hierarchy-recovery metrics: every observed edge is
// ranked by embedding distance against the unobserved edges of its source
// node (ties count against the model), plus the rank-order correlation of
// embedding norms with normalized taxonomy ranks.

namespace lorentz {

// Undirected observed-edge set over table indices.
struct EdgeSet {
  std::vector<std::vector<size_t>> neighbors;  // sorted, unique

  static EdgeSet from_pairs(size_t node_count,
                            const std::vector<std::pair<size_t, size_t>>& pairs) {
    EdgeSet es;
    es.neighbors.resize(node_count);
    for (auto& [u, v] : pairs) {
      if (u == v) continue;
      es.neighbors[u].push_back(v);
      es.neighbors[v].push_back(u);
    }
    for (auto& n : es.neighbors) {
      std::sort(n.begin(), n.end());
      n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    return es;
  }

  // Closure edges of `dag` mapped onto the table's concept indices.
  static EdgeSet from_closure(const EmbeddingTable& table, const TaxonomyDag& dag) {
    std::vector<std::pair<size_t, size_t>> pairs;
    auto closure = transitive_closure(dag);
    pairs.reserve(closure.size());
    for (auto& [u, v] : closure)
      pairs.emplace_back(table.index_of(dag.id(u)), table.index_of(dag.id(v)));
    return from_pairs(table.size(), pairs);
  }

  bool observed(size_t u, size_t v) const {
    const auto& n = neighbors[u];
    return std::binary_search(n.begin(), n.end(), v);
  }
};

struct PerNodeEval {
  std::string id;
  double norm = 0.0;             // Poincare norm (generality)
  double normalized_rank = 0.0;  // sp/(sp+lp) in the ground-truth DAG
  double avg_precision = 0.0;    // AP of the node's observed edges
  double mean_rank = 0.0;        // mean rank of the node's observed edges
  size_t degree = 0;
};

struct EvalReport {
  double mean_rank = 0.0;    // >= 1
  double map = 0.0;          // in [0,1]
  double spearman_rho = 0.0; // in [-1,1]
  std::vector<PerNodeEval> per_node;
};

/// Rank of observed edge (u,v): 1 + the number of unobserved candidates v'
/// (v' != u) with d(u,v') <= d(u,v). Ties count against the model.
inline long rank_edge(const EmbeddingTable& table, const EdgeSet& observed,
                      const std::string& u_id, const std::string& v_id) {
  const size_t u = table.index_of(u_id);
  const size_t v = table.index_of(v_id);
  if (!observed.observed(u, v)) throw std::invalid_argument("(u,v) is not an observed edge");
  const auto urow = table.row(u);
  const double dv = lorentz_distance(urow, table.row(v));
  long rank = 1;
  for (size_t c = 0; c < table.size(); ++c) {
    if (c == u || observed.observed(u, c)) continue;
    if (lorentz_distance(urow, table.row(c)) <= dv) ++rank;
  }
  return rank;
}

namespace detail {

struct NodeRanking {
  double rank_sum = 0.0;   // sum of ranks of this node's observed edges
  double avg_precision = 0.0;
  size_t degree = 0;
};

// Ranks all observed edges of source node u in one sorted sweep. Candidates
// are every other node; ties order unobserved before observed, so both the
// edge ranks and the average precision are pessimistic.
inline NodeRanking rank_source_node(const EmbeddingTable& table, const EdgeSet& observed,
                                    size_t u, std::vector<double>& dist_scratch,
                                    std::vector<size_t>& order_scratch) {
  NodeRanking out;
  const auto& pos = observed.neighbors[u];
  out.degree = pos.size();
  if (pos.empty()) return out;

  const size_t m = table.size();
  dist_scratch.resize(m);
  const auto urow = table.row(u);
  for (size_t c = 0; c < m; ++c)
    if (c != u) dist_scratch[c] = lorentz_distance(urow, table.row(c));

  order_scratch.clear();
  for (size_t c = 0; c < m; ++c)
    if (c != u) order_scratch.push_back(c);
  std::sort(order_scratch.begin(), order_scratch.end(), [&](size_t a, size_t b) {
    if (dist_scratch[a] != dist_scratch[b]) return dist_scratch[a] < dist_scratch[b];
    const bool pa = observed.observed(u, a), pb = observed.observed(u, b);
    if (pa != pb) return !pa;  // unobserved first on ties
    return a < b;
  });

  size_t pos_seen = 0, neg_seen = 0;
  double ap_sum = 0.0;
  for (size_t q = 0; q < order_scratch.size(); ++q) {
    if (observed.observed(u, order_scratch[q])) {
      ++pos_seen;
      out.rank_sum += double(neg_seen + 1);
      ap_sum += double(pos_seen) / double(q + 1);
    } else {
      ++neg_seen;
    }
  }
  out.avg_precision = ap_sum / double(pos.size());
  return out;
}

template <class Fn>
void parallel_over_nodes(size_t node_count, int threads, Fn&& fn) {
  threads = std::max(1, std::min<int>(threads, int(node_count)));
  if (threads == 1) {
    fn(size_t(0), node_count);
    return;
  }
  std::vector<std::thread> workers;
  const size_t chunk = (node_count + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const size_t lo = size_t(w) * chunk;
    const size_t hi = std::min(node_count, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : workers) t.join();
}

}  // namespace detail

/// MR and MAP over all observed edges: MR averages rank_edge over every
/// (source, neighbor) pair; MAP averages per-source-node average precision
/// (nodes without edges are skipped). Results do not depend on `threads`.
inline std::pair<double, double> reconstruction_metrics(
    const EmbeddingTable& table, const EdgeSet& observed, int threads = 1,
    std::vector<detail::NodeRanking>* per_node_out = nullptr) {
  std::vector<detail::NodeRanking> rankings(table.size());
  detail::parallel_over_nodes(table.size(), threads, [&](size_t lo, size_t hi) {
    std::vector<double> dist_scratch;
    std::vector<size_t> order_scratch;
    for (size_t u = lo; u < hi; ++u)
      rankings[u] = detail::rank_source_node(table, observed, u, dist_scratch, order_scratch);
  });

  double rank_sum = 0.0, ap_sum = 0.0;
  size_t edge_count = 0, node_count = 0;
  for (const auto& r : rankings) {
    rank_sum += r.rank_sum;
    edge_count += r.degree;
    if (r.degree > 0) {
      ap_sum += r.avg_precision;
      ++node_count;
    }
  }
  if (edge_count == 0) throw DataError("no observed edges to rank");
  if (per_node_out) *per_node_out = std::move(rankings);
  return {rank_sum / double(edge_count), ap_sum / double(node_count)};
}

/// sp(c): shortest path from any root; lp(c): longest path down to any
/// descendant; normalized rank = sp/(sp+lp). Roots get 0, leaves 1; an
/// isolated node counts as a root (rank 0).
inline std::vector<double> normalized_ranks(const TaxonomyDag& dag) {
  const size_t n = dag.node_count();
  const auto order = dag.topological_order();  // children before parents

  std::vector<long> lp(n, 0);
  for (size_t u : order)  // children are final before any parent
    for (size_t c : dag.children(u)) lp[u] = std::max(lp[u], lp[c] + 1);

  std::vector<long> sp(n, -1);
  std::deque<size_t> queue;
  for (size_t r : dag.roots()) {
    sp[r] = 0;
    queue.push_back(r);
  }
  while (!queue.empty()) {
    const size_t u = queue.front();
    queue.pop_front();
    for (size_t c : dag.children(u)) {
      if (sp[c] == -1) {
        sp[c] = sp[u] + 1;
        queue.push_back(c);
      }
    }
  }

  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    const double s = double(sp[i]);  // every DAG node is reachable from a root
    const double l = double(lp[i]);
    out[i] = (s + l) == 0.0 ? 0.0 : s / (s + l);
  }
  return out;
}

inline double normalized_rank(const TaxonomyDag& dag, const std::string& id) {
  return normalized_ranks(dag)[dag.index_of(id)];
}

namespace detail {

// Average ranks (ties share the mean of their positions), 1-based.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  const size_t n = xs.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = (double(i + 1) + double(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Spearman rank-order correlation: Pearson correlation of the average-rank
/// transforms. Throws on constant input (rho undefined).
inline double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman_rho: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("spearman_rho: need at least 2 samples");
  const auto rx = detail::average_ranks(xs);
  const auto ry = detail::average_ranks(ys);
  const double n = double(xs.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) throw DataError("spearman_rho undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

/// Generality indicator: Euclidean norm of the Poincare-mapped embedding,
/// in [0,1). Small norm = general, near-boundary = specific.
inline double generality_norm(const EmbeddingTable& table, const std::string& id) {
  return to_poincare(table.point(table.index_of(id))).norm();
}

/// Full protocol: closure-edge MR/MAP plus Spearman rho between embedding
/// norm and normalized taxonomy rank over all nodes.
inline EvalReport evaluate(const EmbeddingTable& table, const TaxonomyDag& dag,
                           int threads = 1) {
  std::vector<std::string> missing;
  for (const auto& id : dag.ids())
    if (!table.contains(id)) missing.push_back(id);
  if (!missing.empty()) {
    std::string msg = "embedding does not cover " + std::to_string(missing.size()) +
                      " taxonomy node(s):";
    for (size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
    throw DataError(msg);
  }

  const EdgeSet observed = EdgeSet::from_closure(table, dag);
  std::vector<detail::NodeRanking> rankings;
  EvalReport report;
  std::tie(report.mean_rank, report.map) =
      reconstruction_metrics(table, observed, threads, &rankings);

  const auto nranks = normalized_ranks(dag);
  std::vector<double> norms(dag.node_count()), ranks(dag.node_count());
  report.per_node.resize(dag.node_count());
  for (size_t i = 0; i < dag.node_count(); ++i) {
    const size_t t = table.index_of(dag.id(i));
    PerNodeEval& pn = report.per_node[i];
    pn.id = dag.id(i);
    pn.norm = to_poincare(table.point(t)).norm();
    pn.normalized_rank = nranks[i];
    pn.degree = rankings[t].degree;
    pn.avg_precision = rankings[t].avg_precision;
    pn.mean_rank = pn.degree ? rankings[t].rank_sum / double(pn.degree) : 0.0;
    norms[i] = pn.norm;
    ranks[i] = pn.normalized_rank;
  }
  report.spearman_rho = spearman_rho(norms, ranks);
  return report;
}

}  // namespace lorentz
