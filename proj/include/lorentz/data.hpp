#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "lorentz/error.hpp"
#include "lorentz/objective.hpp"

// Dataset construction: taxonomy edge lists, transitive closure, weighted
// interaction aggregation, and annotation-overlap (cognate) similarity.
//
// File formats (UTF-8, tab-separated, lines starting with '#' ignored):
//   taxonomy edges:  child<TAB>parent[<TAB>weight]
//   similarity:      id1<TAB>id2<TAB>score
//   interactions:    id_a<TAB>id_b[<TAB>weight]   (weight defaults to 1)
//   annotations:     entity<TAB>annotation_set_id

namespace lorentz {

// Ground-truth hierarchy. An edge (child, parent) records that `parent` is
// the superior concept; adjacency is indexed in both directions.
class TaxonomyDag {
 public:
  size_t add_node(const std::string& id) {
    auto it = index_.find(id);
    if (it != index_.end()) return it->second;
    ids_.push_back(id);
    index_.emplace(id, ids_.size() - 1);
    parents_.emplace_back();
    children_.emplace_back();
    return ids_.size() - 1;
  }

  // Duplicate edges collapse to one; self-loops are rejected.
  void add_edge(const std::string& child, const std::string& parent) {
    if (child == parent) throw DataError("self-loop on node '" + child + "'");
    const size_t c = add_node(child), p = add_node(parent);
    if (std::find(parents_[c].begin(), parents_[c].end(), p) != parents_[c].end()) return;
    parents_[c].push_back(p);
    children_[p].push_back(c);
    ++edge_count_;
  }

  size_t node_count() const { return ids_.size(); }
  size_t edge_count() const { return edge_count_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(size_t i) const { return ids_[i]; }
  size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown node id: " + id);
    return it->second;
  }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  const std::vector<size_t>& parents(size_t i) const { return parents_[i]; }
  const std::vector<size_t>& children(size_t i) const { return children_[i]; }

  // Nodes with no parents.
  std::vector<size_t> roots() const {
    std::vector<size_t> out;
    for (size_t i = 0; i < ids_.size(); ++i)
      if (parents_[i].empty()) out.push_back(i);
    return out;
  }

  // Topological order over the child->parent relation (parents come after
  // their children). Throws listing one cycle if the graph is not a DAG.
  std::vector<size_t> topological_order() const {
    std::vector<size_t> out;
    out.reserve(ids_.size());
    std::vector<int> pending(ids_.size());
    std::vector<size_t> stack;
    for (size_t i = 0; i < ids_.size(); ++i) {
      pending[i] = int(children_[i].size());
      if (pending[i] == 0) stack.push_back(i);
    }
    while (!stack.empty()) {
      const size_t u = stack.back();
      stack.pop_back();
      out.push_back(u);
      for (size_t p : parents_[u])
        if (--pending[p] == 0) stack.push_back(p);
    }
    if (out.size() != ids_.size()) throw DataError("cycle detected: " + find_cycle());
    return out;
  }

  void check_acyclic() const { (void)topological_order(); }

 private:
  std::string find_cycle() const {
    // DFS over child->parent edges; the first back edge closes a cycle
    std::vector<int> state(ids_.size(), 0);  // 0 new, 1 on stack, 2 done
    std::vector<size_t> path;
    std::string found;
    auto dfs = [&](auto&& self, size_t u) -> bool {
      state[u] = 1;
      path.push_back(u);
      for (size_t p : parents_[u]) {
        if (state[p] == 1) {
          auto it = std::find(path.begin(), path.end(), p);
          for (; it != path.end(); ++it) found += ids_[*it] + " -> ";
          found += ids_[p];
          return true;
        }
        if (state[p] == 0 && self(self, p)) return true;
      }
      path.pop_back();
      state[u] = 2;
      return false;
    };
    for (size_t i = 0; i < ids_.size(); ++i)
      if (state[i] == 0 && dfs(dfs, i)) return found;
    return "(unlocatable)";
  }

  std::vector<std::string> ids_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<std::vector<size_t>> parents_;
  std::vector<std::vector<size_t>> children_;
  size_t edge_count_ = 0;
};

struct InteractionRecord {
  std::string a, b;
  double weight;
};

struct InteractionLog {
  std::vector<InteractionRecord> records;
};

// (entity, annotation-set) membership rows. `entities` may declare concepts
// explicitly; otherwise the roster is derived from the rows.
struct AnnotationTable {
  std::vector<std::pair<std::string, std::string>> rows;
  std::vector<std::string> entities;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline double parse_number(const std::string& s, const std::string& path, size_t lineno) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(lineno) + ": not a number: '" + s + "'");
  }
}

// Calls fn(fields, lineno) for every non-comment, non-blank line.
template <class Fn>
void for_each_tsv_line(const std::string& path, size_t min_fields, size_t max_fields, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() < min_fields || fields.size() > max_fields)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(min_fields) +
                      (max_fields > min_fields ? "-" + std::to_string(max_fields) : "") +
                      " tab-separated fields, got " + std::to_string(fields.size()));
    for (auto& f : fields)
      if (f.empty())
        throw DataError(path + ":" + std::to_string(lineno) + ": empty field");
    fn(fields, lineno);
  }
}

}  // namespace detail

/// Loads a child<TAB>parent edge list (optional third weight column is
/// ignored here) and verifies acyclicity.
inline TaxonomyDag load_taxonomy(const std::string& path) {
  TaxonomyDag dag;
  detail::for_each_tsv_line(path, 2, 3, [&](const std::vector<std::string>& f, size_t lineno) {
    try {
      dag.add_edge(f[0], f[1]);
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  dag.check_acyclic();
  return dag;
}

inline InteractionLog load_interactions(const std::string& path) {
  InteractionLog log;
  detail::for_each_tsv_line(path, 2, 3, [&](const std::vector<std::string>& f, size_t lineno) {
    const double w = f.size() == 3 ? detail::parse_number(f[2], path, lineno) : 1.0;
    if (!(w >= 0) || !std::isfinite(w))
      throw DataError(path + ":" + std::to_string(lineno) + ": weight must be finite and >= 0");
    log.records.push_back({f[0], f[1], w});
  });
  return log;
}

/// Loads id1<TAB>id2<TAB>score triplets; a pair listed twice is an error.
inline SimilarityDataset load_similarity(const std::string& path) {
  SimilarityDataset ds;
  detail::for_each_tsv_line(path, 3, 3, [&](const std::vector<std::string>& f, size_t lineno) {
    const double s = detail::parse_number(f[2], path, lineno);
    const size_t i = ds.add_concept(f[0]);
    const size_t j = ds.add_concept(f[1]);
    try {
      ds.set_score(i, j, s);
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  ds.finalize();
  return ds;
}

inline AnnotationTable load_annotations(const std::string& path) {
  AnnotationTable table;
  std::set<std::pair<std::string, std::string>> seen;
  detail::for_each_tsv_line(path, 2, 2, [&](const std::vector<std::string>& f, size_t) {
    if (seen.emplace(f[0], f[1]).second) table.rows.emplace_back(f[0], f[1]);
  });
  return table;
}

/// All pairs (u, v) such that v is reachable from u over child->parent edges,
/// i.e. every node paired with each of its ancestors. Computed by memoizing
/// ancestor sets along a topological order.
inline std::vector<std::pair<size_t, size_t>> transitive_closure(const TaxonomyDag& dag) {
  const auto order = dag.topological_order();  // children before parents
  std::vector<std::vector<size_t>> ancestors(dag.node_count());
  // walk parents-first so ancestor sets are ready when children need them
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const size_t u = *it;
    std::set<size_t> acc;
    for (size_t p : dag.parents(u)) {
      acc.insert(p);
      acc.insert(ancestors[p].begin(), ancestors[p].end());
    }
    ancestors[u].assign(acc.begin(), acc.end());
  }
  std::vector<std::pair<size_t, size_t>> out;
  for (size_t u = 0; u < dag.node_count(); ++u)
    for (size_t v : ancestors[u]) out.emplace_back(u, v);
  return out;
}

/// Embeds the closure as binary similarity: X = 1 for every closure pair.
inline SimilarityDataset closure_to_dataset(const TaxonomyDag& dag) {
  SimilarityDataset ds;
  for (const auto& id : dag.ids()) ds.add_concept(id);
  for (auto& [u, v] : transitive_closure(dag)) ds.set_score(u, v, 1.0);
  ds.finalize();
  return ds;
}

/// X_ij = total weight over records for the unordered pair {i,j}. Self-pair
/// records are dropped; pairs with zero total weight stay unscored.
inline SimilarityDataset aggregate_interactions(const InteractionLog& log) {
  SimilarityDataset ds;
  std::map<std::pair<size_t, size_t>, double> sums;
  for (const auto& r : log.records) {
    const size_t a = ds.add_concept(r.a);
    const size_t b = ds.add_concept(r.b);
    if (a == b) continue;
    sums[{std::min(a, b), std::max(a, b)}] += r.weight;
  }
  for (auto& [pair, w] : sums) ds.set_score(pair.first, pair.second, w);
  ds.finalize();
  return ds;
}

/// csim(l1, l2) = c(l1,l2) / min(a(l1), a(l2)) where c counts shared
/// annotation sets and a counts annotations per entity. Scores lie in [0,1].
inline SimilarityDataset cognate_similarity(const AnnotationTable& table) {
  SimilarityDataset ds;
  for (const auto& e : table.entities) ds.add_concept(e);
  std::set<std::pair<std::string, std::string>> dedup(table.rows.begin(), table.rows.end());

  std::vector<size_t> annotation_count;
  std::unordered_map<std::string, std::vector<size_t>> set_members;
  for (const auto& [entity, set_id] : dedup) {
    const size_t e = ds.add_concept(entity);
    if (e >= annotation_count.size()) annotation_count.resize(ds.concept_count(), 0);
    ++annotation_count[e];
    set_members[set_id].push_back(e);
  }
  annotation_count.resize(ds.concept_count(), 0);
  for (size_t e = 0; e < ds.concept_count(); ++e)
    if (annotation_count[e] == 0)
      throw DataError("entity '" + ds.id(e) + "' has no annotations");

  std::map<std::pair<size_t, size_t>, size_t> common;
  for (auto& [set_id, members] : set_members) {
    std::sort(members.begin(), members.end());
    for (size_t x = 0; x < members.size(); ++x)
      for (size_t y = x + 1; y < members.size(); ++y)
        ++common[{members[x], members[y]}];
  }
  for (auto& [pair, c] : common) {
    const double denom = double(std::min(annotation_count[pair.first],
                                         annotation_count[pair.second]));
    ds.set_score(pair.first, pair.second, double(c) / denom);
  }
  ds.finalize();
  return ds;
}

/// Writes an edge list as child<TAB>parent lines (inverse of load_taxonomy
/// on edge sets).
inline std::string format_edges(const TaxonomyDag& dag,
                                const std::vector<std::pair<size_t, size_t>>& edges) {
  std::string out;
  for (auto& [u, v] : edges) {
    out += dag.id(u);
    out += '\t';
    out += dag.id(v);
    out += '\n';
  }
  return out;
}

}  // namespace lorentz
