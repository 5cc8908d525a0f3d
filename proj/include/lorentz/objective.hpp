#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lorentz/error.hpp"
#include "lorentz/geometry.hpp"
#include "lorentz/optimizer.hpp"
#include "lorentz/rng.hpp"

// Similarity-ranking objective: for each scored pair (i,j) the target j must
// be the nearest embedding among the concepts less similar to i than j.
// Training maximizes sum log Pr(j | candidates) with sampled negatives.

namespace lorentz {

// Sparse symmetric nonnegative pairwise scores over a concept roster.
// Unscored pairs read as similarity 0.
class SimilarityDataset {
 public:
  size_t add_concept(const std::string& id) {
    auto it = index_.find(id);
    if (it != index_.end()) return it->second;
    ids_.push_back(id);
    index_.emplace(id, ids_.size() - 1);
    adj_.emplace_back();
    return ids_.size() - 1;
  }

  // Sets the score of the unordered pair {i,j}; zero scores are not stored.
  void set_score(size_t i, size_t j, double score) {
    if (i == j) throw DataError("self-pair score for concept " + ids_[i]);
    if (!std::isfinite(score) || score < 0)
      throw DataError("score for (" + ids_[i] + ", " + ids_[j] + ") must be finite and >= 0");
    if (score == 0) return;
    if (lookup(adj_[i], j) != nullptr)
      throw DataError("duplicate score for pair (" + ids_[i] + ", " + ids_[j] + ")");
    adj_[i].emplace_back(j, score);
    adj_[j].emplace_back(i, score);
    finalized_ = false;
  }

  // Sorts adjacency and builds the positive-pair list; call after the last
  // set_score and before training.
  void finalize() {
    positives_.clear();
    sorted_scores_.assign(adj_.size(), {});
    for (size_t i = 0; i < adj_.size(); ++i) {
      std::sort(adj_[i].begin(), adj_[i].end());
      sorted_scores_[i].reserve(adj_[i].size());
      for (auto& [k, s] : adj_[i]) {
        sorted_scores_[i].push_back(s);
        if (i < k) positives_.emplace_back(i, k);
      }
      std::sort(sorted_scores_[i].begin(), sorted_scores_[i].end());
    }
    finalized_ = true;
  }

  size_t concept_count() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(size_t i) const { return ids_[i]; }
  size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown concept id: " + id);
    return it->second;
  }

  double score(size_t i, size_t j) const {
    if (i == j) return 0.0;
    const double* s = lookup(adj_[i], j);
    return s ? *s : 0.0;
  }

  const std::vector<std::pair<size_t, double>>& neighbors(size_t i) const { return adj_[i]; }

  // Unordered positive pairs (i < j, X_ij > 0).
  const std::vector<std::pair<size_t, size_t>>& positives() const {
    require_finalized();
    return positives_;
  }

  // Number of scored partners k of i with X_ik >= s (s > 0).
  size_t count_scored_at_least(size_t i, double s) const {
    require_finalized();
    const auto& v = sorted_scores_[i];
    return v.end() - std::lower_bound(v.begin(), v.end(), s);
  }

 private:
  static const double* lookup(const std::vector<std::pair<size_t, double>>& v, size_t j) {
    // adjacency is sorted once finalized; linear scan is fine before that
    for (auto& [k, s] : v)
      if (k == j) return &s;
    return nullptr;
  }
  void require_finalized() const {
    if (!finalized_) throw std::logic_error("SimilarityDataset::finalize() not called");
  }

  std::vector<std::string> ids_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<std::vector<std::pair<size_t, double>>> adj_;
  std::vector<std::vector<double>> sorted_scores_;
  std::vector<std::pair<size_t, size_t>> positives_;
  bool finalized_ = false;
};

// One training step: anchor i, target j, negatives sampled from N(i,j)\{j}.
struct TrainBatchItem {
  size_t anchor;
  size_t target;
  std::vector<size_t> negatives;
};

/// N(i,j) = {k : X_ik < X_ij} u {j}, excluding i itself; ties X_ik = X_ij are
/// excluded by the strict inequality. Returned sorted by concept index.
inline std::vector<size_t> neighbor_set(const SimilarityDataset& ds, size_t i, size_t j) {
  const double xij = ds.score(i, j);
  if (!(xij > 0)) throw std::invalid_argument("neighbor_set requires X_ij > 0");
  std::vector<size_t> out;
  for (size_t k = 0; k < ds.concept_count(); ++k) {
    if (k == i) continue;
    if (k == j || ds.score(i, k) < xij) out.push_back(k);
  }
  return out;
}

/// Uniform sample without replacement of min(k, |N|-1) elements of N\{j}.
inline std::vector<size_t> sample_negatives(const std::vector<size_t>& neighbor_set_ids,
                                            size_t target_j, size_t k, Rng& rng) {
  std::vector<size_t> pool;
  pool.reserve(neighbor_set_ids.size());
  for (size_t id : neighbor_set_ids)
    if (id != target_j) pool.push_back(id);
  if (pool.size() <= k) return pool;
  // partial Fisher-Yates: the first k slots end up a uniform sample
  for (size_t t = 0; t < k; ++t) {
    const size_t j = t + static_cast<size_t>(rng.below(pool.size() - t));
    std::swap(pool[t], pool[j]);
  }
  pool.resize(k);
  return pool;
}

/// Pr(j | candidates) = exp(-d(u_i,u_j)) / sum_k exp(-d(u_i,u_k)), evaluated
/// with the minimum distance subtracted before exponentiation. `candidates`
/// must include the target.
inline double softmax_prob(const LorentzPoint& u_i, const LorentzPoint& u_j,
                           const std::vector<LorentzPoint>& candidates) {
  const double dj = lorentz_distance(u_i, u_j);
  double dmin = dj;
  std::vector<double> dists;
  dists.reserve(candidates.size());
  for (const auto& c : candidates) {
    dists.push_back(lorentz_distance(u_i, c));
    dmin = std::min(dmin, dists.back());
  }
  double z = 0.0;
  for (double d : dists) z += std::exp(-(d - dmin));
  return std::exp(-(dj - dmin)) / z;
}

// d(x,y) = arcosh(beta), beta = -<x,y>_L. The Euclidean gradients of the
// ambient formula are dd/dy = -(g x)/sqrt(beta^2-1) and symmetrically for x,
// where g negates the time coordinate. Coincident points (beta <= 1 + 1e-12)
// yield zero gradients.
constexpr double kDegenerateBeta = 1.0 + 1e-12;

inline void distance_egrad_into(std::span<const double> x, std::span<const double> y,
                                std::span<double> grad_x, std::span<double> grad_y) {
  const double beta = -lorentz_inner(x, y);
  if (beta <= kDegenerateBeta) {
    std::fill(grad_x.begin(), grad_x.end(), 0.0);
    std::fill(grad_y.begin(), grad_y.end(), 0.0);
    return;
  }
  const double c = -1.0 / std::sqrt(beta * beta - 1.0);
  grad_x[0] = -c * y[0];
  grad_y[0] = -c * x[0];
  for (size_t t = 1; t < x.size(); ++t) {
    grad_x[t] = c * y[t];
    grad_y[t] = c * x[t];
  }
}

inline std::pair<Vec, Vec> distance_egrad(const LorentzPoint& x, const LorentzPoint& y) {
  Vec gx(x.ambient_dim()), gy(y.ambient_dim());
  distance_egrad_into(x.span(), y.span(), gx, gy);
  return {std::move(gx), std::move(gy)};
}

struct LossAndGrads {
  double loss = 0.0;
  // sparse: (concept index, euclidean gradient), anchor first
  std::vector<std::pair<size_t, Vec>> grads;
};

/// -log softmax_prob for one batch item, with analytic gradients for the
/// anchor, target, and negatives only.
inline LossAndGrads loss_and_grads(const TrainBatchItem& item, const EmbeddingTable& table) {
  const size_t n_cand = 1 + item.negatives.size();
  const size_t adim = table.ambient_dim();
  const auto anchor = table.row(item.anchor);

  std::vector<size_t> cand(n_cand);
  cand[0] = item.target;
  std::copy(item.negatives.begin(), item.negatives.end(), cand.begin() + 1);

  std::vector<double> beta(n_cand), dist(n_cand);
  double dmin = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < n_cand; ++c) {
    beta[c] = -lorentz_inner(anchor, table.row(cand[c]));
    dist[c] = arcosh_clamped(beta[c]);
    dmin = std::min(dmin, dist[c]);
  }
  double z = 0.0;
  for (size_t c = 0; c < n_cand; ++c) z += std::exp(-(dist[c] - dmin));
  const double loss = dist[0] - dmin + std::log(z);
  if (!std::isfinite(loss))
    throw NumericError("non-finite loss for pair (" + table.id(item.anchor) + ", " +
                       table.id(item.target) + ")");

  LossAndGrads out;
  out.loss = loss;
  out.grads.reserve(1 + n_cand);
  out.grads.emplace_back(item.anchor, Vec(adim, 0.0));
  Vec& ganchor = out.grads[0].second;
  for (size_t c = 0; c < n_cand; ++c) {
    const double p = std::exp(-(dist[c] - dmin)) / z;
    const double w = (c == 0 ? 1.0 : 0.0) - p;  // dloss/dd_c
    out.grads.emplace_back(cand[c], Vec(adim, 0.0));
    Vec& gcand = out.grads.back().second;
    if (beta[c] <= kDegenerateBeta) continue;  // coincident-point guard
    const double s = -w / std::sqrt(beta[c] * beta[c] - 1.0);
    const auto crow = table.row(cand[c]);
    ganchor[0] += -s * crow[0];
    gcand[0] = -s * anchor[0];
    for (size_t t = 1; t < adim; ++t) {
      ganchor[t] += s * crow[t];
      gcand[t] = s * anchor[t];
    }
  }
  return out;
}

struct TrainConfig {
  OptimizerConfig optimizer;
  int dim = 5;
  int negatives = 50;
  int threads = 1;  // > 1 selects the non-deterministic shared-table mode
  // called after each epoch with (epoch, mean loss, current table)
  std::function<void(int, double, const EmbeddingTable&)> epoch_callback;

  void validate() const {
    optimizer.validate();
    if (dim < 2) throw std::invalid_argument("dim must be >= 2");
    if (negatives < 1) throw std::invalid_argument("negatives must be >= 1");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  }
};

struct TrainResult {
  EmbeddingTable table;
  std::vector<double> epoch_mean_loss;
};

namespace detail {

// Uniform negatives without materializing N(i,j): rejection-sample the
// complement of {k : X_ak >= X_at} u {a, t}. Falls back to a full scan when
// the candidate pool is not larger than the request. Matches the
// distribution of sample_negatives over neighbor_set.
inline void fast_sample_negatives(const SimilarityDataset& ds, size_t anchor, size_t target,
                                  double x_at, size_t k, Rng& rng, std::vector<size_t>& out) {
  out.clear();
  const size_t m = ds.concept_count();
  const size_t pool = m - 1 - ds.count_scored_at_least(anchor, x_at);
  if (pool == 0) return;
  if (pool <= k) {
    for (size_t c = 0; c < m; ++c)
      if (c != anchor && c != target && ds.score(anchor, c) < x_at) out.push_back(c);
    return;
  }
  while (out.size() < k) {
    const size_t c = static_cast<size_t>(rng.below(m));
    if (c == anchor || c == target) continue;
    if (ds.score(anchor, c) >= x_at) continue;
    if (std::find(out.begin(), out.end(), c) != out.end()) continue;
    out.push_back(c);
  }
}

struct StepScratch {
  std::vector<size_t> negatives;
  std::vector<size_t> cand;
  std::vector<double> beta, dist, expw;
  Vec anchor_row;
  std::vector<Vec> cand_rows;
  Vec ganchor;
  std::vector<Vec> gcand;
};

// One SGD step on (anchor, target). Reads rows from `rows` (a snapshot copy
// in parallel mode, the live table otherwise), applies updates via `stepper`.
inline double train_step(const SimilarityDataset& ds, size_t anchor, size_t target,
                         const TrainConfig& cfg, double eta, Rng& rng, EmbeddingTable& table,
                         RsgdStepper& stepper, StepScratch& sc,
                         std::vector<std::mutex>* row_locks) {
  const double x_at = ds.score(anchor, target);
  fast_sample_negatives(ds, anchor, target, x_at, size_t(cfg.negatives), rng, sc.negatives);

  const size_t n_cand = 1 + sc.negatives.size();
  const size_t adim = size_t(table.ambient_dim());
  sc.cand.assign(1, target);
  sc.cand.insert(sc.cand.end(), sc.negatives.begin(), sc.negatives.end());
  sc.beta.resize(n_cand);
  sc.dist.resize(n_cand);
  sc.expw.resize(n_cand);
  if (sc.ganchor.size() != adim) sc.ganchor.assign(adim, 0.0);
  else std::fill(sc.ganchor.begin(), sc.ganchor.end(), 0.0);
  if (sc.gcand.size() < n_cand) sc.gcand.resize(n_cand);
  if (sc.anchor_row.size() != adim) sc.anchor_row.resize(adim);
  if (sc.cand_rows.size() < n_cand) sc.cand_rows.resize(n_cand);
  for (size_t c = 0; c < n_cand; ++c)
    if (sc.cand_rows[c].size() != adim) sc.cand_rows[c].resize(adim);

  // all rows are snapshot so concurrent writers cannot tear them
  auto read_row = [&](size_t idx, std::span<double> dst) {
    if (row_locks) {
      std::lock_guard<std::mutex> g((*row_locks)[idx % row_locks->size()]);
      auto r = table.row(idx);
      std::copy(r.begin(), r.end(), dst.begin());
    } else {
      auto r = table.row(idx);
      std::copy(r.begin(), r.end(), dst.begin());
    }
  };
  read_row(anchor, sc.anchor_row);
  const Vec& anchor_row = sc.anchor_row;

  std::vector<Vec>& cand_rows = sc.cand_rows;
  double dmin = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < n_cand; ++c) {
    read_row(sc.cand[c], cand_rows[c]);
    sc.beta[c] = -lorentz_inner(anchor_row, cand_rows[c]);
    sc.dist[c] = arcosh_clamped(sc.beta[c]);
    dmin = std::min(dmin, sc.dist[c]);
  }
  double z = 0.0;
  for (size_t c = 0; c < n_cand; ++c) {
    sc.expw[c] = std::exp(-(sc.dist[c] - dmin));
    z += sc.expw[c];
  }
  const double loss = sc.dist[0] - dmin + std::log(z);
  if (!std::isfinite(loss))
    throw NumericError("non-finite loss for pair (" + table.id(anchor) + ", " +
                       table.id(target) + ")");

  for (size_t c = 0; c < n_cand; ++c) {
    Vec& g = sc.gcand[c];
    if (g.size() != adim) g.assign(adim, 0.0);
    else std::fill(g.begin(), g.end(), 0.0);
    if (sc.beta[c] <= kDegenerateBeta) continue;
    const double w = (c == 0 ? 1.0 : 0.0) - sc.expw[c] / z;
    const double s = -w / std::sqrt(sc.beta[c] * sc.beta[c] - 1.0);
    const Vec& crow = cand_rows[c];
    sc.ganchor[0] += -s * crow[0];
    g[0] = -s * anchor_row[0];
    for (size_t t = 1; t < adim; ++t) {
      sc.ganchor[t] += s * crow[t];
      g[t] = s * anchor_row[t];
    }
  }

  // all gradients are taken at the pre-step positions; apply afterwards
  auto apply = [&](size_t idx, const Vec& base, const Vec& egrad) {
    if (row_locks) {
      std::lock_guard<std::mutex> g((*row_locks)[idx % row_locks->size()]);
      auto r = table.row(idx);
      std::copy(base.begin(), base.end(), r.begin());
      stepper.step(r, egrad, eta);
    } else {
      stepper.step(table.row(idx), egrad, eta);
    }
  };
  apply(anchor, anchor_row, sc.ganchor);
  for (size_t c = 0; c < n_cand; ++c) apply(sc.cand[c], cand_rows[c], sc.gcand[c]);
  return loss;
}

}  // namespace detail

/// Full training run: seeded init, T epochs over the shuffled positive pairs
/// (each unordered positive visited in both orientations), one SGD step per
/// oriented pair. Single-threaded mode is bit-deterministic for a fixed seed.
inline TrainResult train(const SimilarityDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.concept_count() == 0) throw DataError("empty dataset");
  if (ds.positives().empty()) throw DataError("dataset has no positive pairs");

  TrainResult result;
  result.table = init_embeddings(ds.ids(), cfg.dim, cfg.optimizer.seed);
  EmbeddingTable& table = result.table;

  std::vector<std::pair<size_t, size_t>> pairs;
  pairs.reserve(ds.positives().size() * 2);
  for (auto& [i, j] : ds.positives()) {
    pairs.emplace_back(i, j);
    pairs.emplace_back(j, i);
  }

  Rng shuffle_rng(cfg.optimizer.seed ^ 0x9e3779b97f4a7c15ull);
  const int threads = std::min<int>(cfg.threads, int(pairs.size()));

  if (threads <= 1) {
    Rng rng(cfg.optimizer.seed + 1);
    RsgdStepper stepper(cfg.optimizer);
    detail::StepScratch sc;
    for (int epoch = 0; epoch < cfg.optimizer.epochs; ++epoch) {
      shuffle_rng.shuffle(pairs);
      const double eta = stepper.learning_rate(epoch);
      double loss_sum = 0.0;
      for (auto& [a, t] : pairs)
        loss_sum += detail::train_step(ds, a, t, cfg, eta, rng, table, stepper, sc, nullptr);
      result.epoch_mean_loss.push_back(loss_sum / double(pairs.size()));
      if (cfg.epoch_callback)
        cfg.epoch_callback(epoch, result.epoch_mean_loss.back(), table);
    }
    return result;
  }

  // Parallel shared-table mode: pairs are partitioned across workers, row
  // reads/writes go through striped locks (no torn rows; lost updates are
  // accepted). Not bit-reproducible.
  std::vector<std::mutex> row_locks(1024);
  RsgdStepper proto(cfg.optimizer);
  for (int epoch = 0; epoch < cfg.optimizer.epochs; ++epoch) {
    shuffle_rng.shuffle(pairs);
    const double eta = proto.learning_rate(epoch);
    std::vector<double> loss_sums(threads, 0.0);
    std::vector<std::thread> workers;
    std::atomic<bool> failed{false};
    std::string error_msg;
    std::mutex error_mu;
    const size_t chunk = (pairs.size() + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        Rng rng(cfg.optimizer.seed + 1 + uint64_t(w + 1) * 0x100000001b3ull +
                uint64_t(epoch) * 0x9e3779b9ull);
        RsgdStepper stepper(cfg.optimizer);
        detail::StepScratch sc;
        const size_t lo = size_t(w) * chunk;
        const size_t hi = std::min(pairs.size(), lo + chunk);
        try {
          for (size_t p = lo; p < hi && !failed.load(std::memory_order_relaxed); ++p)
            loss_sums[w] += detail::train_step(ds, pairs[p].first, pairs[p].second, cfg, eta,
                                               rng, table, stepper, sc, &row_locks);
        } catch (const std::exception& e) {
          failed = true;
          std::lock_guard<std::mutex> g(error_mu);
          if (error_msg.empty()) error_msg = e.what();
        }
      });
    }
    for (auto& t : workers) t.join();
    if (failed) throw NumericError(error_msg);
    double loss_sum = 0.0;
    for (double s : loss_sums) loss_sum += s;
    result.epoch_mean_loss.push_back(loss_sum / double(pairs.size()));
    if (cfg.epoch_callback) cfg.epoch_callback(epoch, result.epoch_mean_loss.back(), table);
  }
  return result;
}

}  // namespace lorentz
