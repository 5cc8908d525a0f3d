#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lorentz/error.hpp"
#include "lorentz/geometry.hpp"
#include "lorentz/rng.hpp"

// Riemannian SGD in the Lorentz model: Euclidean gradient -> steepest-descent
// direction -> tangent projection -> exponential-map update.

namespace lorentz {

struct OptimizerConfig {
  double learning_rate = 0.3;
  int epochs = 300;
  int burnin_epochs = 20;     // first epochs run at learning_rate * burnin_factor
  double burnin_factor = 0.1;
  uint64_t seed = 0;
  int renormalize_every = 1;  // steps between drift repairs

  void validate() const {
    if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
    if (epochs <= 0) throw std::invalid_argument("epochs must be > 0");
    if (burnin_epochs < 0) throw std::invalid_argument("burnin_epochs must be >= 0");
    if (!(burnin_factor > 0 && burnin_factor <= 1))
      throw std::invalid_argument("burnin_factor must be in (0,1]");
    if (renormalize_every < 1) throw std::invalid_argument("renormalize_every must be >= 1");
  }
};

// One Lorentz point per concept, stored as a flat row-major matrix of
// m x (dim+1) ambient coordinates.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> ids, int dim)
      : ids_(std::move(ids)), dim_(dim), data_(ids_.size() * (dim + 1), 0.0) {
    if (dim < 2) throw std::invalid_argument("embedding dim must be >= 2");
    for (size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second)
        throw DataError("duplicate concept id: " + ids_[i]);
      row(i)[0] = 1.0;  // basepoint
    }
  }

  size_t size() const { return ids_.size(); }
  int dim() const { return dim_; }
  int ambient_dim() const { return dim_ + 1; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(size_t i) const { return ids_[i]; }

  std::span<double> row(size_t i) { return {data_.data() + i * (dim_ + 1), size_t(dim_ + 1)}; }
  std::span<const double> row(size_t i) const {
    return {data_.data() + i * (dim_ + 1), size_t(dim_ + 1)};
  }

  LorentzPoint point(size_t i) const {
    auto r = row(i);
    return LorentzPoint{Vec(r.begin(), r.end())};
  }
  void set_point(size_t i, const LorentzPoint& p) {
    if (p.coords.size() != size_t(dim_ + 1))
      throw std::invalid_argument("point dimension mismatch");
    auto r = row(i);
    std::copy(p.coords.begin(), p.coords.end(), r.begin());
  }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown concept id: " + id);
    return it->second;
  }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, size_t> index_;
  int dim_ = 0;
  std::vector<double> data_;
};

// h = g^-1 grad = grad with the time component negated (g is involutory).
inline void steepest_direction_in_place(std::span<double> egrad) { egrad[0] = -egrad[0]; }

inline Vec steepest_direction(std::span<const double> egrad) {
  Vec h(egrad.begin(), egrad.end());
  steepest_direction_in_place(h);
  return h;
}

// egrad -> proj_x(g^-1 egrad), the Riemannian gradient in the tangent space at x.
inline void riemannian_grad_in_place(std::span<const double> x, std::span<double> egrad) {
  steepest_direction_in_place(egrad);
  project_to_tangent_in_place(x, egrad);
}

inline TangentVector riemannian_grad(const LorentzPoint& x, std::span<const double> egrad) {
  TangentVector t;
  t.base = x;
  t.vec.assign(egrad.begin(), egrad.end());
  riemannian_grad_in_place(x.span(), t.vec);
  return t;
}

// x <- exp_x(-eta * proj_x(g^-1 egrad)). `scratch` must have ambient size.
inline void rsgd_step_in_place(std::span<double> x, std::span<const double> egrad, double eta,
                               std::span<double> scratch) {
  for (size_t i = 0; i < egrad.size(); ++i) {
    if (!std::isfinite(egrad[i])) throw NumericError("rsgd_step: non-finite gradient");
    scratch[i] = egrad[i];
  }
  riemannian_grad_in_place(x, scratch);
  for (double& c : scratch) c *= -eta;
  exp_map_in_place(x, scratch);
}

/// Single RSGD update from a Euclidean gradient; the result stays on the
/// hyperboloid up to rounding (no explicit renormalization here).
inline LorentzPoint rsgd_step(const LorentzPoint& x, std::span<const double> egrad, double eta) {
  if (!(eta > 0)) throw std::invalid_argument("eta must be > 0");
  LorentzPoint out = x;
  Vec scratch(egrad.size());
  rsgd_step_in_place(out.coords, egrad, eta, scratch);
  return out;
}

// Stateful stepper: counts updates and renormalizes every
// `renormalize_every`-th one to keep drift bounded over long runs.
class RsgdStepper {
 public:
  explicit RsgdStepper(const OptimizerConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  double learning_rate(int epoch) const {
    return epoch < cfg_.burnin_epochs ? cfg_.learning_rate * cfg_.burnin_factor
                                      : cfg_.learning_rate;
  }

  void step(std::span<double> x, std::span<const double> egrad, double eta) {
    if (scratch_.size() != x.size()) scratch_.resize(x.size());
    rsgd_step_in_place(x, egrad, eta, scratch_);
    if (++count_ % cfg_.renormalize_every == 0) renormalize_in_place(x);
  }

  long long step_count() const { return count_; }

 private:
  OptimizerConfig cfg_;
  long long count_ = 0;
  Vec scratch_;
};

/// Fresh table with spatial coordinates i.i.d. uniform on (-0.001, 0.001)
/// and the time coordinate set by the hyperboloid constraint. Deterministic
/// for a given seed.
inline EmbeddingTable init_embeddings(std::vector<std::string> ids, int dim, uint64_t seed) {
  if (ids.empty()) throw std::invalid_argument("need at least one concept");
  EmbeddingTable table(std::move(ids), dim);
  Rng rng(seed);
  for (size_t i = 0; i < table.size(); ++i) {
    auto r = table.row(i);
    for (int d = 1; d <= dim; ++d) r[d] = rng.uniform(-0.001, 0.001);
    renormalize_in_place(r);
  }
  return table;
}

inline EmbeddingTable init_embeddings(size_t m, int dim, uint64_t seed) {
  std::vector<std::string> ids(m);
  for (size_t i = 0; i < m; ++i) ids[i] = std::to_string(i);
  return init_embeddings(std::move(ids), dim, seed);
}

}  // namespace lorentz
