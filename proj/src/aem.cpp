// Copyright 2026 The Joint Auction Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jal/aem.hpp"

#include <algorithm>
#include <limits>

#include "jal/errors.hpp"

namespace jal {

Codebook::Codebook(Array c) : codes(std::move(c)) {
  if (codes.rank() != 2) throw DimensionError("codebook must be (U, dim)");
  if (codes.dim(0) < 2) throw DomainError("codebook needs at least two codes");
  if (!codes.all_finite()) throw NumericError("non-finite codebook entry");
}

std::size_t vq_nearest(std::span<const double> x, const Codebook& book) {
  if (book.codes.size() == 0) throw DomainError("empty codebook");
  if (x.size() != book.dim())
    throw DimensionError("vector width " + std::to_string(x.size()) +
                         " does not match codebook width " +
                         std::to_string(book.dim()));
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < book.size(); ++u) {
    const double* c = book.code(u);
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - c[j]) * (x[j] - c[j]);
    if (d < best_d) {
      best_d = d;
      best = u;
    }
  }
  return best;
}

bool RQState::identity_holds() const {
  const auto& x = exact_residuals.front();
  const auto& r = exact_residuals.back();
  const auto& s = exact_partial_sums.back();
  for (std::size_t j = 0; j < x.size(); ++j)
    if (s[j] + r[j] != x[j]) return false;
  return true;
}

RQState rq_quantize(std::span<const double> x, const std::vector<Codebook>& books,
                    std::size_t depth) {
  if (depth == 0) throw DomainError("quantisation depth must be at least 1");
  if (books.size() != 1 && books.size() != depth)
    throw DimensionError("need one shared codebook or one per depth");
  const std::size_t w = x.size();
  RQState s;
  s.residuals.emplace_back(x.begin(), x.end());
  s.exact_residuals.emplace_back(x.begin(), x.end());
  std::vector<RqExact> acc(w, 0);
  for (std::size_t d = 0; d < depth; ++d) {
    const Codebook& book = books.size() == 1 ? books[0] : books[d];
    const std::size_t u = vq_nearest(s.residuals.back(), book);
    s.codes.push_back(u);
    std::vector<RqExact> next = s.exact_residuals.back();
    for (std::size_t j = 0; j < w; ++j) {
      next[j] -= book.code(u)[j];
      acc[j] += book.code(u)[j];
    }
    std::vector<double> r(w), ps(w);
    for (std::size_t j = 0; j < w; ++j) {
      r[j] = static_cast<double>(next[j]);
      ps[j] = static_cast<double>(acc[j]);
    }
    s.exact_residuals.push_back(std::move(next));
    s.exact_partial_sums.push_back(acc);
    s.residuals.push_back(std::move(r));
    s.partial_sums.push_back(std::move(ps));
  }
  return s;
}

RQState rq_quantize(std::span<const double> x, const Codebook& book,
                    std::size_t depth) {
  return rq_quantize(x, std::vector<Codebook>{book}, depth);
}

std::vector<Array> rq_quantize_cells(const Array& e,
                                     const std::vector<Codebook>& books,
                                     std::size_t depth) {
  const std::size_t w = e.dim(-1);
  std::vector<Array> out(depth, Array(e.shape(), 0.0));
  for (std::size_t c = 0, cells = e.size() / w; c < cells; ++c) {
    RQState s = rq_quantize(std::span<const double>(e.data() + c * w, w), books,
                            depth);
    for (std::size_t d = 0; d < depth; ++d)
      std::copy(s.partial_sums[d].begin(), s.partial_sums[d].end(),
                out[d].data() + c * w);
  }
  return out;
}

AemLosses aem_losses(const Var& R, const Var& R_hat, const Var& e,
                     const std::vector<Array>& partial_sums, double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (R.shape() != R_hat.shape())
    throw DimensionError("reconstruction shape " + diff::shape_str(R_hat.shape()) +
                         " does not match " + diff::shape_str(R.shape()));
  const double cells = static_cast<double>(e.value().size() / e.dim(-1));
  AemLosses l;
  l.recon = diff::scale(diff::sum_all(diff::square(R - R_hat)),
                        1.0 / static_cast<double>(R.value().size() / R.dim(-1)));
  Var commit = diff::constant(Array::scalar(0.0));
  for (const Array& ps : partial_sums) {
    if (ps.shape() != e.shape())
      throw DimensionError("partial sum shape does not match e");
    commit = commit + diff::sum_all(diff::square(e - diff::constant(ps)));
  }
  l.commit = diff::scale(commit, 1.0 / cells);
  l.total = l.recon + diff::scale(l.commit, beta);
  return l;
}

Var assemble_T(const nn::ParameterStore& store, const nn::Mlp& reduce,
               const Var& e_hat, const Var& z, const Var& t, const Var& e,
               const Var& ue_alpha) {
  Var I = diff::concat({e_hat, z, t}, -1);
  Var reduced = reduce(store, I);
  return diff::concat({reduced, e, ue_alpha}, -1);
}

EmaCodebook::EmaCodebook(std::vector<Codebook> books, EmaConfig cfg,
                         std::uint64_t seed)
    : books_(std::move(books)), cfg_(cfg), rng_(seed) {
  if (books_.empty()) throw DomainError("no codebooks to train");
  for (const auto& b : books_) {
    count_.emplace_back(b.size(), 1.0);
    sum_.push_back(b.codes);
    last_used_.emplace_back(b.size(), 0);
  }
}

void EmaCodebook::init_from(std::span<const std::vector<double>> samples) {
  if (samples.empty()) throw DomainError("no samples to seed the codebook");
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  for (std::size_t b = 0; b < books_.size(); ++b) {
    Array& codes = books_[b].codes;
    const std::size_t dim = books_[b].dim();
    for (std::size_t u = 0; u < books_[b].size(); ++u) {
      const auto& s = samples[pick(rng_)];
      for (std::size_t j = 0; j < dim; ++j)
        codes[u * dim + j] = u == 0 ? 0.0 : s[j];
    }
    // Deeper books start small: they quantise residuals.
    if (b > 0)
      for (double& x : codes.values()) x *= 0.1;
    for (std::size_t j = 0; j < dim; ++j) codes[j] = 0.0;
    sum_[b] = codes;
    std::fill(count_[b].begin(), count_[b].end(), 1.0);
  }
}

void EmaCodebook::update(std::span<const std::vector<double>> batch,
                         std::size_t depth) {
  if (batch.empty()) return;
  ++steps_;
  std::vector<std::vector<double>> hits;
  std::vector<Array> sums;
  for (const auto& b : books_) {
    hits.emplace_back(b.size(), 0.0);
    sums.emplace_back(b.codes.shape(), 0.0);
  }
  std::vector<std::vector<double>> residual_pool;
  for (const auto& x : batch) {
    RQState s = rq_quantize(x, books_, depth);
    for (std::size_t d = 0; d < depth; ++d) {
      const std::size_t b = books_.size() == 1 ? 0 : d;
      const std::size_t u = s.codes[d];
      hits[b][u] += 1.0;
      const std::size_t dim = books_[b].dim();
      for (std::size_t j = 0; j < dim; ++j) sums[b][u * dim + j] += s.residuals[d][j];
      residual_pool.push_back(s.residuals[d]);
    }
  }
  std::uniform_int_distribution<std::size_t> pick(0, residual_pool.size() - 1);
  for (std::size_t b = 0; b < books_.size(); ++b) {
    const std::size_t U = books_[b].size(), dim = books_[b].dim();
    double n_total = 0.0;
    for (std::size_t u = 0; u < U; ++u) {
      count_[b][u] = cfg_.decay * count_[b][u] + (1.0 - cfg_.decay) * hits[b][u];
      n_total += count_[b][u];
      for (std::size_t j = 0; j < dim; ++j)
        sum_[b][u * dim + j] = cfg_.decay * sum_[b][u * dim + j] +
                               (1.0 - cfg_.decay) * sums[b][u * dim + j];
      if (hits[b][u] > 0.0) last_used_[b][u] = steps_;
    }
    // Code 0 stays at the origin so an extra depth never moves a residual
    // further away.
    for (std::size_t u = 1; u < U; ++u) {
      // Laplace-smoothed cluster size.
      const double n = (count_[b][u] + cfg_.eps) / (n_total + U * cfg_.eps) * n_total;
      if (steps_ - last_used_[b][u] >= cfg_.dead_after) {
        const auto& r = residual_pool[pick(rng_)];
        for (std::size_t j = 0; j < dim; ++j) {
          books_[b].codes[u * dim + j] = r[j];
          sum_[b][u * dim + j] = r[j];
        }
        count_[b][u] = 1.0;
        last_used_[b][u] = steps_;
        ++reseeded_;
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j)
        books_[b].codes[u * dim + j] = sum_[b][u * dim + j] / n;
    }
  }
}

}  // namespace jal
