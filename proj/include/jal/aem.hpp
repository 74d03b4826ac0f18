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

// Adaptive extraction: residual quantisation of bid features, EMA codebook
// learning, the reconstruction/commitment losses and assembly of the joint
// per-cell representation T.

#ifndef JAL_AEM_HPP_
#define JAL_AEM_HPP_

#include <span>
#include <vector>

#include "jal/diff/ops.hpp"
#include "jal/distributions.hpp"
#include "jal/layers.hpp"

namespace jal {

using diff::Array;
using diff::Var;

// U code embeddings of width dim, stored row-major as a (U, dim) array.
struct Codebook {
  Array codes;

  Codebook() = default;
  explicit Codebook(Array codes);
  std::size_t size() const { return codes.dim(0); }
  std::size_t dim() const { return codes.dim(1); }
  const double* code(std::size_t u) const { return codes.data() + u * dim(); }
};

// argmin_u |x - t(u)|^2, ties to the smallest index.
std::size_t vq_nearest(std::span<const double> x, const Codebook& book);

// Residual and partial-sum arithmetic runs in binary128, which holds
// x - t(u_1) - ... - t(u_D) exactly for double inputs and codes of
// magnitude above ~1e-17 (or zero). The double views are rounded from it.
using RqExact = __float128;

struct RQState {
  std::vector<std::size_t> codes;                 // u_1..u_D
  std::vector<std::vector<double>> residuals;     // r_0..r_D
  std::vector<std::vector<double>> partial_sums;  // e_hat^(1)..e_hat^(D)
  std::vector<std::vector<RqExact>> exact_residuals;
  std::vector<std::vector<RqExact>> exact_partial_sums;

  const std::vector<double>& quantized() const { return partial_sums.back(); }
  // e_hat^(D) + r_D == r_0, evaluated without rounding.
  bool identity_holds() const;
};

// `books` holds one shared codebook or one per depth.
RQState rq_quantize(std::span<const double> x,
                    const std::vector<Codebook>& books, std::size_t depth);
RQState rq_quantize(std::span<const double> x, const Codebook& book,
                    std::size_t depth);

// Quantises every trailing-axis vector of `e`. Returns the partial sums,
// one array per depth, each shaped like `e`.
std::vector<Array> rq_quantize_cells(const Array& e,
                                     const std::vector<Codebook>& books,
                                     std::size_t depth);

struct AemLosses {
  Var recon;   // mean over cells of |R - R_hat|^2
  Var commit;  // mean over cells of sum_d |e - sg(e_hat^(d))|^2
  Var total;   // recon + beta * commit
};

AemLosses aem_losses(const Var& R, const Var& R_hat, const Var& e,
                     const std::vector<Array>& partial_sums, double beta);

// I = [e_hat || z || t] reduced to width d'-3 by `reduce`, then
// T = [I' || e || ue*alpha]. Inputs share leading dims (..., N, K).
Var assemble_T(const nn::ParameterStore& store, const nn::Mlp& reduce,
               const Var& e_hat, const Var& z, const Var& t, const Var& e,
               const Var& ue_alpha);

struct EmaConfig {
  double decay = 0.99;
  long dead_after = 256;
  double eps = 1e-5;
};

// Exponential-moving-average codebook learning on residuals. Codes unused
// for `dead_after` updates are reseeded from random residuals of the batch.
// Code 0 is pinned to the origin.
class EmaCodebook {
 public:
  EmaCodebook(std::vector<Codebook> books, EmaConfig cfg, std::uint64_t seed);

  // Seeds each book from randomly chosen inputs (plus the origin as code 0).
  void init_from(std::span<const std::vector<double>> samples);
  // One EMA step on a batch of input vectors quantised to `depth`.
  void update(std::span<const std::vector<double>> batch, std::size_t depth);

  const std::vector<Codebook>& books() const { return books_; }
  long steps() const { return steps_; }
  std::size_t reseeded() const { return reseeded_; }

 private:
  std::vector<Codebook> books_;
  EmaConfig cfg_;
  Rng rng_;
  std::vector<std::vector<double>> count_;  // per book, per code
  std::vector<Array> sum_;                  // per book, (U, dim)
  std::vector<std::vector<long>> last_used_;
  long steps_ = 0;
  std::size_t reseeded_ = 0;
};

}  // namespace jal

#endif  // JAL_AEM_HPP_
