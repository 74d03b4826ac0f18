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

#include "jal/distributions.hpp"

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

#include "jal/errors.hpp"

namespace jal {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double mixture_mass(const TruncatedLognormalMixture& d) {
  double z = 0.0;
  for (auto [mu, sigma] : d.components) {
    boost::math::lognormal ln(mu, sigma);
    z += boost::math::cdf(ln, d.hi) -
         (d.lo > 0.0 ? boost::math::cdf(ln, d.lo) : 0.0);
  }
  return z / static_cast<double>(d.components.size());
}

double normal_mass(const TruncatedNormal& d) {
  boost::math::normal n(d.mean, d.sd);
  return boost::math::cdf(n, d.hi) - boost::math::cdf(n, d.lo);
}

}  // namespace

void validate(const DistributionSpec& spec) {
  std::visit(Overloaded{
                 [](const Uniform& u) {
                   if (!(u.lo < u.hi)) throw ConfigError("uniform needs lo < hi");
                 },
                 [](const TruncatedNormal& n) {
                   if (!(n.lo < n.hi))
                     throw ConfigError("truncated normal needs lo < hi");
                   if (!(n.sd > 0.0))
                     throw ConfigError("truncated normal needs sd > 0");
                 },
                 [](const TruncatedLognormalMixture& m) {
                   if (!(m.lo < m.hi))
                     throw ConfigError("lognormal mixture needs lo < hi");
                   if (m.lo < 0.0)
                     throw ConfigError("lognormal mixture support must be >= 0");
                   if (m.components.empty())
                     throw ConfigError("lognormal mixture has no components");
                   for (auto [mu, sigma] : m.components)
                     if (!(sigma > 0.0) || !std::isfinite(mu))
                       throw ConfigError("lognormal component needs sigma > 0");
                   if (!(mixture_mass(m) > 1e-12))
                     throw ConfigError("lognormal mixture has no mass in support");
                 }},
             spec);
}

double support_lo(const DistributionSpec& spec) {
  return std::visit([](const auto& d) { return d.lo; }, spec);
}

double support_hi(const DistributionSpec& spec) {
  return std::visit([](const auto& d) { return d.hi; }, spec);
}

double sample_value(const DistributionSpec& spec, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const Uniform& u) {
            return std::uniform_real_distribution<double>(u.lo, u.hi)(rng);
          },
          [&](const TruncatedNormal& n) {
            std::normal_distribution<double> g(n.mean, n.sd);
            for (;;) {
              double x = g(rng);
              if (x >= n.lo && x <= n.hi) return x;
            }
          },
          [&](const TruncatedLognormalMixture& m) {
            std::uniform_int_distribution<std::size_t> pick(
                0, m.components.size() - 1);
            std::normal_distribution<double> g(0.0, 1.0);
            for (;;) {
              auto [mu, sigma] = m.components[pick(rng)];
              double x = std::exp(mu + sigma * g(rng));
              if (x >= m.lo && x <= m.hi) return x;
            }
          }},
      spec);
}

double pdf(const DistributionSpec& spec, double x) {
  if (x < support_lo(spec) || x > support_hi(spec)) return 0.0;
  return std::visit(
      Overloaded{
          [&](const Uniform& u) { return 1.0 / (u.hi - u.lo); },
          [&](const TruncatedNormal& n) {
            boost::math::normal g(n.mean, n.sd);
            return boost::math::pdf(g, x) / normal_mass(n);
          },
          [&](const TruncatedLognormalMixture& m) {
            if (x <= 0.0) return 0.0;
            double f = 0.0;
            for (auto [mu, sigma] : m.components)
              f += boost::math::pdf(boost::math::lognormal(mu, sigma), x);
            f /= static_cast<double>(m.components.size());
            return f / mixture_mass(m);
          }},
      spec);
}

double cdf(const DistributionSpec& spec, double x) {
  if (x <= support_lo(spec)) return 0.0;
  if (x >= support_hi(spec)) return 1.0;
  return std::visit(
      Overloaded{
          [&](const Uniform& u) { return (x - u.lo) / (u.hi - u.lo); },
          [&](const TruncatedNormal& n) {
            boost::math::normal g(n.mean, n.sd);
            return (boost::math::cdf(g, x) - boost::math::cdf(g, n.lo)) /
                   normal_mass(n);
          },
          [&](const TruncatedLognormalMixture& m) {
            double c = 0.0;
            for (auto [mu, sigma] : m.components) {
              boost::math::lognormal ln(mu, sigma);
              c += boost::math::cdf(ln, x) -
                   (m.lo > 0.0 ? boost::math::cdf(ln, m.lo) : 0.0);
            }
            c /= static_cast<double>(m.components.size());
            return c / mixture_mass(m);
          }},
      spec);
}

namespace {

double moment(const DistributionSpec& spec, int order) {
  using boost::math::quadrature::gauss_kronrod;
  auto f = [&](double x) { return std::pow(x, order) * pdf(spec, x); };
  return gauss_kronrod<double, 61>::integrate(f, support_lo(spec),
                                              support_hi(spec), 15, 1e-12);
}

}  // namespace

double mean(const DistributionSpec& spec) {
  if (const auto* u = std::get_if<Uniform>(&spec)) return 0.5 * (u->lo + u->hi);
  if (const auto* n = std::get_if<TruncatedNormal>(&spec)) {
    boost::math::normal std_normal;
    const double a = (n->lo - n->mean) / n->sd;
    const double b = (n->hi - n->mean) / n->sd;
    return n->mean + n->sd *
                         (boost::math::pdf(std_normal, a) -
                          boost::math::pdf(std_normal, b)) /
                         normal_mass(*n);
  }
  return moment(spec, 1);
}

double variance(const DistributionSpec& spec) {
  if (const auto* u = std::get_if<Uniform>(&spec))
    return (u->hi - u->lo) * (u->hi - u->lo) / 12.0;
  const double m = mean(spec);
  return moment(spec, 2) - m * m;
}

std::string describe(const DistributionSpec& spec) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Uniform& u) {
                   os << "U[" << u.lo << "," << u.hi << "]";
                 },
                 [&](const TruncatedNormal& n) {
                   os << "N(" << n.mean << "," << n.sd << ")|[" << n.lo << ","
                      << n.hi << "]";
                 },
                 [&](const TruncatedLognormalMixture& m) {
                   os << "LNmix{";
                   for (std::size_t c = 0; c < m.components.size(); ++c)
                     os << (c ? "," : "") << "(" << m.components[c].first
                        << "," << m.components[c].second << ")";
                   os << "}|[" << m.lo << "," << m.hi << "]";
                 }},
             spec);
  return os.str();
}

TruncatedLognormalMixture default_lognormal_mixture() {
  return {{{0.3, 0.2}, {0.5, 0.3}, {0.7, 0.4}, {0.9, 0.5}}, 0.0, 1.0};
}

Rng stream_for(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

}  // namespace jal
