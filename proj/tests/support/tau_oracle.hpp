#pragma once

// Brute-force pair counting and random dataset generation shared by the unit
// tests and the acceptance runner.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reward_align/preference.hpp"
#include "reward_align/rng.hpp"

namespace tau_oracle {

using reward_align::PairRelation;
using reward_align::Relation;

struct Counts {
  long p = 0, q = 0, x0 = 0, y0 = 0, both = 0;
};

inline int sign_of(Relation r) { return r == Relation::Succ ? 1 : r == Relation::Prec ? -1 : 0; }

// Every (human, reward) relation pair with matching ids, classified by sign
// products rather than the library's classification.
inline Counts count(const std::vector<PairRelation>& human, const std::vector<PairRelation>& reward) {
  Counts c;
  for (const auto& h : human) {
    for (const auto& r : reward) {
      int rs;
      if (r.i == h.i && r.j == h.j) {
        rs = sign_of(r.rel);
      } else if (r.i == h.j && r.j == h.i) {
        rs = -sign_of(r.rel);
      } else {
        continue;
      }
      const int hs = sign_of(h.rel);
      if (hs * rs > 0) ++c.p;
      else if (hs * rs < 0) ++c.q;
      else if (hs != 0) ++c.x0;
      else if (rs != 0) ++c.y0;
      else ++c.both;
    }
  }
  return c;
}

inline std::optional<double> sigma(const Counts& c) {
  const double l = static_cast<double>(c.p + c.q + c.x0);
  const double r = static_cast<double>(c.p + c.q + c.y0);
  if (l == 0.0 || r == 0.0) return std::nullopt;
  return static_cast<double>(c.p - c.q) / std::sqrt(l * r);
}

// Integer scores in a small range so ties are common.
inline std::vector<double> tied_scores(reward_align::Rng& rng, std::size_t n, int levels) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)));
  return v;
}

struct PairData {
  std::vector<PairRelation> human;
  std::vector<PairRelation> reward;
};

// Two score-induced datasets over 2..8 distributions. A quarter of the pairs
// are dropped; orientation is random per dataset; the reward side is shuffled.
inline PairData random_pair_data(reward_align::Rng& rng) {
  const auto n = 2 + static_cast<std::size_t>(rng.below(7));
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < n; ++k) ids.push_back("d" + std::to_string(k));
  const auto hs = tied_scores(rng, n, 1 + static_cast<int>(rng.below(4)));
  const auto rs = tied_scores(rng, n, 1 + static_cast<int>(rng.below(4)));
  PairData out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < 0.25) continue;
      const bool flip_h = rng.bernoulli(0.5);
      const bool flip_r = rng.bernoulli(0.5);
      const std::size_t hi = flip_h ? j : i, hj = flip_h ? i : j;
      const std::size_t ri = flip_r ? j : i, rj = flip_r ? i : j;
      out.human.push_back({ids[hi], ids[hj], reward_align::compare_values(hs[hi], hs[hj], 0.0)});
      out.reward.push_back({ids[ri], ids[rj], reward_align::compare_values(rs[ri], rs[rj], 0.0)});
    }
  }
  rng.shuffle(std::span<PairRelation>(out.reward));
  return out;
}

}  // namespace tau_oracle
