#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reward_align/preference.hpp"

namespace reward_align {

/// Classification of one unordered pair across two preference sources A and B
/// (A is the human / reference side, B the reward side).
enum class PairClass : std::uint8_t {
  Concordant,
  Discordant,
  TiedRewardOnly,  // B indifferent, A strict: counts toward X0
  TiedHumanOnly,   // A indifferent, B strict: counts toward Y0
  TiedBoth,        // contributes to no counter
};

std::string_view pair_class_name(PairClass c) noexcept;

PairClass classify(Relation a, Relation b) noexcept;

struct TauCounts {
  std::int64_t concordant = 0;   // P
  std::int64_t discordant = 0;   // Q
  std::int64_t tied_b_only = 0;  // X0
  std::int64_t tied_a_only = 0;  // Y0
  std::int64_t tied_both = 0;

  std::int64_t total() const noexcept {
    return concordant + discordant + tied_b_only + tied_a_only + tied_both;
  }
  void add(PairClass c) noexcept;
  TauCounts& operator+=(const TauCounts& o) noexcept;
  friend bool operator==(const TauCounts&, const TauCounts&) = default;
};

/// (P - Q) / sqrt((P + Q + X0)(P + Q + Y0)); nullopt when a factor is zero.
std::optional<double> tau_b(const TauCounts& counts) noexcept;

struct PairClassification {
  std::string i;  // lexicographically smaller id
  std::string j;
  PairClass classification = PairClass::TiedBoth;
};

struct TacReport {
  std::optional<double> sigma;
  /// Empty when sigma is defined; "no pairs" or "degenerate denominator".
  std::string undefined_reason;
  TauCounts counts;
  std::vector<PairClassification> per_pair;
  std::string source_a;
  std::string source_b;

  bool defined() const noexcept { return sigma.has_value(); }
  /// Throws DegenerateDenominator when undefined.
  double sigma_or_throw() const;
};

/// Trajectory Alignment Coefficient of `reward` against `human`. Both datasets
/// must cover exactly the same unordered pairs (PairMismatch otherwise); pair
/// orientation is normalized before comparison.
TacReport tac(const PreferenceDataset& human, const PreferenceDataset& reward);

/// tac() between two reward-induced datasets.
TacReport tac_between_rewards(const PreferenceDataset& a, const PreferenceDataset& b);

/// Pair counting over two score vectors: item i is preferred to item j by a
/// source when its score exceeds j's by more than that source's tolerance.
/// This is the core reused for scalar rankings (e.g. eval return vs reward
/// return, or two vectors of sigma values).
TauCounts count_score_pairs(std::span<const double> a, std::span<const double> b,
                            double tie_tol_a, double tie_tol_b, int jobs = 0);

std::optional<double> kendall_tau_b(std::span<const double> a, std::span<const double> b,
                                    double tie_tol = 0.0, int jobs = 0);

namespace reference {
/// Single-threaded O(n^2) counting, kept as the oracle for the parallel kernel.
TauCounts count_score_pairs(std::span<const double> a, std::span<const double> b,
                            double tie_tol_a, double tie_tol_b);
}  // namespace reference

}  // namespace reward_align
