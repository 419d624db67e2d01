#pragma once

#include <array>
#include <string>
#include <vector>

#include "reward_align/preference.hpp"

namespace reward_align {

struct RewardPair {
  RewardParams first;   // the pair's expected winner
  RewardParams second;
};

/// The twelve reference Hungry-Thirsty reward pairs, each vector as
/// (hungry&thirsty, hungry&quenched, fed&thirsty, fed&quenched).
inline const std::array<RewardPair, 12> kComparisonPairs = {{
    {{-0.9, -0.7, -0.4, 1.1}, {-1.0, 0.0, 0.5, 1.0}},
    {{-3.7, 0.0, -3.1, 5.1}, {-3.0, 1.5, 3.0, 5.0}},
    {{-0.9, -0.7, -0.4, 1.1}, {-0.05, 0.2, 1.0, 1.0}},
    {{-3.6, 0.0, -3.1, 5.4}, {-5.8, 1.2, 3.6, 5.8}},
    {{0.0, 0.0, 10.0, 10.0}, {-0.05, 0.2, 1.0, 1.0}},
    {{-5.0, 0.0, 3.25, 5.0}, {-5.0, 1.5, 3.25, 5.0}},
    {{-0.5, -0.5, 10.0, 10.0}, {-0.05, 0.2, 1.0, 1.0}},
    {{-0.4, -0.5, 0.0, 1.0}, {-0.2, 0.2, 0.5, 1.0}},
    {{-5.0, 0.0, -2.5, 5.0}, {-5.0, 1.5, 3.25, 5.0}},
    {{-1.0, -0.05, -0.25, 1.0}, {-5.0, 1.5, 3.25, 5.0}},
    {{-3.75, 0.0, -3.0, 5.0}, {-5.0, 1.5, 3.25, 5.0}},
    {{-1.0, -0.7, -0.5, 1.0}, {-0.05, 0.2, 1.0, 1.0}},
}};

/// Distinct vectors of kComparisonPairs in first-appearance order (17).
std::vector<RewardParams> distinct_comparison_rewards();

/// "(a,b,c,d)" with shortest round-trip formatting.
std::string format_params(const RewardParams& p);

}  // namespace reward_align
