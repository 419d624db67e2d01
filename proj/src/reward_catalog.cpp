#include "reward_align/reward_catalog.hpp"

#include <algorithm>
#include <charconv>

namespace reward_align {

std::vector<RewardParams> distinct_comparison_rewards() {
  std::vector<RewardParams> out;
  auto keep = [&](const RewardParams& p) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  };
  for (const auto& pair : kComparisonPairs) {
    keep(pair.first);
    keep(pair.second);
  }
  return out;
}

std::string format_params(const RewardParams& p) {
  std::string out = "(";
  const double v[] = {p.hungry_thirsty, p.hungry_quenched, p.fed_thirsty, p.fed_quenched};
  for (int k = 0; k < 4; ++k) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v[k]);
    out.append(buf, res.ptr);
    out += k < 3 ? "," : ")";
  }
  return out;
}

}  // namespace reward_align
