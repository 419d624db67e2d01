#include "reward_align/tac.hpp"

#include <cmath>
#include <unordered_map>

#include "reward_align/parallel.hpp"

namespace reward_align {

namespace {

std::string key_of(const std::string& i, const std::string& j) {
  std::string k;
  k.reserve(i.size() + j.size() + 1);
  k.append(i).push_back('\x1f');
  k.append(j);
  return k;
}

std::string describe_pairs(const std::vector<std::string>& keys) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(keys.size(), 5);
  for (std::size_t k = 0; k < shown; ++k) {
    std::string pair = keys[k];
    pair.replace(pair.find('\x1f'), 1, ", ");
    out += (out.empty() ? "{" : "; {") + pair + "}";
  }
  if (keys.size() > shown) out += "; ...";
  return out;
}

PairClass classify_scores(double ai, double aj, double bi, double bj, double tol_a,
                          double tol_b) noexcept {
  return classify(compare_values(ai, aj, tol_a), compare_values(bi, bj, tol_b));
}

}  // namespace

std::string_view pair_class_name(PairClass c) noexcept {
  switch (c) {
    case PairClass::Concordant: return "concordant";
    case PairClass::Discordant: return "discordant";
    case PairClass::TiedRewardOnly: return "tied_reward_only";
    case PairClass::TiedHumanOnly: return "tied_human_only";
    case PairClass::TiedBoth: return "tied_both";
  }
  return "unknown";
}

PairClass classify(Relation a, Relation b) noexcept {
  const bool a_tied = a == Relation::Indiff;
  const bool b_tied = b == Relation::Indiff;
  if (a_tied && b_tied) return PairClass::TiedBoth;
  if (b_tied) return PairClass::TiedRewardOnly;
  if (a_tied) return PairClass::TiedHumanOnly;
  return a == b ? PairClass::Concordant : PairClass::Discordant;
}

void TauCounts::add(PairClass c) noexcept {
  switch (c) {
    case PairClass::Concordant: ++concordant; break;
    case PairClass::Discordant: ++discordant; break;
    case PairClass::TiedRewardOnly: ++tied_b_only; break;
    case PairClass::TiedHumanOnly: ++tied_a_only; break;
    case PairClass::TiedBoth: ++tied_both; break;
  }
}

TauCounts& TauCounts::operator+=(const TauCounts& o) noexcept {
  concordant += o.concordant;
  discordant += o.discordant;
  tied_b_only += o.tied_b_only;
  tied_a_only += o.tied_a_only;
  tied_both += o.tied_both;
  return *this;
}

std::optional<double> tau_b(const TauCounts& c) noexcept {
  const auto strict = c.concordant + c.discordant;
  const auto left = strict + c.tied_b_only;
  const auto right = strict + c.tied_a_only;
  if (left == 0 || right == 0) return std::nullopt;
  return static_cast<double>(c.concordant - c.discordant) /
         std::sqrt(static_cast<double>(left) * static_cast<double>(right));
}

double TacReport::sigma_or_throw() const {
  if (!sigma) throw DegenerateDenominator("TAC undefined: " + undefined_reason);
  return *sigma;
}

TacReport tac(const PreferenceDataset& human, const PreferenceDataset& reward) {
  std::unordered_map<std::string, Relation> reward_rel;
  reward_rel.reserve(reward.size() * 2);
  for (const auto& r : reward.relations()) {
    const auto n = normalized(r);
    reward_rel.emplace(key_of(n.i, n.j), n.rel);
  }

  TacReport report;
  report.source_a = human.source().label();
  report.source_b = reward.source().label();
  report.per_pair.reserve(human.size());

  std::vector<std::string> missing;
  std::size_t matched = 0;
  for (const auto& h : human.relations()) {
    const auto n = normalized(h);
    const auto key = key_of(n.i, n.j);
    auto it = reward_rel.find(key);
    if (it == reward_rel.end()) {
      missing.push_back(key);
      continue;
    }
    ++matched;
    const PairClass c = classify(n.rel, it->second);
    report.counts.add(c);
    report.per_pair.push_back({n.i, n.j, c});
  }
  if (!missing.empty() || matched != reward.size()) {
    std::vector<std::string> extra;
    if (matched != reward.size()) {
      std::unordered_map<std::string, bool> in_human;
      for (const auto& h : human.relations()) {
        const auto n = normalized(h);
        in_human.emplace(key_of(n.i, n.j), true);
      }
      for (const auto& r : reward.relations()) {
        const auto n = normalized(r);
        if (!in_human.contains(key_of(n.i, n.j))) extra.push_back(key_of(n.i, n.j));
      }
    }
    std::string msg = "datasets cover different pairs";
    if (!missing.empty()) msg += "; missing from " + report.source_b + ": " + describe_pairs(missing);
    if (!extra.empty()) msg += "; extra in " + report.source_b + ": " + describe_pairs(extra);
    throw PairMismatch(msg);
  }

  report.sigma = tau_b(report.counts);
  if (!report.sigma) {
    report.undefined_reason = report.counts.total() == 0 ? "no pairs" : "degenerate denominator";
  }
  return report;
}

TacReport tac_between_rewards(const PreferenceDataset& a, const PreferenceDataset& b) {
  auto report = tac(a, b);
  auto as_reward_label = [](const PreferenceSource& s) {
    return s.kind == PreferenceSource::Kind::Reward ? s.label()
                                                    : PreferenceSource::reward(s.label()).label();
  };
  report.source_a = as_reward_label(a.source());
  report.source_b = as_reward_label(b.source());
  return report;
}

namespace reference {

TauCounts count_score_pairs(std::span<const double> a, std::span<const double> b,
                            double tie_tol_a, double tie_tol_b) {
  if (a.size() != b.size()) throw InvalidArgument("score vectors differ in length");
  TauCounts counts;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      counts.add(classify_scores(a[i], a[j], b[i], b[j], tie_tol_a, tie_tol_b));
    }
  }
  return counts;
}

}  // namespace reference

TauCounts count_score_pairs(std::span<const double> a, std::span<const double> b,
                            double tie_tol_a, double tie_tol_b, int jobs) {
  if (a.size() != b.size()) throw InvalidArgument("score vectors differ in length");
  const auto n = static_cast<std::int64_t>(a.size());
  std::int64_t p = 0, q = 0, x0 = 0, y0 = 0, both = 0;
#pragma omp parallel for schedule(dynamic, 16) num_threads(resolve_jobs(jobs)) \
    reduction(+ : p, q, x0, y0, both) if (n > 256)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      switch (classify_scores(a[i], a[j], b[i], b[j], tie_tol_a, tie_tol_b)) {
        case PairClass::Concordant: ++p; break;
        case PairClass::Discordant: ++q; break;
        case PairClass::TiedRewardOnly: ++x0; break;
        case PairClass::TiedHumanOnly: ++y0; break;
        case PairClass::TiedBoth: ++both; break;
      }
    }
  }
  return {p, q, x0, y0, both};
}

std::optional<double> kendall_tau_b(std::span<const double> a, std::span<const double> b,
                                    double tie_tol, int jobs) {
  return tau_b(count_score_pairs(a, b, tie_tol, tie_tol, jobs));
}

}  // namespace reward_align
