#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include "alpharank/dcr.hpp"
#include "alpharank/experiment.hpp"

using namespace alpharank;

namespace {

GroundTruth linear_truth(int n, double gap) {
  std::vector<double> mu(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) mu[static_cast<std::size_t>(i)] = gap * i;
  return GroundTruth::make(mu, std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

}  // namespace

TEST(Plan, LargeScaleRoundsAndBudgets) {
  const auto plan = plan_rounds(10000, 10, 220000, 2.0);
  EXPECT_EQ(plan.rounds, 4);
  const std::vector<double> expected{55000, 55000, 41250, 27500};
  ASSERT_EQ(plan.raw_budgets.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(plan.raw_budgets[r], expected[r], 1e-9);
  EXPECT_EQ(plan.population, (std::vector<int>{10000, 1000, 100, 10}));
  EXPECT_EQ(plan.groups, (std::vector<int>{1000, 100, 10, 1}));
  EXPECT_EQ(plan.budgets, (std::vector<int>{55000, 55000, 41250, 27500}));
  EXPECT_EQ(plan.slack, 220000 - 178750);
}

TEST(Plan, RoundingKeepsWithinBudget) {
  for (int t : {997, 1500, 2003}) {
    const auto plan = plan_rounds(100, 10, t, 2.0);
    EXPECT_EQ(plan.rounds, 2);
    const int used = std::accumulate(plan.budgets.begin(), plan.budgets.end(), 0);
    EXPECT_EQ(used + plan.slack, t);
    EXPECT_GE(plan.slack, 0);
    for (int r = 0; r < plan.rounds; ++r) {
      const auto k = static_cast<std::size_t>(r);
      EXPECT_EQ(plan.budgets[k] % plan.groups[k], 0);
      EXPECT_LE(plan.budgets[k], plan.raw_budgets[k]);
    }
  }
}

TEST(Plan, Rejections) {
  EXPECT_THROW(plan_rounds(1, 10, 100, 2.0), ConfigError);
  EXPECT_THROW(plan_rounds(10, 1, 100, 2.0), ConfigError);
  EXPECT_THROW(plan_rounds(10, 3, 100, 1.5), ConfigError);
  EXPECT_THROW(plan_rounds(100, 10, 150, 2.0), ConfigError);  // round 1 gets 36 < 100
}

TEST(Plan, NineByThree) {
  const auto plan = plan_rounds(9, 3, 400, 2.0);
  EXPECT_EQ(plan.rounds, 2);
  EXPECT_EQ(plan.groups, (std::vector<int>{3, 1}));
  EXPECT_EQ(group_sizes(9, 3, Seeding::Random), (std::vector<int>{3, 3, 3}));
  EXPECT_EQ(group_sizes(5, 3, Seeding::Random), (std::vector<int>{3, 2}));
  EXPECT_EQ(group_sizes(5, 3, Seeding::Seeded), (std::vector<int>{3, 2}));
  EXPECT_EQ(group_sizes(7, 3, Seeding::Seeded), (std::vector<int>{3, 2, 2}));
}

TEST(Grouping, SeededDealsLeadersApart) {
  // a..d with estimates 4 > 3 > 2 > 1, M = 2
  const std::vector<double> est{4, 3, 2, 1};
  RandomStream rng(1);
  const auto g = make_groups({0, 1, 2, 3}, 2, Seeding::Seeded, est, rng);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(g[1], (std::vector<std::size_t>{1, 3}));
}

TEST(Grouping, RandomPartitionsSurvivors) {
  const std::vector<double> est(20, 0.0);
  RandomStream rng(2);
  std::vector<std::size_t> in(17);
  std::iota(in.begin(), in.end(), std::size_t{3});
  const auto g = make_groups(in, 5, Seeding::Random, est, rng);
  ASSERT_EQ(g.size(), 4u);
  std::multiset<std::size_t> seen;
  for (const auto& grp : g) {
    EXPECT_LE(grp.size(), 5u);
    seen.insert(grp.begin(), grp.end());
  }
  EXPECT_EQ(seen, std::multiset<std::size_t>(in.begin(), in.end()));
  EXPECT_EQ(g.back().size(), 2u);
}

TEST(Dcr, OneGroupIsPlainRun) {
  const auto truth = linear_truth(6, 0.2);
  const auto prior = PriorSpec::normal(6, 0.0, 1.0, 1.0);
  const auto plan = plan_rounds(6, 6, 400, 2.0);
  ASSERT_EQ(plan.rounds, 1);
  const RandomStream rng(3);
  const auto inner = PolicySpec::of(PolicyKind::OCBA);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const RandomStream r = rng.fork(Purpose::Evaluation, s);
    const auto res = dcr_run(truth, inner, plan, 2, prior, r);
    EpisodeOptions opt;
    opt.n0 = 2;
    opt.total_budget = plan.budgets[0];
    const auto ep = run_episode(truth, std::make_shared<const PriorSpec>(prior), inner, opt,
                                r.fork(Purpose::Task, 0, 0));
    EXPECT_EQ(res.winner, ep.selected);
    EXPECT_EQ(res.consumed, plan.budgets[0]);
  }
}

TEST(Dcr, WinnerIndependentOfWorkers) {
  const auto truth = linear_truth(9, 0.1);
  const auto prior = PriorSpec::normal(9, 0.0, 1.0, 1.0);
  const auto plan = plan_rounds(9, 3, 300, 2.0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const RandomStream rng(100 + s);
    const auto a = dcr_run(truth, PolicySpec::of(PolicyKind::EA), plan, 2, prior, rng, 1);
    const auto b = dcr_run(truth, PolicySpec::of(PolicyKind::EA), plan, 2, prior, rng, 4);
    EXPECT_EQ(a.winner, b.winner);
    std::ostringstream x, y;
    write_audit(x, a);
    write_audit(y, b);
    EXPECT_EQ(x.str(), y.str());
  }
}

TEST(Dcr, OracleInnerFindsTrueBest) {
  const auto truth = GroundTruth::make({0.3, 0.9, 0.1, 0.5, 0.2, 0.8, 0.4, 0.0, 0.7, 0.6, 0.35},
                                       std::vector<double>(11, 1.0));
  const auto prior = PriorSpec::normal(11, 0.0, 1.0, 1.0);
  for (auto seeding : {Seeding::Random, Seeding::Seeded}) {
    const auto plan = plan_rounds(11, 3, 600, 2.0, seeding);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto res = dcr_run(truth, PolicySpec::of(PolicyKind::EA), plan, 1, prior, RandomStream(s), 1,
                               [](const BeliefState&, const GroundTruth& t) { return t.best_index; });
      EXPECT_EQ(res.winner, truth.best_index);
    }
  }
}

TEST(Dcr, AuditInvariants) {
  const auto truth = linear_truth(23, 0.1);
  const auto prior = PriorSpec::normal(23, 0.0, 1.0, 1.0);
  const auto plan = plan_rounds(23, 4, 2000, 2.0, Seeding::Seeded);
  const auto res = dcr_run(truth, PolicySpec::of(PolicyKind::OCBA), plan, 2, prior, RandomStream(5));
  EXPECT_LE(res.consumed, plan.total_budget);
  EXPECT_EQ(res.consumed + res.slack, plan.total_budget);
  std::vector<std::size_t> survivors(23);
  std::iota(survivors.begin(), survivors.end(), std::size_t{0});
  for (int r = 1; r <= plan.rounds; ++r) {
    std::vector<std::size_t> members, next;
    for (const auto& g : res.audit) {
      if (g.round != r) continue;
      members.insert(members.end(), g.members.begin(), g.members.end());
      EXPECT_NE(std::find(g.members.begin(), g.members.end(), g.winner), g.members.end());
      EXPECT_LE(g.consumed, g.budget);
      EXPECT_EQ(g.consumed, g.members.size() == 1 ? 0 : g.budget);
      next.push_back(g.winner);
    }
    std::sort(members.begin(), members.end());
    EXPECT_EQ(members, survivors);  // groups partition the round's survivors
    std::sort(next.begin(), next.end());
    survivors = next;
  }
  ASSERT_EQ(survivors.size(), 1u);
  EXPECT_EQ(survivors[0], res.winner);
}

TEST(Dcr, CheckRejectsTinyGroupBudget) {
  const auto prior = PriorSpec::normal(30, 0.0, 1.0, 1.0);
  const auto plan = plan_rounds(30, 10, 130, 2.0);  // 10 per group in round 1, n0 * 10 = 20
  EXPECT_THROW(check_dcr(plan, PolicySpec::of(PolicyKind::EA), 2, prior), ConfigError);
}

TEST(Dcr, BonferroniBoundHolds) {
  // PCS >= sum_r PCS_r - R + 1 with PCS_r the best alternative's survival
  // rate in round r given it entered the round.
  const int n = 27, reps = 2000;
  const auto truth = linear_truth(n, 0.1);
  const auto prior = PriorSpec::normal(n, 0.0, 1.0, 1.0);
  const auto plan = plan_rounds(n, 3, 1200, 2.0);
  std::vector<int> entered(static_cast<std::size_t>(plan.rounds), 0), survived(entered);
  int correct = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto res = dcr_run(truth, PolicySpec::of(PolicyKind::OCBA), plan, 2, prior,
                             replication_stream(11, static_cast<std::size_t>(rep)));
    correct += res.winner == truth.best_index;
    for (const auto& g : res.audit) {
      if (std::find(g.members.begin(), g.members.end(), truth.best_index) == g.members.end()) continue;
      entered[static_cast<std::size_t>(g.round - 1)] += 1;
      survived[static_cast<std::size_t>(g.round - 1)] += g.winner == truth.best_index;
    }
  }
  const double pcs = static_cast<double>(correct) / reps;
  double bound = 1.0 - plan.rounds, var = pcs * (1 - pcs) / reps;
  for (int r = 0; r < plan.rounds; ++r) {
    const auto k = static_cast<std::size_t>(r);
    ASSERT_GT(entered[k], 0);
    const double p = static_cast<double>(survived[k]) / entered[k];
    bound += p;
    var += p * (1 - p) / entered[k];
  }
  EXPECT_GE(pcs, bound - 2 * std::sqrt(var)) << "pcs " << pcs << " bound " << bound;
}
