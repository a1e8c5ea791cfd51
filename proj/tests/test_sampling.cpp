#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "gfts/dynamics.hpp"
#include "gfts/eval.hpp"
#include "gfts/sampling.hpp"
#include "oracles.hpp"

using namespace gfts;

namespace {

double subset_rank_fraction(const Matrix& a, double greedy_sigma) {
  Index below = 0, total = 0;
  oracle::for_each_subset(a.rows(), a.cols(), [&](const oracle::IndexList& s) {
    ++total;
    if (oracle::sigma_min(oracle::rows_of(a, s)) <= greedy_sigma + 1e-12) ++below;
    return true;
  });
  return static_cast<double>(below) / static_cast<double>(total);
}

}  // namespace

TEST(GreedySelect, IdentityPicksItsOwnRows) {
  const auto op = build_gft(Matrix::Identity(5, 5));
  const auto plan = greedy_select(op, 2, 2);
  EXPECT_EQ(plan.nodes, (IndexList{0, 1}));
  EXPECT_NEAR(plan.sigma_min, 1.0, 1e-15);
  EXPECT_EQ(plan.band, (IndexList{0, 1}));
  EXPECT_EQ(plan.operator_ref, op.checksum());
}

TEST(GreedySelect, TiesGoToTheLowestIndex) {
  Matrix f(3, 3);
  const double h = std::sqrt(0.5);
  f << h, h, 0, h, -h, 0, 0, 0, 1;
  const GftOperator op(f, 1, {0});
  EXPECT_EQ(greedy_select(op, 1, 1).nodes, (IndexList{0}));
  // Same rows presented in the other order: the tie still goes to row 0.
  Matrix g = f;
  g.row(0).swap(g.row(1));
  EXPECT_EQ(greedy_select(GftOperator(g, 1, {0}), 1, 1).nodes, (IndexList{0}));
}

TEST(GreedySelect, MatchesNaiveSvdGreedy) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<Index> size(4, 14);
    const Index n = size(rng);
    std::uniform_int_distribution<Index> band(1, n);
    const Index m = band(rng);
    const Matrix f = oracle::random_orthogonal(n, rng);
    const Matrix a = f.leftCols(m);
    std::uniform_int_distribution<Index> budget(1, n);
    const Index s = budget(rng);
    const auto trace = greedy_rows(a, s);
    EXPECT_EQ(trace.order, oracle::naive_greedy(a, s)) << "trial " << trial;
    for (std::size_t i = 0; i < trace.order.size(); ++i) {
      const IndexList prefix(trace.order.begin(), trace.order.begin() + static_cast<long>(i) + 1);
      EXPECT_NEAR(trace.score[i], oracle::sigma_min(oracle::rows_of(a, prefix)), 1e-9);
    }
  }
}

TEST(GreedySelect, NearOptimalOnSmallOrthogonalOperators) {
  std::mt19937_64 rng(37);
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix f = oracle::random_orthogonal(8, rng);
    const GftOperator op(f, 3, {});
    const auto plan = greedy_select(op, 3, 3);
    if (subset_rank_fraction(f.leftCols(3), plan.sigma_min) >= 0.95) ++good;
  }
  EXPECT_GE(good, 18);
}

TEST(GreedySelect, ReachesFullRankWhenBudgetAllows) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix f = oracle::random_orthogonal(20, rng);
    const auto plan = greedy_select(GftOperator(f, 6, {}), 6, 9);
    EXPECT_EQ(oracle::rank(oracle::cols_of(oracle::rows_of(f, plan.nodes), iota_list(6))), 6);
    EXPECT_GT(plan.sigma_min, 0.0);
  }
}

TEST(GreedySelect, DegenerateOperatorIsReported) {
  Matrix a(3, 2);
  a << 1, 1, 2, 2, 3, 3;  // rank one: no second row can raise σ_min
  EXPECT_THROW(greedy_rows(a, 2), NumericalError);
  GreedyOptions lenient;
  lenient.throw_on_degenerate = false;
  const auto trace = greedy_rows(a, 2, lenient);
  EXPECT_EQ(trace.order.size(), 2u);
  EXPECT_LE(trace.score[1], 1e-12);
}

TEST(GreedySelect, RejectsBadArguments) {
  const auto op = build_gft(Matrix::Identity(4, 4));
  EXPECT_THROW(greedy_select(op, 2, 5), UsageError);
  EXPECT_THROW(greedy_select(op, 5, 2), UsageError);
  EXPECT_THROW(greedy_select(op, 2, 0), UsageError);
  EXPECT_THROW(greedy_select_basis(op.basis(), {0, 7}, 2), UsageError);
}

TEST(GreedySelect, ParallelScoringGivesTheSamePlan) {
  std::mt19937_64 rng(43);
  const Matrix f = oracle::random_orthogonal(40, rng);
  GreedyOptions par;
  par.jobs = 4;
  EXPECT_EQ(greedy_rows(f.leftCols(12), 20).order, greedy_rows(f.leftCols(12), 20, par).order);
}

TEST(SamplingProperty, RelabelingPermutesTheSelection) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 15;
    const Matrix f = oracle::random_orthogonal(n, rng);
    IndexList perm = iota_list(n);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i) g.row(perm[static_cast<std::size_t>(i)]) = f.row(i);
    const auto a = greedy_rows(f.leftCols(5), 8).order;
    const auto b = greedy_rows(g.leftCols(5), 8).order;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], perm[static_cast<std::size_t>(a[i])]);
  }
}

TEST(Sample, Examples) {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  SamplingPlan all;
  all.nodes = {0, 1, 2};
  EXPECT_EQ(sample(x, all), x);
  SamplingPlan first;
  first.nodes = {0};
  EXPECT_EQ(sample(x, first), x.topRows(1));
  SamplingPlan bad;
  bad.nodes = {3};
  EXPECT_THROW(sample(x, bad), DataError);
  bad.nodes = {1, 1};
  EXPECT_THROW(sample(x, bad), DataError);
}

TEST(Recover, FullSamplingIsIdentity) {
  std::mt19937_64 rng(53);
  const Matrix x = oracle::gaussian(9, 12, rng);
  const auto op = build_gft(x);
  SamplingPlan plan;
  plan.nodes = iota_list(9);
  plan.band = iota_list(9);
  const auto rep = recover(sample(x, plan), op, plan);
  EXPECT_LE(max_abs(rep.estimate - x), 1e-12);
  EXPECT_FALSE(rep.rank_deficient);
}

TEST(Recover, RankOneClosedForm) {
  std::mt19937_64 rng(59);
  const Matrix x = oracle::gaussian(10, 1, rng) * oracle::gaussian(1, 30, rng);
  const auto op = build_gft(x);
  ASSERT_EQ(op.cutoff(), 1);
  const auto plan = greedy_select(op, 1, 1);
  // The greedy node is the largest |u_i|; X̂ = u vᵀ follows from one row.
  Index arg = 0;
  x.col(0).cwiseAbs().maxCoeff(&arg);
  EXPECT_EQ(plan.nodes[0], arg);
  const auto rep = recover(sample(x, plan), op, plan);
  EXPECT_LE(max_abs(rep.estimate - x), 1e-10 * max_abs(x));
}

TEST(Recover, TruncatedBandLeavesTheTruncatedEnergy) {
  std::mt19937_64 rng(61);
  const Matrix x = oracle::low_rank(20, 25, 6, rng);
  const auto op = build_gft(x);
  SamplingPlan plan;
  plan.nodes = iota_list(20);
  for (Index band = 1; band < 6; ++band) {
    plan.band = iota_list(band);
    const double e = rmse(recover(x, op, plan).estimate, x);
    const Matrix tail = (op.basis().transpose() * x).middleRows(band, 20 - band);
    const double oracle_residual = tail.norm() / std::sqrt(20.0 * 25.0);
    EXPECT_GT(e, 0.0);
    EXPECT_NEAR(e, oracle_residual, 1e-12 * std::max(1.0, oracle_residual));
  }
}

TEST(Recover, RankDeficientPlansAreFlaggedOrRejected) {
  std::mt19937_64 rng(67);
  const Matrix x = oracle::low_rank(10, 12, 4, rng);
  const auto op = build_gft(x);
  SamplingPlan plan;
  plan.nodes = {0, 1};
  plan.band = iota_list(4);
  const auto rep = recover(sample(x, plan), op, plan);
  EXPECT_TRUE(rep.rank_deficient);
  EXPECT_THROW(recover(sample(x, plan), op, plan, true), NumericalError);
  EXPECT_THROW(recover(Matrix::Ones(3, 12), op, plan), DataError);
}

TEST(SamplingProperty, ExactRecoveryAtRankOnScenarios) {
  const auto g = make_default_network();
  BankOptions opt;
  opt.count = 10;
  for (const auto& cfg : make_scenario_bank(g, opt)) {
    const auto x = simulate_dynamics(g, cfg);
    const auto op = build_gft(x);
    const auto plan = greedy_select(op, x.rank(), x.rank());
    EXPECT_EQ(plan.size(), x.rank());
    auto rep = recover(sample(x.data(), plan), op, plan, true);
    score(rep, x.data());
    EXPECT_LT(rep.rmse, 1e-8) << cfg.id;
    EXPECT_NEAR(rep.rmse, oracle::svals(rep.estimate - x.data()).norm() / std::sqrt(double(x.data().size())), 1e-12);
  }
}

TEST(SamplingProperty, RecoveryIsIdempotent) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = oracle::gaussian(15, 10, rng);  // not band-limited: X̂ ≠ X
    const auto op = build_gft(oracle::low_rank(15, 20, 5, rng));
    const auto plan = greedy_select(op, 4, 7);
    const Matrix once = recover(sample(x, plan), op, plan).estimate;
    const Matrix twice = recover(sample(once, plan), op, plan).estimate;
    EXPECT_LE(max_abs(twice - once), 1e-10 * std::max(1.0, max_abs(once)));
  }
}

TEST(SamplingProperty, PlateauOnceBothSizesReachTheRank) {
  std::mt19937_64 rng(73);
  const Matrix x = oracle::low_rank(24, 30, 7, rng);
  const auto op = build_gft(x);
  for (Index band = 7; band <= 24; band += 3) {
    const auto trace = greedy_rows(op.basis().leftCols(band), 24);
    for (Index s = band; s <= 24; s += 2) {
      const auto plan = plan_prefix(op.basis(), iota_list(band), trace, s, op.checksum());
      EXPECT_LT(rmse(recover(sample(x, plan), op, plan).estimate, x), 1e-10)
          << "|R|=" << band << " |S|=" << s;
    }
  }
}

TEST(SamplingProperty, TruncationEnergyIsAFloor) {
  std::mt19937_64 rng(79);
  const Matrix x = oracle::low_rank(24, 30, 8, rng);
  const auto op = build_gft(x);
  SamplingPlan all;
  all.nodes = iota_list(24);
  double prev = std::numeric_limits<double>::infinity();
  for (Index band = 1; band <= 24; ++band) {
    all.band = iota_list(band);
    const double floor = rmse(recover(x, op, all).estimate, x);
    EXPECT_LE(floor, prev + 1e-12);  // monotone in |R| at S = V
    prev = floor;
    const auto trace = greedy_rows(op.basis().leftCols(band), 24);
    for (Index s = band; s <= 24; ++s) {
      const auto plan = plan_prefix(op.basis(), all.band, trace, s, {});
      EXPECT_GE(rmse(recover(sample(x, plan), op, plan).estimate, x), floor - 1e-12);
    }
  }
}
