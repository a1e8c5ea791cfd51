#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <set>

#include "gfts/dynamics.hpp"
#include "gfts/eval.hpp"
#include "oracles.hpp"

using namespace gfts;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NetworkGraph cycle(Index n) {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    nodes.push_back({"c" + std::to_string(i)});
    edges.push_back({i, (i + 1) % n});
  }
  return NetworkGraph(std::move(nodes), std::move(edges));
}

}  // namespace

TEST(Rmse, Examples) {
  EXPECT_EQ(rmse(Matrix::Zero(3, 4), Matrix::Zero(3, 4)), 0.0);
  EXPECT_DOUBLE_EQ(rmse(Matrix::Ones(3, 4), Matrix::Zero(3, 4)), 1.0);
  Matrix e = Matrix::Zero(2, 2);
  e(0, 0) = 2.0;
  EXPECT_DOUBLE_EQ(rmse(e, Matrix::Zero(2, 2)), 1.0);
  const Vector per_node = per_node_rmse(e, Matrix::Zero(2, 2));
  EXPECT_DOUBLE_EQ(per_node(0), std::sqrt(2.0));
  EXPECT_EQ(per_node(1), 0.0);
  EXPECT_THROW(rmse(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), DataError);
}

TEST(RandomNodeOrder, IsASeededPermutation) {
  const auto a = random_node_order(50, 3);
  EXPECT_EQ(a, random_node_order(50, 3));
  EXPECT_NE(a, random_node_order(50, 4));
  EXPECT_EQ(std::set<Index>(a.begin(), a.end()).size(), 50u);
  EXPECT_EQ(*std::max_element(a.begin(), a.end()), 49);
}

TEST(GridAxis, OddValuesPlusExtrasAndN) {
  EXPECT_EQ(grid_axis(10, 2), (IndexList{1, 3, 5, 7, 9, 10}));
  EXPECT_EQ(grid_axis(9, 2, {4, 12}), (IndexList{1, 3, 4, 5, 7, 9}));
  EXPECT_EQ(grid_axis(5, 1), iota_list(5, 1));
  EXPECT_THROW(grid_axis(5, 0), UsageError);
}

TEST(Sweep, GftCellsMatchDirectRecovery) {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::low_rank(14, 16, 4, rng);
  const auto res = sweep(x, Scheme::gft, {2, 4, 9}, {1, 4, 14}, {}, "t");
  EXPECT_EQ(res.scenario_id, "t");
  EXPECT_EQ(res.rank, 4);
  ASSERT_EQ(res.grid.size(), 9u);
  const auto op = build_gft(x);
  for (const auto& cell : res.grid) {
    const auto plan = greedy_select(op, cell.band, cell.size, {1, false});
    const double direct = rmse(recover(sample(x, plan), op, plan).estimate, x);
    EXPECT_NEAR(cell.rmse, direct, 1e-12) << cell.band << "," << cell.size;
    EXPECT_EQ(cell.rank_deficient, cell.size < cell.band);
    EXPECT_FALSE(cell.failed);
  }
  EXPECT_LT(res.find(4, 4)->rmse, 1e-10);
  EXPECT_LT(res.find(9, 14)->rmse, 1e-10);
  EXPECT_GT(res.find(2, 14)->rmse, 1e-3);
  EXPECT_EQ(res.find(3, 3), nullptr);
}

TEST(Sweep, ParallelBandsGiveTheSameGrid) {
  std::mt19937_64 rng(5);
  const Matrix x = oracle::low_rank(20, 10, 6, rng);
  EvalContext par;
  par.jobs = 3;
  const auto axis = grid_axis(20, 3);
  EXPECT_EQ(sweep(x, Scheme::gft, axis, axis), sweep(x, Scheme::gft, axis, axis, par));
}

TEST(Sweep, CsCollapsesTheBandAxis) {
  std::mt19937_64 rng(7);
  const Matrix x = oracle::low_rank(10, 5, 2, rng);
  const auto res = sweep(x, Scheme::cs_pca, {1, 3}, {5, 10});
  ASSERT_EQ(res.grid.size(), 2u);
  for (const auto& cell : res.grid) EXPECT_EQ(cell.band, 10);
  EXPECT_LT(res.find(10, 10)->rmse, 1e-8);
}

TEST(Sweep, RejectsBadAxesAndMissingSpectrum) {
  const Matrix x = Matrix::Identity(4, 4);
  EXPECT_THROW(sweep(x, Scheme::gft, {0}, {1}), UsageError);
  EXPECT_THROW(sweep(x, Scheme::gft, {1}, {5}), UsageError);
  EXPECT_THROW(sweep(x, Scheme::gft, {}, {1}), UsageError);
  EXPECT_THROW(sweep(x, Scheme::laplacian, {1}, {1}), UsageError);
}

TEST(MinSize, InfiniteThresholdNeedsOneSensor) {
  std::mt19937_64 rng(11);
  const Matrix x = oracle::low_rank(12, 15, 3, rng);
  const auto spec = laplacian_spectrum(normalized_laplacian(cycle(12)));
  EvalContext ctx;
  ctx.laplacian = &spec;
  for (Scheme s : {Scheme::gft, Scheme::laplacian, Scheme::cs_pca, Scheme::cs_dct})
    EXPECT_EQ(min_sampling_size(x, s, kInf, ctx).s_min, 1) << to_string(s);
}

TEST(MinSize, GftNeedsExactlyTheRank) {
  std::mt19937_64 rng(13);
  for (Index r : {1, 3, 7}) {
    const Matrix x = oracle::low_rank(25, 30, r, rng);
    const auto m = min_sampling_size(x, Scheme::gft);
    EXPECT_EQ(m.s_min, r);
    EXPECT_EQ(m.r_min, r);
    EXPECT_FALSE(m.unreachable);
    EXPECT_LT(m.rmse_at_min, kRecoveryThreshold);
  }
}

TEST(MinSize, ZeroDataAndBadThreshold) {
  const auto m = min_sampling_size(Matrix::Zero(5, 3), Scheme::cs_dct);
  EXPECT_EQ(m.s_min, 1);
  EXPECT_EQ(m.rmse_at_min, 0.0);
  EXPECT_THROW(min_sampling_size(Matrix::Ones(5, 3), Scheme::gft, 0.0), UsageError);
  EXPECT_THROW(min_sampling_size(Matrix::Ones(5, 3), Scheme::gft, -1.0), UsageError);
  EXPECT_THROW(min_sampling_size(Matrix::Ones(5, 3), Scheme::laplacian), UsageError);
}

TEST(MinSize, LaplacianOnABandlimitedSignal) {
  const auto spec = laplacian_spectrum(normalized_laplacian(cycle(16)));
  std::mt19937_64 rng(17);
  const Matrix x = spec.eigenvectors.leftCols(3) * oracle::gaussian(3, 8, rng);
  EvalContext ctx;
  ctx.laplacian = &spec;
  const auto m = min_sampling_size(x, Scheme::laplacian, kRecoveryThreshold, ctx);
  EXPECT_EQ(m.r_min, 3);
  EXPECT_EQ(m.s_min, 3);
}

TEST(MinSize, PcaReachesTheThresholdOnARankOneSignal) {
  std::mt19937_64 rng(19);
  Matrix x = (oracle::gaussian(20, 1, rng).cwiseAbs().array() + 0.5).matrix() * oracle::gaussian(1, 6, rng);
  EvalContext ctx;
  const auto m = min_sampling_size(x, Scheme::cs_pca, kRecoveryThreshold, ctx);
  EXPECT_FALSE(m.unreachable);
  EXPECT_LT(m.rmse_at_min, kRecoveryThreshold);
  EXPECT_LE(m.s_min, 20);
}

TEST(Compare, RowsFollowTheBankAndSchemesAreSorted) {
  std::mt19937_64 rng(23);
  std::vector<NamedSignal> bank;
  for (Index r : {2, 4, 2}) bank.push_back({"s" + std::to_string(r) + "_" + std::to_string(bank.size()),
                                            oracle::low_rank(12, 14, r, rng)});
  bank.push_back({"zero", Matrix::Zero(12, 14)});
  EvalContext ctx;
  ctx.jobs = 2;
  const auto t = compare_schemes(bank, {Scheme::cs_dct, Scheme::gft, Scheme::gft}, kRecoveryThreshold, ctx);
  EXPECT_EQ(t.schemes, (std::vector<Scheme>{Scheme::gft, Scheme::cs_dct}));
  ASSERT_EQ(t.rows.size(), 4u);
  for (std::size_t i = 0; i < bank.size(); ++i) EXPECT_EQ(t.rows[i].scenario_id, bank[i].id);
  EXPECT_EQ(t.rows[1].rank, 4);
  EXPECT_EQ(t.rows[1].outcomes.at(Scheme::gft).s_min, 4);
  EXPECT_EQ(t.rows[1].r_min_gft, Index{4});
  EXPECT_EQ(t.rows[3].rank, 0);
  for (const auto& row : t.rows)
    EXPECT_LE(row.outcomes.at(Scheme::gft).s_min, row.outcomes.at(Scheme::cs_dct).s_min);

  const auto means = mean_by_rank(t);
  ASSERT_EQ(means.size(), 3u);
  EXPECT_EQ(means[1].rank, 2);
  EXPECT_EQ(means[1].count, 2);
  EXPECT_DOUBLE_EQ(means[1].mean_s_min.at(Scheme::gft), 2.0);
  EXPECT_EQ(t, compare_schemes(bank, {Scheme::gft, Scheme::cs_dct}));
}

TEST(Compare, FailuresAreRecordedNotThrown) {
  std::vector<NamedSignal> bank{{"a", Matrix::Identity(4, 4)}};
  const auto t = compare_schemes(bank, {Scheme::laplacian});
  EXPECT_FALSE(t.rows[0].outcomes.at(Scheme::laplacian).ok());
  EXPECT_THROW(compare_schemes({}, {Scheme::gft}), UsageError);
  EXPECT_THROW(compare_schemes(bank, {}), UsageError);
}

TEST(Compare, SampleBound) {
  EXPECT_EQ(cs_sample_bound(102, 100, 57), 83);  // 145·57/100 = 82.65
  EXPECT_EQ(cs_sample_bound(10, 10, 5), 8);      // 15·5/10 = 7.5
  EXPECT_EQ(cs_sample_bound(10, 5, 5), 10);      // exact, no rounding up
}

TEST(Profile, GftMassSitsInTheFirstRankFrequencies) {
  std::mt19937_64 rng(29);
  const Matrix x = oracle::low_rank(18, 22, 5, rng);
  const auto op = build_gft(x);
  const auto pca = build_pca_basis(x);
  const auto prof = frequency_profile(x, &op, nullptr, &pca);
  EXPECT_EQ(prof.rank, 5);
  ASSERT_TRUE(prof.gft && prof.pca);
  EXPECT_FALSE(prof.laplacian);
  EXPECT_NEAR(mass_within(*prof.gft, 5), 1.0, 1e-10);
  EXPECT_NEAR(mass_within(*prof.pca, 5), 1.0, 1e-10);
  EXPECT_LT(mass_within(*prof.gft, 4), 1.0);
  const Vector brute = (op.basis().transpose() * x).cwiseAbs().rowwise().sum();
  EXPECT_LE((*prof.gft - brute).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(mass_within(Vector::Zero(3), 1), 1.0);
}
