#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pcdrift/adequacy.hpp"
#include "support.hpp"

using namespace pcdrift;
namespace ts = testing_support;

namespace {

oracle::Mat one_factor_data(std::mt19937_64& rng, std::size_t t, const std::vector<double>& loadings) {
    std::normal_distribution<double> g;
    oracle::Mat x = oracle::zeros(t, loadings.size());
    for (auto& row : x) {
        const double f = g(rng);
        for (std::size_t i = 0; i < loadings.size(); ++i)
            row[i] = loadings[i] * f + std::sqrt(1.0 - loadings[i] * loadings[i]) * g(rng);
    }
    return x;
}

CorrelationMatrix sample_correlation(const oracle::Mat& x) {
    auto r = oracle::pearson(x);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i][i] = 1.0;
        for (std::size_t j = 0; j < i; ++j) r[i][j] = r[j][i];
    }
    return CorrelationMatrix(ts::from_mat(r));
}

double oracle_min_kmo(const oracle::Mat& x, std::size_t k) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + k <= x.size(); ++s) m = std::min(m, oracle::kmo_direct(oracle::pearson(ts::window_rows(x, s, k))));
    return m;
}

}  // namespace

TEST(PartialCorrelations, IdentityIsZero) {
    const auto q = partial_correlations(CorrelationMatrix::identity(4));
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(q(j, k), j == k ? 1.0 : 0.0);
    EXPECT_THROW(kmo(CorrelationMatrix::identity(4)), NotEstimableError);
}

TEST(PartialCorrelations, MatchRegressionResiduals) {
    std::mt19937_64 rng(101);
    const auto x = oracle::random_data(rng, 80, 5);
    const auto q = partial_correlations(sample_correlation(x));
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = j + 1; k < 5; ++k) {
            EXPECT_NEAR(q(j, k), oracle::partial_by_regression(x, j, k), 1e-10);
            EXPECT_EQ(q(j, k), q(k, j));
        }
}

TEST(Kmo, SingularLinearCombinationNotEstimable) {
    std::mt19937_64 rng(103);
    auto x = oracle::random_data(rng, 60, 3);
    for (auto& row : x) row[2] = row[0] + row[1];
    const auto r = sample_correlation(x);
    EXPECT_THROW(kmo(r), NotEstimableError);
    try {
        kmo(r);
    } catch (const NotEstimableError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("KMO not estimable: ", 0), 0u);
    }
}

TEST(Kmo, WindowShorterThanVariablesNotEstimable) {
    std::mt19937_64 rng(107);
    const auto x = oracle::random_data(rng, 10, 20);
    EXPECT_THROW(kmo(sample_correlation(x)), NotEstimableError);
}

TEST(Kmo, OneFactorMatchesDirectOracle) {
    std::mt19937_64 rng(109);
    const auto x = one_factor_data(rng, 500, std::vector<double>(6, 0.8));
    const auto r = sample_correlation(x);
    const auto rep = kmo(r);
    EXPECT_NEAR(rep.kmo, oracle::kmo_direct(ts::to_mat(r.matrix())), 1e-10);
    EXPECT_GT(rep.kmo, 0.8);
    EXPECT_LE(rep.kmo, 1.0);
}

TEST(Kmo, RangeAndPermutationInvariance) {
    std::mt19937_64 rng(113);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 3 + rng() % 8;
        const auto r = ts::random_correlation(rng, n);
        double value = 0.0;
        try {
            value = kmo(r).kmo;
        } catch (const NotEstimableError&) {
            continue;
        }
        EXPECT_GE(value, 0.0);
        EXPECT_LE(value, 1.0);
        EXPECT_NEAR(value, oracle::kmo_direct(ts::to_mat(r.matrix())), 1e-9);

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix p(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) p(i, j) = r(perm[i], perm[j]);
        EXPECT_NEAR(kmo(CorrelationMatrix(p)).kmo, value, 1e-12);
    }
}

TEST(Kmo, NearlyCollinearGroupsApproachOne) {
    // Two tight groups: partial correlations across groups vanish while raw
    // correlations stay large.
    std::mt19937_64 rng(127);
    std::normal_distribution<double> g;
    oracle::Mat x = oracle::zeros(400, 4);
    for (auto& row : x) {
        const double a = g(rng), b = g(rng);
        row[0] = a + 1e-3 * g(rng);
        row[1] = a + 1e-3 * g(rng);
        row[2] = b + 1e-3 * g(rng);
        row[3] = b + 1e-3 * g(rng);
    }
    const auto rep = kmo(sample_correlation(x));
    EXPECT_NEAR(rep.kmo, oracle::kmo_direct(oracle::pearson(x)), 1e-8);
}

TEST(SelectWindow, ShortWindowsNeverSelected) {
    std::mt19937_64 rng(131);
    const auto s = ts::series_from(oracle::random_data(rng, 12, 20));
    const auto res = select_window(s, {10});
    EXPECT_FALSE(res.chosen_window.has_value());
    ASSERT_EQ(res.candidates.size(), 1u);
    EXPECT_EQ(res.candidates[0].windows_scanned, 3u);
    EXPECT_EQ(res.candidates[0].not_estimable, 3u);
    EXPECT_FALSE(res.candidates[0].estimable());
}

TEST(SelectWindow, PicksSmallestPassingCandidate) {
    std::mt19937_64 rng(137);
    const auto x = one_factor_data(rng, 260, {0.35, 0.3, 0.4, 0.3, 0.35, 0.3});
    const double m50 = oracle_min_kmo(x, 50);
    const double m100 = oracle_min_kmo(x, 100);
    ASSERT_LT(m50, m100);
    const double threshold = 0.5 * (m50 + m100);

    const auto res = select_window(ts::series_from(x), {50, 100, 150}, threshold);
    ASSERT_TRUE(res.chosen_window.has_value());
    EXPECT_EQ(*res.chosen_window, 100u);
    ASSERT_EQ(res.candidates.size(), 3u);  // every candidate is still reported
    EXPECT_NEAR(*res.candidates[0].min_kmo, m50, 1e-10);
    EXPECT_NEAR(*res.candidates[1].min_kmo, m100, 1e-10);
    EXPECT_NEAR(*res.candidates[2].min_kmo, oracle_min_kmo(x, 150), 1e-10);
    EXPECT_EQ(res.candidates[0].windows_scanned, 211u);
}

TEST(SelectWindow, CandidateValidation) {
    std::mt19937_64 rng(139);
    const auto s = ts::series_from(oracle::random_data(rng, 40, 3));
    EXPECT_THROW(select_window(s, {}), ConfigError);
    EXPECT_THROW(select_window(s, {20, 10}), ConfigError);
    EXPECT_THROW(select_window(s, {10, 10}), ConfigError);
}

TEST(SelectWindow, ThresholdIsInclusive) {
    std::mt19937_64 rng(149);
    const auto x = one_factor_data(rng, 120, {0.7, 0.6, 0.8, 0.5});
    const auto s = ts::series_from(x);
    const double m = *scan_window(s, 60).min_kmo;
    EXPECT_EQ(select_window(s, {60}, m).chosen_window, std::optional<std::size_t>(60));
    EXPECT_FALSE(select_window(s, {60}, std::nextafter(m, 2.0)).chosen_window.has_value());
}
