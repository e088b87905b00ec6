#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <ensimp/ensembling.hpp>
#include <ensimp/normal.hpp>
#include <ensimp/simulation.hpp>

using namespace ensimp;

namespace {

QuantilePool pool_of(const std::vector<std::pair<std::string, std::vector<double>>>& members,
                     const QuantileLevels& levels) {
    std::vector<QuantilePool::Member> m;
    for (const auto& [id, v] : members) m.push_back({id, QuantileForecast(levels, v)});
    return QuantilePool(std::move(m));
}

std::vector<double> values(const QuantileForecast& f) { return {f.values().begin(), f.values().end()}; }

} // namespace

TEST(MeanQuantileEnsemble, AveragesLevelByLevel) {
    const QuantileLevels levels({0.25, 0.5, 0.75});
    const auto pool = pool_of({{"a", {1, 2, 3}}, {"b", {3, 4, 5}}}, levels);
    const std::vector<std::string> both{"a", "b"};
    EXPECT_EQ(values(mean_quantile_ensemble(pool, both)), (std::vector<double>{2, 3, 4}));
    const std::vector<std::string> one{"b"};
    EXPECT_EQ(values(mean_quantile_ensemble(pool, one)), (std::vector<double>{3, 4, 5}));
}

TEST(MeanQuantileEnsemble, EmptySubsetHasNoPrediction) {
    const QuantileLevels levels({0.5});
    const auto pool = pool_of({{"a", {1}}}, levels);
    EXPECT_THROW(mean_quantile_ensemble(pool, std::vector<std::string>{}), NoPredictionError);
    EXPECT_THROW(mean_quantile_ensemble(pool, std::vector<std::string>{"zz"}), ValidationError);
}

TEST(ForecastPool, RejectsMismatchedLevelsDuplicatesAndEmpty) {
    std::vector<QuantilePool::Member> m{{"a", QuantileForecast(QuantileLevels({0.5}), {1})},
                                        {"b", QuantileForecast(QuantileLevels({0.4}), {1})}};
    EXPECT_THROW(QuantilePool(std::move(m)), ValidationError);
    std::vector<PointPool::Member> dup{{"a", {1}}, {"a", {2}}};
    EXPECT_THROW(PointPool(std::move(dup)), ValidationError);
    EXPECT_THROW(PointPool(std::vector<PointPool::Member>{}), ValidationError);
}

TEST(MeanPointEnsemble, Examples) {
    const PointPool two({{"a", {0}}, {"b", {2}}});
    EXPECT_EQ(mean_point_ensemble(two, std::vector<std::string>{"a", "b"}).value, 1.0);
    const PointPool three({{"f1", {-1}}, {"f2", {-0.5}}, {"f3", {1.5}}});
    EXPECT_EQ(mean_point_ensemble(three, std::vector<std::string>{"f1", "f2", "f3"}).value, 0.0);
    EXPECT_EQ(mean_point_ensemble(three, std::vector<std::string>{"f3"}).value, 1.5);
    EXPECT_THROW(mean_point_ensemble(three, std::vector<std::string>{}), NoPredictionError);
}

TEST(MeanQuantileEnsemble, MixtureOfCentredNormalsIsNormalWithMeanSd) {
    const auto& levels = QuantileLevels::canonical();
    const auto pool = pool_of({{"1", values(normal_quantile_forecast({0, 0.5}, levels))},
                               {"2", values(normal_quantile_forecast({0, 0.7}, levels))},
                               {"3", values(normal_quantile_forecast({0, 1.8}, levels))}},
                              levels);
    const auto ens = mean_quantile_ensemble(pool, std::vector<std::string>{"1", "2", "3"});
    for (std::size_t k = 0; k < levels.size(); ++k) {
        EXPECT_NEAR(ens[k], normal_quantile(levels[k]), 1e-8) << "level " << levels[k];
    }
}

TEST(MeanQuantileEnsemble, LocationScaleClosure) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> mu(0, 5);
    std::uniform_real_distribution<double> sd(0.1, 5);
    const auto& levels = QuantileLevels::canonical();
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + t % 7;
        std::vector<QuantilePool::Member> m;
        double mean_mu = 0;
        double mean_sd = 0;
        std::vector<std::string> ids;
        for (std::size_t j = 0; j < n; ++j) {
            const NormalSpec s{mu(rng), sd(rng)};
            mean_mu += s.mean / static_cast<double>(n);
            mean_sd += s.sd / static_cast<double>(n);
            ids.push_back("m" + std::to_string(j));
            m.push_back({ids.back(), normal_quantile_forecast(s, levels)});
        }
        const auto ens = mean_quantile_ensemble(QuantilePool(std::move(m)), ids);
        for (std::size_t k = 0; k < levels.size(); ++k) {
            EXPECT_NEAR(ens[k], mean_mu + mean_sd * normal_quantile(levels[k]), 1e-8);
        }
    }
}

TEST(MeanQuantileEnsemble, IdempotentOnIdenticalMembers) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1e4, 1e4);
    const QuantileLevels levels({0.1, 0.5, 0.9});
    for (std::size_t n : {2u, 3u, 7u, 33u, 40u}) {
        for (int t = 0; t < 200; ++t) {
            std::vector<double> v{u(rng), u(rng), u(rng)};
            std::sort(v.begin(), v.end());
            std::vector<QuantilePool::Member> m;
            std::vector<std::string> ids;
            for (std::size_t j = 0; j < n; ++j) {
                ids.push_back("m" + std::to_string(j));
                m.push_back({ids.back(), QuantileForecast(levels, v)});
            }
            EXPECT_EQ(values(mean_quantile_ensemble(QuantilePool(std::move(m)), ids)), v);
        }
    }
}

TEST(MeanQuantileEnsemble, IndependentOfMemberOrder) {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> d(0, 3);
    const QuantileLevels levels({0.25, 0.75});
    for (int t = 0; t < 100; ++t) {
        std::vector<QuantilePool::Member> m;
        std::vector<std::string> ids;
        for (int j = 0; j < 6; ++j) {
            std::vector<double> v{d(rng), d(rng)};
            std::sort(v.begin(), v.end());
            ids.push_back("m" + std::to_string(j));
            m.push_back({ids.back(), QuantileForecast(levels, v)});
        }
        auto shuffled = m;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto ids_shuffled = ids;
        std::shuffle(ids_shuffled.begin(), ids_shuffled.end(), rng);
        EXPECT_EQ(values(mean_quantile_ensemble(QuantilePool(m), ids)),
                  values(mean_quantile_ensemble(QuantilePool(shuffled), ids_shuffled)));
    }
}

TEST(MeanCombiner, CompensatedSumAboveThreshold) {
    // 1e16 followed by many ones: plain summation of the deviations would lose them.
    std::vector<double> xs(100, 1.0);
    xs[0] = 0.0;
    xs[1] = 1e16;
    std::vector<double> neg(100, 1.0);
    const double m = MeanCombiner{}(xs);
    EXPECT_DOUBLE_EQ(m, (1e16 + 98.0) / 100.0);
    EXPECT_EQ(MeanCombiner{}(neg), 1.0);
}
