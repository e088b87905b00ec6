#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <ensimp/ensimp.hpp>

#include "../oracle/brute_force.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(ENSIMP_TEST_DATA_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("ensimp_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

/// n sorted quantile vectors at `levels` with random location and spread.
inline std::vector<std::vector<double>> random_quantiles(std::mt19937_64& rng, std::size_t n,
                                                        const ensimp::QuantileLevels& levels) {
    std::normal_distribution<double> loc(0.0, 3.0);
    std::uniform_real_distribution<double> sd(0.2, 4.0);
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = loc(rng);
        const double s = sd(rng);
        std::vector<double> v;
        for (double tau : levels.values()) v.push_back(m + s * ensimp::normal_quantile(tau));
        out.push_back(v);
    }
    return out;
}

inline std::string model_name(std::size_t j) {
    std::string s = "m";
    if (j < 10) s += '0';
    return s + std::to_string(j);
}

inline ensimp::TaskPool<ensimp::QuantileForecast> quantile_task(const std::vector<std::vector<double>>& values,
                                                                const ensimp::QuantileLevels& levels, double y) {
    std::vector<ensimp::QuantilePool::Member> members;
    for (std::size_t j = 0; j < values.size(); ++j) {
        members.push_back({model_name(j), ensimp::QuantileForecast(levels, values[j])});
    }
    return {ensimp::TaskKey{}, ensimp::QuantilePool(std::move(members)), ensimp::Observation{y}};
}

inline ensimp::TaskPool<ensimp::PointForecast> point_task(const std::vector<double>& values, double y) {
    std::vector<ensimp::PointPool::Member> members;
    for (std::size_t j = 0; j < values.size(); ++j) {
        members.push_back({model_name(j), ensimp::PointForecast{values[j]}});
    }
    return {ensimp::TaskKey{}, ensimp::PointPool(std::move(members)), ensimp::Observation{y}};
}

inline oracle::Pool oracle_pool(const std::vector<std::vector<double>>& values, const ensimp::QuantileLevels& levels,
                                double y, bool squared_error = false) {
    oracle::Pool p;
    p.levels.assign(levels.values().begin(), levels.values().end());
    p.values = values;
    p.truth = y;
    p.squared_error = squared_error;
    return p;
}

inline oracle::Pool oracle_point_pool(const std::vector<double>& values, double y) {
    oracle::Pool p;
    p.levels = {0.5};
    for (double v : values) p.values.push_back({v});
    p.truth = y;
    p.squared_error = true;
    return p;
}

} // namespace testing_support
