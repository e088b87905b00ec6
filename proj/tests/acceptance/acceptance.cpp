// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Run with a criterion number to run only
// that one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <ensimp/cli.hpp>
#include <ensimp/ensimp.hpp>

#include "../oracle/brute_force.hpp"
#include "../unit/support.hpp"

using namespace ensimp;
using testing_support::data_path;
using testing_support::slurp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome with_time_limit(Outcome o, double seconds, double limit) {
    if (seconds >= limit) {
        o.pass = false;
        o.detail += "; exceeded " + fmt("%.0f", limit) + " s limit";
    }
    return o;
}

Outcome decomposition_identity() {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size(2, 8);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> e(size(rng));
        for (auto& x : e) x = normal(rng);
        const ErrorVector ev(e);
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double a = phi_direct(ev, i);
            worst = std::max(worst, std::abs(a - phi_decomposed(ev, i)) / std::max(1.0, std::abs(a)));
        }
    }
    return {worst < 1e-9, "max relative residual " + fmt("%.3g", worst) + " over 1000 instances"};
}

Outcome ambiguity_connection() {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size(2, 8);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = size(rng);
        std::vector<double> e(n);
        std::vector<double> w(n);
        double total = 0.0;
        for (auto& x : e) x = normal(rng);
        for (auto& x : w) total += (x = unit(rng) + 1e-3);
        for (auto& x : w) x /= total;
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        worst = std::max(worst, std::abs(ambiguity_check(ErrorVector(e), w, i)));
    }
    return {worst < 1e-9, "max |residual| " + fmt("%.3g", worst) + " over 1000 weighted instances"};
}

Outcome weight_normalization() {
    double worst = 0.0;
    bool exact = true;
    for (std::size_t n = 2; n <= 20; ++n) {
        Rational sum(0);
        double approx = 0.0;
        for (std::size_t s = 1; s < n; ++s) {
            const auto count = binomial(static_cast<unsigned>(n - 1), static_cast<unsigned>(s));
            sum += shapley_weight_exact(n, s) * Rational(static_cast<Rational::Int>(count));
            approx += static_cast<double>(count) * shapley_weight(n, s);
        }
        exact = exact && sum == Rational(1);
        worst = std::max(worst, std::abs(approx - 1.0));
    }
    return {exact && worst <= 1e-12,
            std::string("exact sums ") + (exact ? "all 1" : "NOT all 1") + ", max float deviation " +
                fmt("%.3g", worst) + " for n in [2, 20]"};
}

Outcome brute_force_equivalence() {
    std::mt19937_64 rng(44);
    std::normal_distribution<double> normal(0.0, 2.0);
    const QuantileLevels& levels = QuantileLevels::canonical();
    double worst = 0.0;
    bool n2_exact = true;
    for (std::size_t n = 2; n <= 6; ++n) {
        for (int t = 0; t < 25; ++t) {
            const auto q = testing_support::random_quantiles(rng, n, levels);
            std::vector<double> pts(n);
            for (auto& x : pts) x = normal(rng);
            const double y = normal(rng);
            const auto qtp = testing_support::quantile_task(q, levels, y);
            const auto ptp = testing_support::point_task(pts, y);
            const auto qo = testing_support::oracle_pool(q, levels, y);
            const auto po = testing_support::oracle_point_pool(pts, y);
            const auto ql = lasomo_all(qtp, Metric::wis);
            const auto pl = lasomo_all(ptp, Metric::spe);
            for (std::size_t i = 0; i < n; ++i) {
                worst = std::max(worst, std::abs(ql[i] - oracle::lasomo(qo, i)));
                worst = std::max(worst, std::abs(pl[i] - oracle::lasomo(po, i)));
            }
            if (n == 2) {
                n2_exact = n2_exact && ql == lomo_all(qtp, Metric::wis) && pl == lomo_all(ptp, Metric::spe);
            }
        }
    }
    return {worst < 1e-10 && n2_exact, "max |bitmask - enumeration| " + fmt("%.3g", worst) +
                                           " for n in [2, 6]; n=2 LASOMO == LOMO " +
                                           (n2_exact ? "exactly" : "NOT exactly")};
}

Outcome subset_size_identity() {
    std::mt19937_64 rng(45);
    std::normal_distribution<double> normal(0.0, 2.0);
    const QuantileLevels& levels = QuantileLevels::canonical();
    double worst = 0.0;
    for (std::size_t n = 3; n <= 8; ++n) {
        for (int t = 0; t < 10; ++t) {
            std::vector<double> pts(n);
            for (auto& x : pts) x = normal(rng);
            const auto ptp = testing_support::point_task(pts, normal(rng));
            const auto qtp = testing_support::quantile_task(testing_support::random_quantiles(rng, n, levels), levels,
                                                            normal(rng));
            const auto pl = lasomo_all(ptp, Metric::spe);
            const auto ql = lasomo_all(qtp, Metric::wis);
            for (std::size_t i = 0; i < n; ++i) {
                const auto id = testing_support::model_name(i);
                worst = std::max(worst, std::abs(mean_over_subset_sizes(importance_by_subset_size(ptp, Metric::spe, id)) - pl[i]));
                worst = std::max(worst, std::abs(mean_over_subset_sizes(importance_by_subset_size(qtp, Metric::wis, id)) - ql[i]));
            }
        }
    }
    return {worst < 1e-10, "max |mean over sizes - LASOMO| " + fmt("%.3g", worst) + " for n in [3, 8]"};
}

std::size_t argmax_at(const SweepResult& r, std::size_t g) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < r.forecasters(); ++f) {
        if (r.mean_importance[f][g] > r.mean_importance[best][g]) best = f;
    }
    return best;
}

Outcome setting_a_point() {
    const auto spec = SimulationSpec::defaults(Scenario::a_point);
    const SweepResult r = run_sweep(spec, default_workers());
    double worst_z = 0.0;
    bool within = true;
    double analytic_arg = 0.0;
    double analytic_best = -INFINITY;
    double sim_arg = 0.0;
    double sim_best = -INFINITY;
    for (std::size_t g = 0; g < r.grid_values.size(); ++g) {
        const double b = r.grid_values[g];
        const GaussianErrorModel model{{-1.0, -0.5, b}, 1.0};
        for (std::size_t f = 0; f < 3; ++f) {
            const double dev = std::abs(r.mean_importance[f][g] - expected_phi(model, f));
            const double se = r.std_error[f][g];
            within = within && dev < 4.0 * se + 1e-12;
            if (se > 0) worst_z = std::max(worst_z, dev / se);
        }
        const double a = expected_phi(model, 2);
        if (a > analytic_best) {
            analytic_best = a;
            analytic_arg = b;
        }
        if (r.mean_importance[2][g] > sim_best) {
            sim_best = r.mean_importance[2][g];
            sim_arg = b;
        }
    }
    const bool arg_ok = analytic_arg == 1.5 && std::abs(sim_arg - 1.5) <= 0.05 + 1e-9;
    return {within && arg_ok, "max deviation " + fmt("%.2f", worst_z) + " SE; analytic argmax b=" +
                                  fmt("%g", analytic_arg) + ", simulated argmax b=" + fmt("%g", sim_arg)};
}

Outcome setting_a_prob() {
    const auto spec = SimulationSpec::defaults(Scenario::a_prob);
    const SweepResult r = run_sweep(spec, default_workers());
    std::vector<std::string> large_bias_misses;
    std::vector<std::string> small_bias_misses;
    for (std::size_t g = 0; g < r.grid_values.size(); ++g) {
        const double b = r.grid_values[g];
        const std::size_t top = argmax_at(r, g);
        if (b >= 2.0 && top != 0) large_bias_misses.push_back(fmt("%g", b));
        if (b > 0.0 && b <= 1.0 && top != 2) small_bias_misses.push_back(fmt("%g", b));
    }
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
        return s;
    };
    std::string detail = large_bias_misses.empty()
                             ? "forecaster 1 leads at every b >= 2"
                             : "forecaster 1 does not lead at b = " + join(large_bias_misses);
    detail += small_bias_misses.empty() ? "; forecaster 3 leads for b in (0, 1]"
                                        : "; forecaster 3 does not lead at b = " + join(small_bias_misses);
    return {large_bias_misses.empty() && small_bias_misses.empty(), detail};
}

Outcome setting_b() {
    const auto spec = SimulationSpec::defaults(Scenario::b_dispersion);
    const SweepResult r = run_sweep(spec, default_workers());
    std::vector<double> misses;
    for (std::size_t g = 0; g < r.grid_values.size(); ++g) {
        const double s = r.grid_values[g];
        const std::size_t top = argmax_at(r, g);
        if (s >= 0.75 - 1e-9 && s <= 2.25 + 1e-9 && top != 2) misses.push_back(s);
        if (s >= 2.55 - 1e-9 && top != 0) misses.push_back(s);
    }
    double first3 = NAN;
    double first1_after = NAN;
    for (std::size_t g = 0; g < r.grid_values.size(); ++g) {
        if (std::isnan(first3) && argmax_at(r, g) == 2) first3 = r.grid_values[g];
        if (!std::isnan(first3) && std::isnan(first1_after) && argmax_at(r, g) == 0) first1_after = r.grid_values[g];
    }
    std::string detail = "forecaster 3 first leads at s=" + fmt("%g", first3) + ", forecaster 1 takes over at s=" +
                         fmt("%g", first1_after);
    for (double s : misses) detail += "; wrong leader at s=" + fmt("%g", s);
    return {misses.empty(), detail};
}

Outcome normal_lemma() {
    const auto& levels = QuantileLevels::canonical();
    std::vector<QuantilePool::Member> m{{"1", normal_quantile_forecast({0, 0.5}, levels)},
                                        {"2", normal_quantile_forecast({0, 0.7}, levels)},
                                        {"3", normal_quantile_forecast({0, 1.8}, levels)}};
    const auto ens = mean_quantile_ensemble(QuantilePool(std::move(m)), std::vector<std::string>{"1", "2", "3"});
    double worst = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) worst = std::max(worst, std::abs(ens[k] - normal_quantile(levels[k])));
    const double z = normal_quantile(0.975);
    const bool z_ok = std::abs(z - 1.959963985) <= 1e-8;
    return {worst <= 1e-8 && z_ok,
            "max level deviation " + fmt("%.3g", worst) + "; normal_quantile(0.975) = " + fmt("%.12f", z)};
}

Outcome wis_properties() {
    std::mt19937_64 rng(46);
    std::normal_distribution<double> normal(0.0, 10.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    const auto levels = QuantileLevels::canonical().values();
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); };
    double pin = 0.0;
    double shift = 0.0;
    double scaled = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const double q = normal(rng);
        const double y = normal(rng);
        pin = std::max(pin, rel(wis(std::vector<double>{0.5}, std::vector<double>{q}, y), std::abs(y - q)));

        std::vector<double> v(levels.size());
        for (auto& x : v) x = normal(rng);
        std::sort(v.begin(), v.end());
        const double c = normal(rng);
        const double a = scale(rng);
        const double base = wis(levels, v, y);
        std::vector<double> vs = v;
        std::vector<double> va = v;
        for (auto& x : vs) x += c;
        for (auto& x : va) x *= a;
        shift = std::max(shift, rel(wis(levels, vs, y + c), base));
        scaled = std::max(scaled, rel(wis(levels, va, a * y), a * base));
    }
    const bool ok = pin <= 1e-12 && shift <= 1e-12 && scaled <= 1e-12;
    return {ok, "max relative error over 10^4 inputs: pinball " + fmt("%.3g", pin) + ", translation " +
                    fmt("%.3g", shift) + ", scaling " + fmt("%.3g", scaled)};
}

Outcome fixture_pipeline() {
    testing_support::TempDir dir("acceptance");
    std::vector<std::string> mismatches;
    for (NaPolicy na : {NaPolicy::drop, NaPolicy::worst, NaPolicy::mean}) {
        cli::CliConfig cfg;
        cfg.subcommand = "importance";
        cfg.forecasts = data_path("fixture_forecasts.csv");
        cfg.truth = data_path("fixture_truth.csv");
        cfg.na = na;
        cfg.output = dir.file("summary.csv");
        cfg.per_task_output = dir.file("per_task.csv");
        std::ostringstream err;
        if (cli::run(cfg, err) != cli::kExitOk) return {false, "importance failed: " + err.str()};
        const std::string name(to_string(na));
        if (slurp(cfg.output) != slurp(data_path("oracle/importance_" + name + ".csv"))) mismatches.push_back(name);
        if (slurp(cfg.per_task_output) != slurp(data_path("oracle/importance_per_task.csv"))) {
            mismatches.push_back(name + " per-task");
        }
    }
    std::string detail = "3 models x 8 tasks x 23 quantiles, 2 gaps; ";
    if (mismatches.empty()) return {true, detail + "drop/worst/mean tables identical to recorded oracle"};
    for (const auto& m : mismatches) detail += "differs: " + m + " ";
    return {false, detail};
}

Outcome performance() {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> normal(0.0, 2.0);
    const auto& levels = QuantileLevels::canonical();
    std::vector<TaskPool<QuantileForecast>> tasks;
    for (int t = 0; t < 1000; ++t) {
        auto tp = testing_support::quantile_task(testing_support::random_quantiles(rng, 10, levels), levels, normal(rng));
        tp.task.location = "L" + std::to_string(t);
        tasks.push_back(std::move(tp));
    }
    ImportanceOptions opt;
    opt.lomo = false;
    opt.workers = 4;
    const auto start = std::chrono::steady_clock::now();
    const auto four = analyze_importance(std::span<const TaskPool<QuantileForecast>>(tasks), opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    opt.workers = 1;
    const auto one = analyze_importance(std::span<const TaskPool<QuantileForecast>>(tasks), opt);
    const bool same = one.lasomo->per_task == four.lasomo->per_task && one.lasomo->overall == four.lasomo->overall;
    return {secs < 10.0 && same, "n=10, 1000 tasks, 23 levels on 4 workers: " + fmt("%.2f", secs) + " s; " +
                                     (same ? "identical" : "DIFFERENT") + " with 1 worker"};
}

Outcome table_shape_and_sign() {
    std::vector<std::string> violations;
    bool shape = true;
    for (const std::string na : {"drop", "worst", "mean"}) {
        const auto rows = read_results(data_path("oracle/importance_" + na + ".csv"), OutputFormat::csv);
        std::map<std::string, std::map<std::string, std::optional<double>>> by_model;
        for (const auto& r : rows) by_model[r.model][r.metric] = r.value;
        for (const auto& [model, metrics] : by_model) {
            for (const char* col : {"neg_wis", "phi_lasomo", "phi_lomo", "rank_neg_wis", "rank_phi_lasomo",
                                    "rank_phi_lomo"}) {
                shape = shape && metrics.count(col) && metrics.at(col).has_value();
            }
            if (!shape) continue;
            const double lasomo = *metrics.at("phi_lasomo");
            const double lomo = *metrics.at("phi_lomo");
            if (!(lomo <= lasomo)) {
                violations.push_back(model + " (" + na + ": lomo " + fmt("%.4g", lomo) + " > lasomo " +
                                     fmt("%.4g", lasomo) + ")");
            }
        }
    }
    std::string detail = std::string("summary columns ") + (shape ? "present" : "MISSING") +
                         " (-WIS, phi_lasomo, phi_lomo, counts, ranks); ";
    if (violations.empty()) {
        detail += "phi_lomo <= phi_lasomo for every model";
    } else {
        detail += "phi_lomo > phi_lasomo for";
        for (const auto& v : violations) detail += " " + v;
    }
    return {shape && violations.empty(), detail};
}

struct Criterion {
    int number;
    const char* title;
    std::function<Outcome()> run;
    double limit_seconds;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "decomposition identity", decomposition_identity, 1.0},
        {2, "ambiguity connection", ambiguity_connection, 1.0},
        {3, "shapley weight normalization", weight_normalization, 0.0},
        {4, "brute-force LASOMO equivalence", brute_force_equivalence, 0.0},
        {5, "subset-size identity", subset_size_identity, 0.0},
        {6, "setting A point", setting_a_point, 30.0},
        {7, "setting A probabilistic", setting_a_prob, 60.0},
        {8, "setting B dispersion", setting_b, 60.0},
        {9, "ensemble-of-normals lemma", normal_lemma, 0.0},
        {10, "WIS properties", wis_properties, 0.0},
        {11, "fixture pipeline vs oracle", fixture_pipeline, 0.0},
        {12, "performance", performance, 0.0},
        {13, "table shape and lomo/lasomo sign", table_shape_and_sign, 0.0},
    };
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failed = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.number != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_seconds > 0) o = with_time_limit(o, secs, c.limit_seconds);
        if (!o.pass) ++failed;
        std::printf("criterion %2d %s  %s: %s (%.2f s)\n", c.number, o.pass ? "PASS" : "FAIL", c.title,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
