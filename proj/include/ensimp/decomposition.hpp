#pragma once

// Closed-form LOMO importance for point forecasts under -SPE.
//
// With errors e_j = y - yhat_j, the LOMO importance of model i is
//   phi_i = -(mean of all e)^2 + (mean of e without i)^2
// which expands into individual-error and error-product terms. Taking
// expectations of that expansion gives the expected importance in terms of
// E(e_j^2) and E(e_j e_k).

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "scoring.hpp"

namespace ensimp {

/// Prediction errors e_j = y - yhat_j, one per model.
class ErrorVector {
public:
    explicit ErrorVector(std::vector<double> errors) : e_(std::move(errors)) {
        if (e_.size() < 2) {
            throw DomainError("importance decomposition needs at least two models");
        }
        for (double v : e_) detail::require_finite(v, "error");
    }

    static ErrorVector from_forecasts(std::span<const double> forecasts, double y) {
        std::vector<double> e;
        e.reserve(forecasts.size());
        for (double f : forecasts) e.push_back(y - f);
        return ErrorVector(std::move(e));
    }

    std::size_t size() const noexcept { return e_.size(); }
    double operator[](std::size_t j) const { return e_[j]; }
    std::span<const double> values() const noexcept { return e_; }

private:
    std::vector<double> e_;
};

namespace detail {

inline void check_index(std::size_t i, std::size_t n) {
    if (i >= n) {
        throw DomainError("model index " + std::to_string(i) + " out of range for " +
                          std::to_string(n) + " models");
    }
}

} // namespace detail

/// phi_i = -(ebar)^2 + (ebar_{-i})^2, evaluated directly.
inline double phi_direct(const ErrorVector& e, std::size_t i) {
    const std::size_t n = e.size();
    detail::check_index(i, n);
    double all = 0.0;
    double rest = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        all += e[j];
        if (j != i) rest += e[j];
    }
    const double mean_all = all / static_cast<double>(n);
    const double mean_rest = rest / static_cast<double>(n - 1);
    return -mean_all * mean_all + mean_rest * mean_rest;
}

/// The same quantity written as
///   -(1/n^2) e_i^2 - (2/n^2) sum_{j!=i} e_i e_j
///   + (2n-1)/[n(n-1)]^2 * (sum_{j!=i} e_j^2 + 2 sum_{j<k; j,k!=i} e_j e_k).
inline double phi_decomposed(const ErrorVector& e, std::size_t i) {
    const std::size_t n = e.size();
    detail::check_index(i, n);
    const double nd = static_cast<double>(n);
    const double n2 = nd * nd;
    const double c = (2.0 * nd - 1.0) / ((nd * (nd - 1.0)) * (nd * (nd - 1.0)));
    double cross_i = 0.0;
    double squares = 0.0;
    double pairs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        cross_i += e[i] * e[j];
        squares += e[j] * e[j];
        for (std::size_t k = j + 1; k < n; ++k) {
            if (k == i) continue;
            pairs += e[j] * e[k];
        }
    }
    return -(e[i] * e[i]) / n2 - 2.0 * cross_i / n2 + c * (squares + 2.0 * pairs);
}

/// Second moments M[j][k] = E(e_j e_k) of the prediction errors; the diagonal
/// holds the expected squared prediction errors.
class ErrorMoments {
public:
    explicit ErrorMoments(std::vector<std::vector<double>> m) : m_(std::move(m)) {
        if (m_.size() < 2) {
            throw DomainError("error moments need at least two models");
        }
        for (std::size_t j = 0; j < m_.size(); ++j) {
            if (m_[j].size() != m_.size()) {
                throw ValidationError("error moment matrix must be square");
            }
            for (std::size_t k = 0; k < m_.size(); ++k) {
                detail::require_finite(m_[j][k], "error moment");
                if (m_[j][k] != m_[k][j]) {
                    throw ValidationError("error moment matrix must be symmetric");
                }
            }
        }
    }

    std::size_t size() const noexcept { return m_.size(); }
    double operator()(std::size_t j, std::size_t k) const { return m_[j][k]; }

private:
    std::vector<std::vector<double>> m_;
};

/// Deterministic point forecasts scored against a N(0, truth_variance) outcome.
struct GaussianErrorModel {
    std::vector<double> forecast_means;
    double truth_variance = 1.0;

    void validate() const {
        if (forecast_means.size() < 2) {
            throw DomainError("gaussian error model needs at least two forecasts");
        }
        if (!(truth_variance > 0.0) || !std::isfinite(truth_variance)) {
            throw ValidationError("truth variance must be positive and finite");
        }
        for (double f : forecast_means) detail::require_finite(f, "forecast mean");
    }

    /// E(e_j e_k) = sigma^2 + yhat_j yhat_k, since e_j = Y - yhat_j with E(Y) = 0.
    ErrorMoments moments() const {
        validate();
        const std::size_t n = forecast_means.size();
        std::vector<std::vector<double>> m(n, std::vector<double>(n));
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                m[j][k] = truth_variance + forecast_means[j] * forecast_means[k];
            }
        }
        return ErrorMoments(std::move(m));
    }
};

/// Expected LOMO importance from error moments:
///   -(1/n^2) ESPE_i + (2n-1)/[n(n-1)]^2 sum_{j!=i} ESPE_j
///   -(2/n^2) sum_{j!=i} E(e_i e_j) + 2(2n-1)/[n(n-1)]^2 sum_{j<k; j,k!=i} E(e_j e_k)
inline double expected_phi(const ErrorMoments& m, std::size_t i) {
    const std::size_t n = m.size();
    detail::check_index(i, n);
    const double nd = static_cast<double>(n);
    const double n2 = nd * nd;
    const double c = (2.0 * nd - 1.0) / ((nd * (nd - 1.0)) * (nd * (nd - 1.0)));
    double espe_rest = 0.0;
    double cross_i = 0.0;
    double pairs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        espe_rest += m(j, j);
        cross_i += m(i, j);
        for (std::size_t k = j + 1; k < n; ++k) {
            if (k == i) continue;
            pairs += m(j, k);
        }
    }
    return -m(i, i) / n2 + c * espe_rest - 2.0 * cross_i / n2 + 2.0 * c * pairs;
}

inline double expected_phi(const GaussianErrorModel& model, std::size_t i) {
    return expected_phi(model.moments(), i);
}

/// Components of the ambiguity-decomposition view of phi_i for a weighted
/// ensemble f = sum_j w_j f_j and the leave-i-out ensemble with the remaining
/// weights renormalized, v_j = w_j / (1 - w_i).
///
/// From (f - d)^2 = sum_j w_j (f_j - d)^2 - sum_j w_j (f_j - f)^2 applied to
/// both ensembles:
///   phi_i = -w_i e_i^2 + sum_{j!=i} (v_j - w_j) e_j^2 + (A_full - A_without_i)
/// where A are the ambiguity terms. The middle term comes from renormalizing
/// the weights and vanishes only in the limit w_i -> 0.
struct AmbiguityTerms {
    double phi = 0.0;              // -(f - d)^2 + (f_{-i} - d)^2
    double own_error = 0.0;        // -w_i e_i^2
    double reweighting = 0.0;      // sum_{j!=i} (v_j - w_j) e_j^2
    double ambiguity_full = 0.0;   // sum_j w_j (f_j - f)^2
    double ambiguity_without = 0.0; // sum_{j!=i} v_j (f_j - f_{-i})^2

    double residual() const {
        return phi - (own_error + reweighting + (ambiguity_full - ambiguity_without));
    }
};

inline AmbiguityTerms ambiguity_terms(std::span<const double> forecasts, double truth,
                                      std::span<const double> weights, std::size_t i) {
    const std::size_t n = forecasts.size();
    if (n < 2) {
        throw DomainError("ambiguity check needs at least two models");
    }
    if (weights.size() != n) {
        throw ValidationError("one weight per model is required");
    }
    detail::check_index(i, n);
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ValidationError("ensemble weights must be nonnegative and finite");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("ensemble weights must sum to 1");
    }
    const double rest_weight = 1.0 - weights[i];
    if (!(rest_weight > 0.0)) {
        throw DomainError("leave-one-out ensemble has no weight left");
    }

    double f = 0.0;
    double f_rest = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        f += weights[j] * forecasts[j];
        if (j != i) f_rest += weights[j] / rest_weight * forecasts[j];
    }

    AmbiguityTerms t;
    t.phi = -(f - truth) * (f - truth) + (f_rest - truth) * (f_rest - truth);
    const double ei = forecasts[i] - truth;
    t.own_error = -weights[i] * ei * ei;
    for (std::size_t j = 0; j < n; ++j) {
        const double ej = forecasts[j] - truth;
        t.ambiguity_full += weights[j] * (forecasts[j] - f) * (forecasts[j] - f);
        if (j == i) continue;
        const double v = weights[j] / rest_weight;
        t.reweighting += (v - weights[j]) * ej * ej;
        t.ambiguity_without += v * (forecasts[j] - f_rest) * (forecasts[j] - f_rest);
    }
    return t;
}

/// Residual of the ambiguity identity; zero up to rounding.
inline double ambiguity_check(std::span<const double> forecasts, double truth,
                              std::span<const double> weights, std::size_t i) {
    return ambiguity_terms(forecasts, truth, weights, i).residual();
}

/// Error-vector form: the forecasts are recovered as f_j = -e_j with truth 0.
inline double ambiguity_check(const ErrorVector& e, std::span<const double> weights, std::size_t i) {
    std::vector<double> f(e.size());
    for (std::size_t j = 0; j < e.size(); ++j) f[j] = -e[j];
    return ambiguity_check(f, 0.0, weights, i);
}

} // namespace ensimp
