#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ccplan/error.hpp"

namespace ccplan {

enum class AccuracyMetric { f1, iu };
enum class ComplexityKind { j, jb };

inline std::string to_string(AccuracyMetric m) { return m == AccuracyMetric::f1 ? "f1" : "iu"; }
inline std::string to_string(ComplexityKind k) { return k == ComplexityKind::j ? "j" : "jb"; }

inline AccuracyMetric metric_from_string(const std::string& s) {
    std::string lower = s;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (lower == "f1")
        return AccuracyMetric::f1;
    if (lower == "iu")
        return AccuracyMetric::iu;
    throw validation_error("unknown accuracy metric '" + s + "' (expected f1 or iu)");
}

inline ComplexityKind complexity_kind_from_string(const std::string& s) {
    std::string lower = s;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (lower == "j")
        return ComplexityKind::j;
    if (lower == "jb")
        return ComplexityKind::jb;
    throw validation_error("unknown complexity kind '" + s + "' (expected j or jb)");
}

/// One trained-network accuracy measurement. theta is the trained weight
/// count; when absent it is completed from the baseline as alpha^2 * theta(1).
struct AccuracyObservation {
    std::string dataset;
    double alpha = 1.0;
    std::optional<double> theta;
    AccuracyMetric metric = AccuracyMetric::f1;
    double value = 0.0;
};

struct RelativePoint {
    double log10_theta = 0.0;
    double relative_accuracy = 0.0;
};

struct SlopeFit {
    std::string dataset;
    double slope = 0.0; // relative-accuracy change per decade of weights
    double intercept = 0.0;
    double r2 = 0.0;
    int points_used = 0;
    bool free_intercept = true; // OLS intercept is fitted, not anchored
};

/// Fitted degradation law: |dA/dlog10(theta)| = lambda * C + delta.
struct DegradationModel {
    std::string architecture;
    AccuracyMetric metric = AccuracyMetric::f1;
    ComplexityKind complexity_kind = ComplexityKind::j;
    double lambda = 0.0;
    double delta = 0.0;
    std::optional<double> omega; // JB weight, present for complexity_kind jb
    double r2 = 0.0;
    double base_log_theta = 0.0; // log10 weights of the uncompressed network
    bool fast = false;
    bool degenerate_warning = false; // lambda*C+delta <= 0 at some fitted C

    double drop_rate(double c) const { return lambda * c + delta; }
};

namespace detail {

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Plain two-pass least squares. R^2 is 0 when x or y carries no variance.
inline OlsFit ols(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::size_t n = xs.size();
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = xs[i] - mean_x;
        double dy = ys[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }

    OlsFit fit;
    if (sxx <= 0.0) {
        fit.slope = 0.0;
        fit.intercept = mean_y;
        fit.r2 = 0.0;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    fit.r2 = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 0.0;
    return fit;
}

inline bool distinct_abscissae(const std::vector<double>& xs) {
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] != xs[0])
            return true;
    return false;
}

} // namespace detail

/// Maps one dataset+metric observation group to (log10 theta, A/A_baseline)
/// points. Requires the alpha=1 baseline with a positive value.
inline std::vector<RelativePoint> relative_accuracy(
    const std::vector<AccuracyObservation>& group) {
    if (group.empty())
        throw validation_error("relative_accuracy: empty observation group");

    const AccuracyObservation* baseline = nullptr;
    for (const auto& obs : group) {
        if (std::abs(obs.alpha - 1.0) < 1e-12) {
            baseline = &obs;
            break;
        }
    }
    if (!baseline)
        throw validation_error("relative_accuracy: dataset '" + group.front().dataset +
                               "' is missing the alpha=1 baseline row");
    if (!(baseline->value > 0.0))
        throw validation_error("relative_accuracy: dataset '" + group.front().dataset +
                               "' has a non-positive baseline value");
    if (!baseline->theta.has_value())
        throw validation_error("relative_accuracy: dataset '" + group.front().dataset +
                               "' baseline row needs an explicit theta");

    double theta_base = *baseline->theta;
    if (!(theta_base > 0.0))
        throw validation_error("relative_accuracy: baseline theta must be positive");

    std::vector<RelativePoint> points;
    points.reserve(group.size());
    for (const auto& obs : group) {
        if (!(obs.alpha > 0.0 && obs.alpha <= 1.0))
            throw validation_error("relative_accuracy: alpha " + std::to_string(obs.alpha) +
                                   " outside (0,1]");
        double theta = obs.theta.value_or(obs.alpha * obs.alpha * theta_base);
        if (!(theta > 0.0))
            throw validation_error("relative_accuracy: non-positive theta");
        points.push_back({std::log10(theta), obs.value / baseline->value});
    }
    return points;
}

/// OLS trend of relative accuracy against log10 theta for one dataset.
inline SlopeFit fit_slope(const std::vector<RelativePoint>& points,
                          const std::string& dataset = "") {
    if (points.size() < 2)
        throw validation_error("fit_slope: need at least 2 points");
    std::vector<double> xs, ys;
    xs.reserve(points.size());
    ys.reserve(points.size());
    for (const auto& p : points) {
        xs.push_back(p.log10_theta);
        ys.push_back(p.relative_accuracy);
    }
    if (!detail::distinct_abscissae(xs))
        throw validation_error("fit_slope: all points share one abscissa");

    detail::OlsFit ols = detail::ols(xs, ys);
    SlopeFit fit;
    fit.dataset = dataset;
    fit.slope = ols.slope;
    fit.intercept = ols.intercept;
    fit.r2 = ols.r2;
    fit.points_used = static_cast<int>(points.size());
    return fit;
}

/// Second regression stage: per-dataset drop magnitudes against complexity.
/// Slopes are folded to positive drop-per-decade before fitting.
inline DegradationModel fit_degree_of_degradation(
    const std::vector<std::pair<double, double>>& complexity_and_slope) {
    if (complexity_and_slope.size() < 2)
        throw validation_error("fit_degree_of_degradation: need at least 2 datasets");

    std::vector<double> cs, drops;
    for (const auto& [c, slope] : complexity_and_slope) {
        cs.push_back(c);
        drops.push_back(std::abs(slope));
    }
    if (!detail::distinct_abscissae(cs))
        throw validation_error("fit_degree_of_degradation: all datasets share one complexity");

    detail::OlsFit ols = detail::ols(cs, drops);
    DegradationModel model;
    model.lambda = ols.slope;
    model.delta = ols.intercept;
    model.r2 = ols.r2;
    for (double c : cs)
        if (!(model.drop_rate(c) > 0.0))
            model.degenerate_warning = true;
    return model;
}

/// Sweeps omega over {0, step, ..., 1} and returns the value whose JB best
/// explains the per-dataset drops (highest R^2, ties to the smaller omega).
inline double select_omega(const std::vector<std::tuple<double, double, double>>& j_b_slope,
                           double grid_step) {
    if (j_b_slope.size() < 3)
        throw validation_error("select_omega: need at least 3 datasets");
    if (!(grid_step > 0.0 && grid_step <= 1.0))
        throw validation_error("select_omega: grid step must lie in (0,1]");
    double steps_d = 1.0 / grid_step;
    long steps = std::lround(steps_d);
    if (std::abs(steps_d - static_cast<double>(steps)) > 1e-9)
        throw validation_error("select_omega: grid step must divide 1 evenly");

    double best_omega = 0.0;
    double best_r2 = -1.0;
    for (long i = 0; i <= steps; ++i) {
        double omega = static_cast<double>(i) / static_cast<double>(steps);
        std::vector<double> xs, ys;
        for (const auto& [j, b, slope] : j_b_slope) {
            xs.push_back(omega * j + (1.0 - omega) * b);
            ys.push_back(std::abs(slope));
        }
        double r2 = detail::ols(xs, ys).r2;
        if (r2 > best_r2 + 1e-15) {
            best_r2 = r2;
            best_omega = omega;
        }
    }
    return best_omega;
}

struct Prediction {
    double value = 0.0;
    bool clamped = false; // raw prediction fell below zero
};

/// Accuracy predicted after shrinking from log_theta_base to log_theta_target:
/// A_base * (1 - (lambda*C + delta) * (log_theta_base - log_theta_target)).
inline Prediction predict_accuracy(const DegradationModel& model, double c,
                                   double log_theta_base, double log_theta_target,
                                   double a_base) {
    if (log_theta_target > log_theta_base + 1e-12)
        throw validation_error("predict_accuracy: target size exceeds base size");
    double rate = model.drop_rate(c);
    if (!(rate > 0.0))
        throw degenerate_model_error("predict_accuracy: lambda*C+delta = " +
                                     std::to_string(rate) + " is not positive");
    double raw = a_base * (1.0 - rate * (log_theta_base - log_theta_target));
    Prediction p;
    p.clamped = raw < 0.0;
    p.value = p.clamped ? 0.0 : raw;
    return p;
}

/// Full two-stage pipeline over grouped observations. complexity_of maps a
/// dataset name to its driving complexity C.
inline DegradationModel fit_model(
    const std::map<std::string, std::vector<AccuracyObservation>>& groups,
    const std::map<std::string, double>& complexity_of) {
    if (groups.size() < 2)
        throw validation_error("fit_model: need at least 2 datasets");

    std::vector<std::pair<double, double>> c_and_slope;
    std::vector<SlopeFit> slope_fits;
    std::vector<double> base_log_thetas;
    for (const auto& [dataset, observations] : groups) {
        auto it = complexity_of.find(dataset);
        if (it == complexity_of.end())
            throw validation_error("fit_model: no complexity value for dataset '" + dataset + "'");
        auto points = relative_accuracy(observations);
        SlopeFit fit = fit_slope(points, dataset);
        slope_fits.push_back(fit);
        c_and_slope.emplace_back(it->second, fit.slope);
        double max_log_theta = points.front().log10_theta;
        for (const auto& p : points)
            max_log_theta = std::max(max_log_theta, p.log10_theta);
        base_log_thetas.push_back(max_log_theta);
    }

    DegradationModel model = fit_degree_of_degradation(c_and_slope);
    double sum = 0.0;
    for (double v : base_log_thetas)
        sum += v;
    model.base_log_theta = sum / static_cast<double>(base_log_thetas.size());
    return model;
}

/// Reduced-effort fit: exactly two datasets, alphas {1, 0.25, 0.0625} each.
inline DegradationModel fit_fast(
    const std::map<std::string, std::vector<AccuracyObservation>>& groups,
    const std::map<std::string, double>& complexity_of) {
    if (groups.size() != 2)
        throw validation_error("fit_fast: need exactly 2 datasets, got " +
                               std::to_string(groups.size()));
    for (const auto& [dataset, observations] : groups) {
        std::set<long> alpha_keys; // alpha scaled by 1e4 for exact comparison
        for (const auto& obs : observations)
            alpha_keys.insert(std::lround(obs.alpha * 10000.0));
        if (alpha_keys != std::set<long>{625, 2500, 10000})
            throw validation_error("fit_fast: dataset '" + dataset +
                                   "' must hold exactly alphas {1, 0.25, 0.0625}");
    }
    DegradationModel model = fit_model(groups, complexity_of);
    model.fast = true;
    return model;
}

} // namespace ccplan
