#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccplan/arch.hpp"
#include "ccplan/complexity.hpp"
#include "ccplan/degradation.hpp"
#include "ccplan/error.hpp"

namespace ccplan {

enum class ConstraintKind { disk_budget, memory_budget, accuracy_floor };
enum class MultiplierMode { uniform, layer_wise };

inline std::string to_string(ConstraintKind k) {
    switch (k) {
    case ConstraintKind::disk_budget: return "disk_budget";
    case ConstraintKind::memory_budget: return "memory_budget";
    default: return "accuracy_floor";
    }
}

inline std::string to_string(MultiplierMode m) {
    return m == MultiplierMode::uniform ? "uniform" : "layer_wise";
}

struct Constraint {
    ConstraintKind kind = ConstraintKind::disk_budget;
    MultiplierMode mode = MultiplierMode::uniform;
    std::int64_t budget_bytes = 0;        // budget kinds
    double min_accuracy_fraction = 0.0;   // accuracy_floor, fraction of baseline in (0,1)
};

struct SolverDiagnostics {
    int iterations = 0;
    double residual = 0.0;        // |sum alpha^p theta_i - theta*| at termination
    int tightening_rounds = 0;    // budget re-solves after rounding overshoot
    std::vector<std::string> warnings;
};

/// Uniform multiplier for a disk (weight-count) budget: alpha = sqrt(theta*/theta).
inline double solve_uniform_disk(std::int64_t theta, double theta_star) {
    if (!(theta_star > 0.0))
        throw validation_error("solve_uniform_disk: theta* must be positive");
    if (theta <= 0)
        throw validation_error("solve_uniform_disk: theta must be positive");
    if (theta_star >= static_cast<double>(theta))
        return 1.0; // budget already satisfied, no compression needed
    return std::sqrt(theta_star / static_cast<double>(theta));
}

/// Uniform multiplier for a main-memory budget: alpha = theta*/theta.
inline double solve_uniform_memory(std::int64_t theta, double theta_star) {
    if (!(theta_star > 0.0))
        throw validation_error("solve_uniform_memory: theta* must be positive");
    if (theta <= 0)
        throw validation_error("solve_uniform_memory: theta must be positive");
    if (theta_star >= static_cast<double>(theta))
        return 1.0;
    return theta_star / static_cast<double>(theta);
}

namespace detail {

inline void require_positive_rates(const DegradationModel& model,
                                   const std::map<int, double>& scale_c) {
    std::string bad;
    for (const auto& [scale, c] : scale_c) {
        if (!(model.drop_rate(c) > 0.0))
            bad += (bad.empty() ? "" : ", ") + std::to_string(scale);
    }
    if (!bad.empty())
        throw degenerate_model_error(
            "lambda*C+delta is not positive at scale(s) " + bad);
}

inline std::map<int, double> gather_scale_c(const ArchitectureSpec& spec,
                                            const std::map<int, double>& scale_c) {
    std::map<int, double> used;
    for (const auto& layer : spec.layers) {
        auto it = scale_c.find(layer.scale_index);
        if (it == scale_c.end())
            throw validation_error("no complexity value for scale " +
                                   std::to_string(layer.scale_index));
        used[layer.scale_index] = it->second;
    }
    return used;
}

} // namespace detail

struct LayerwiseSolution {
    MultiplierAssignment assignment;
    double k = 0.0;               // shared marginal-drop parameter, <= 0
    SolverDiagnostics diagnostics;
};

/// Equal-marginal-drop multipliers under a weight budget. Solves for K <= 0
/// with alpha_i = 10^(K / (lambda*C_i + delta)) such that
/// sum_i alpha_i^p * theta_i = theta* (p = 2 for disk, 1 for memory) by
/// bisection on the strictly monotone residual.
inline LayerwiseSolution solve_layerwise_budget(const ArchitectureSpec& spec,
                                                const std::map<int, double>& scale_c,
                                                const DegradationModel& model,
                                                double theta_star,
                                                bool memory_mode = false) {
    if (!(theta_star > 0.0))
        throw validation_error("solve_layerwise_budget: theta* must be positive");
    std::int64_t theta = total_weights(spec);
    if (theta_star > static_cast<double>(theta))
        theta_star = static_cast<double>(theta); // cannot grow the network

    auto used_c = detail::gather_scale_c(spec, scale_c);
    detail::require_positive_rates(model, used_c);
    auto theta_by_scale = weights_by_scale(spec);

    struct ScaleTerm {
        int scale;
        double rate;
        double theta;
    };
    std::vector<ScaleTerm> terms;
    double max_rate = 0.0;
    double max_channels = 2.0;
    for (const auto& [scale, c] : used_c) {
        terms.push_back({scale, model.drop_rate(c),
                         static_cast<double>(theta_by_scale.at(scale))});
        max_rate = std::max(max_rate, terms.back().rate);
    }
    for (const auto& layer : spec.layers)
        max_channels = std::max({max_channels, static_cast<double>(layer.in_channels),
                                 static_cast<double>(layer.out_channels)});

    const double p = memory_mode ? 1.0 : 2.0;
    auto residual = [&](double k) {
        double sum = 0.0;
        for (const auto& t : terms)
            sum += std::pow(10.0, p * k / t.rate) * t.theta;
        return sum - theta_star;
    };

    LayerwiseSolution solution;
    if (residual(0.0) <= 0.0) {
        // Budget at or above the full network: identity root.
        solution.k = 0.0;
        for (const auto& t : terms)
            solution.assignment.by_scale[t.scale] = 1.0;
        return solution;
    }

    double hi = 0.0; // residual(0) = theta - theta* >= 0
    double lo = -max_rate * std::log10(max_channels);
    int expand = 0;
    while (residual(lo) > 0.0 && expand < 200) {
        lo *= 2.0;
        ++expand;
    }
    if (residual(lo) > 0.0)
        throw infeasible_error("solve_layerwise_budget: could not bracket theta* = " +
                               std::to_string(theta_star));

    int iterations = expand;
    while (hi - lo > 1e-12 && iterations < 400) {
        double mid = 0.5 * (lo + hi);
        if (residual(mid) > 0.0)
            hi = mid;
        else
            lo = mid;
        ++iterations;
    }
    double k = 0.5 * (lo + hi);
    solution.k = std::min(k, 0.0);
    solution.diagnostics.iterations = iterations;
    solution.diagnostics.residual = std::abs(residual(solution.k));

    if (solution.diagnostics.residual > 1e-6 * theta_star)
        throw infeasible_error("solve_layerwise_budget: residual " +
                               std::to_string(solution.diagnostics.residual) +
                               " exceeds tolerance for theta* = " + std::to_string(theta_star));

    for (const auto& t : terms) {
        double alpha = std::pow(10.0, solution.k / t.rate);
        solution.assignment.by_scale[t.scale] = std::min(alpha, 1.0);
    }
    return solution;
}

struct UniformFloorSolution {
    double alpha = 1.0;
    double theta_star = 0.0;
    double delta_log_theta = 0.0;
};

/// Smallest network keeping accuracy within delta_a of the baseline:
/// delta_log_theta = delta_a / (lambda*C + delta), theta* = theta * 10^-dlt.
inline UniformFloorSolution solve_uniform_floor(const ArchitectureSpec& spec, double c,
                                                const DegradationModel& model,
                                                double delta_a) {
    if (!(delta_a >= 0.0 && delta_a < 1.0))
        throw validation_error("solve_uniform_floor: delta_a must lie in [0,1)");
    double rate = model.drop_rate(c);
    if (!(rate > 0.0))
        throw degenerate_model_error("solve_uniform_floor: lambda*C+delta = " +
                                     std::to_string(rate) + " is not positive");
    std::int64_t theta = total_weights(spec);

    UniformFloorSolution s;
    s.delta_log_theta = delta_a / rate;
    s.theta_star = static_cast<double>(theta) * std::pow(10.0, -s.delta_log_theta);
    s.alpha = std::pow(10.0, -0.5 * s.delta_log_theta); // sqrt(theta*/theta)
    return s;
}

/// Per-scale floor multipliers: each scale independently spends the full
/// accuracy slack, alpha_i = 10^(-delta_log_theta_i / 2) (disk semantics).
inline MultiplierAssignment solve_layerwise_floor(const ArchitectureSpec& spec,
                                                  const std::map<int, double>& scale_c,
                                                  const DegradationModel& model,
                                                  double delta_a) {
    if (!(delta_a >= 0.0 && delta_a < 1.0))
        throw validation_error("solve_layerwise_floor: delta_a must lie in [0,1)");
    auto used_c = detail::gather_scale_c(spec, scale_c);
    detail::require_positive_rates(model, used_c);

    MultiplierAssignment assignment;
    for (const auto& [scale, c] : used_c) {
        double dlt = delta_a / model.drop_rate(c);
        assignment.by_scale[scale] = std::pow(10.0, -0.5 * dlt);
    }
    return assignment;
}

struct CompressionPlan {
    ArchitectureSpec base;
    ArchitectureSpec compressed;
    MultiplierAssignment assignment;
    Constraint constraint;
    double theta_star_target = 0.0;
    std::int64_t theta_star_achieved = 0;
    double predicted_relative_accuracy = 1.0;
    bool prediction_is_estimate = false; // layer-wise aggregate, not the whole-network law
    SolverDiagnostics diagnostics;
};

inline double reduction_report(const ArchitectureSpec& base, const CompressionPlan& plan) {
    return static_cast<double>(total_weights(base)) /
           static_cast<double>(plan.theta_star_achieved);
}

namespace detail {

/// theta-weighted mean of per-scale relative drops; exact when drops agree.
/// Weight counts scale with alpha^2 under channel multiplication no matter
/// which budget accounting selected the alphas.
inline double layerwise_predicted_relative(const ArchitectureSpec& spec,
                                           const std::map<int, double>& scale_c,
                                           const DegradationModel& model,
                                           const MultiplierAssignment& assignment) {
    auto theta_by_scale = weights_by_scale(spec);
    double weighted = 0.0, total = 0.0;
    for (const auto& [scale, theta] : theta_by_scale) {
        double alpha = assignment.by_scale.at(scale);
        double dlt = -2.0 * std::log10(alpha);
        double drop = model.drop_rate(scale_c.at(scale)) * dlt;
        weighted += static_cast<double>(theta) * drop;
        total += static_cast<double>(theta);
    }
    return 1.0 - weighted / total;
}

} // namespace detail

/// Dispatches the constraint to the matching solver, applies the multipliers,
/// validates the plan invariants, and attaches the predicted accuracy.
///
/// Budget plans whose rounded channel counts overshoot the target by more
/// than 1% are re-solved against a proportionally tightened target.
inline CompressionPlan build_plan(const ArchitectureSpec& spec,
                                  const std::map<int, double>& scale_c,
                                  const DegradationModel& model,
                                  const Constraint& constraint) {
    CompressionPlan plan;
    plan.base = spec;
    plan.constraint = constraint;

    auto used_c = detail::gather_scale_c(spec, scale_c);
    detail::require_positive_rates(model, used_c);
    std::int64_t theta = total_weights(spec);
    double input_c = used_c.begin()->second; // lowest scale index = input scale
    const bool budget_kind = constraint.kind != ConstraintKind::accuracy_floor;
    const bool memory_mode = constraint.kind == ConstraintKind::memory_budget;

    if (budget_kind) {
        std::int64_t theta_star =
            disk_budget_to_weights(constraint.budget_bytes, spec.bytes_per_weight);
        if (theta_star <= 0)
            throw infeasible_error("budget of " + std::to_string(constraint.budget_bytes) +
                                   " bytes leaves no weights at " +
                                   std::to_string(spec.bytes_per_weight) + " bytes/weight");
        if (theta_star < min_total_weights(spec))
            throw infeasible_error("budget allows " + std::to_string(theta_star) +
                                   " weights but the single-channel floor of '" + spec.name +
                                   "' is " + std::to_string(min_total_weights(spec)));
        plan.theta_star_target = static_cast<double>(theta_star);

        double effective_target = plan.theta_star_target;
        for (int round = 0;; ++round) {
            if (constraint.mode == MultiplierMode::uniform) {
                double alpha = memory_mode ? solve_uniform_memory(theta, effective_target)
                                           : solve_uniform_disk(theta, effective_target);
                plan.assignment = MultiplierAssignment::uniform(spec, alpha);
            } else {
                LayerwiseSolution s =
                    solve_layerwise_budget(spec, used_c, model, effective_target, memory_mode);
                plan.assignment = s.assignment;
                plan.diagnostics.iterations += s.diagnostics.iterations;
                plan.diagnostics.residual = s.diagnostics.residual;
            }
            plan.compressed = apply_multipliers(spec, plan.assignment);
            plan.theta_star_achieved = total_weights(plan.compressed);

            double overshoot = static_cast<double>(plan.theta_star_achieved) -
                               plan.theta_star_target;
            if (overshoot <= 0.0)
                break;
            if (overshoot <= 0.01 * plan.theta_star_target) {
                plan.diagnostics.warnings.push_back(
                    "rounded channels exceed the target by " +
                    std::to_string(overshoot / plan.theta_star_target * 100.0) + "%");
                break;
            }
            if (round >= 32)
                throw infeasible_error("budget of " + std::to_string(theta_star) +
                                       " weights is not reachable after rounding");
            effective_target *= plan.theta_star_target /
                                static_cast<double>(plan.theta_star_achieved);
            plan.diagnostics.tightening_rounds = round + 1;
        }

        if (constraint.mode == MultiplierMode::uniform) {
            double alpha = plan.assignment.by_scale.begin()->second;
            double log_base = std::log10(static_cast<double>(theta));
            plan.predicted_relative_accuracy =
                predict_accuracy(model, input_c, log_base,
                                 log_base + 2.0 * std::log10(alpha), 1.0)
                    .value;
        } else {
            plan.predicted_relative_accuracy = detail::layerwise_predicted_relative(
                spec, used_c, model, plan.assignment);
            plan.prediction_is_estimate = true;
        }
    } else {
        if (!(constraint.min_accuracy_fraction > 0.0 && constraint.min_accuracy_fraction < 1.0))
            throw validation_error("min accuracy fraction must lie in (0,1), got " +
                                   std::to_string(constraint.min_accuracy_fraction));
        double delta_a = 1.0 - constraint.min_accuracy_fraction;

        if (constraint.mode == MultiplierMode::uniform) {
            UniformFloorSolution s = solve_uniform_floor(spec, input_c, model, delta_a);
            plan.assignment = MultiplierAssignment::uniform(spec, s.alpha);
            plan.theta_star_target = s.theta_star;
            double log_base = std::log10(static_cast<double>(theta));
            plan.predicted_relative_accuracy =
                predict_accuracy(model, input_c, log_base, log_base - s.delta_log_theta, 1.0)
                    .value;
        } else {
            plan.assignment = solve_layerwise_floor(spec, used_c, model, delta_a);
            double target = 0.0;
            auto theta_by_scale = weights_by_scale(spec);
            for (const auto& [scale, theta_scale] : theta_by_scale) {
                double alpha = plan.assignment.by_scale.at(scale);
                target += alpha * alpha * static_cast<double>(theta_scale);
            }
            plan.theta_star_target = target;
            plan.predicted_relative_accuracy = detail::layerwise_predicted_relative(
                spec, used_c, model, plan.assignment);
            plan.prediction_is_estimate = true;
        }
        plan.compressed = apply_multipliers(spec, plan.assignment);
        plan.theta_star_achieved = total_weights(plan.compressed);

        if (plan.predicted_relative_accuracy + 1e-12 < constraint.min_accuracy_fraction)
            throw infeasible_error("plan predicts relative accuracy " +
                                   std::to_string(plan.predicted_relative_accuracy) +
                                   " below the floor " +
                                   std::to_string(constraint.min_accuracy_fraction));
    }
    return plan;
}

} // namespace ccplan
