#pragma once

#include "lmoopt/lmo.hpp"
#include "lmoopt/optimizer.hpp"
#include "lmoopt/problems.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lmoopt {

struct MethodSpec {
    MethodClass cls = MethodClass::StochasticLMO;
    LmoSet set = euclidean_ball(1.0);
    std::optional<UnifiedParams> params; // explicit hyperparameters, or
    std::string schedule = "auto";       // a theorem schedule by name
};

struct RunConfig {
    ProblemSpec problem;
    MethodSpec method;
    std::size_t T = 1000;
    std::uint64_t seed = 1;
    std::size_t seeds = 1;  // independent repetitions for expectation estimates
    std::size_t stride = 1; // trace recording stride
};

/// One recorded state. rsf and grad_norm always come from the exact full
/// gradient. eps_hat is the query error of the step taken FROM this state, so
/// the final row (after the last step) leaves it empty. grad_evals counts
/// stochastic-gradient calls made to reach this state.
struct TraceRow {
    std::size_t t = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double rsf = 0.0;
    double step_norm = 0.0;
    std::optional<double> eps_hat;
    std::uint64_t grad_evals = 0;
    std::uint64_t wall_ns = 0;
};

struct RunTrace {
    std::vector<TraceRow> rows;
    double avg_rsf = 0.0; // uniform average of rsf over t = 0..T-1
    double final_loss = 0.0;
    std::uint64_t grad_evals = 0;
    std::uint64_t wall_ns = 0;
    UnifiedParams params;
    MethodClass cls = MethodClass::StochasticLMO;
    double diameter = 0.0;
    std::size_t T = 0;
    std::uint64_t seed = 0;
    std::size_t zero_query_steps = 0;
};

/// Expands the schedule (or validates explicit params) against the problem's
/// noise level and the set diameter.
UnifiedParams resolve_params(const RunConfig& config, const ProblemConstants& constants);
std::string resolved_schedule_name(const RunConfig& config, const ProblemConstants& constants);

/// The R entering schedules and bounds: the Euclidean diameter of the
/// method's set at the problem's parameter shape.
double analysis_diameter(const RunConfig& config);

/// Executes T unified steps, recording every stride-th state plus the first
/// and last. Deterministic given (config, seed).
RunTrace run(const RunConfig& config);

/// Evaluates the closed-form convergence bound for the class at the given
/// constants, diameter, horizon and hyperparameters, including all finite-T
/// terms. delta_F must be set in the constants.
double theorem_bound(MethodClass cls, const ProblemConstants& constants, double R, std::size_t T,
                     const UnifiedParams& params);

struct TheoremCertificate {
    MethodClass cls = MethodClass::StochasticLMO;
    std::string schedule;
    double bound_value = 0.0;
    double empirical_mean = 0.0;
    double slack = 0.0;
    bool pass = false;
    std::size_t seeds = 0;
    double sigma = 0.0;
    bool sigma_is_estimate = false;
    double delta_F = 0.0;
    std::vector<double> per_seed_avg_rsf;
    // one-sided 95% normal-approximation upper bound on the seed mean
    double mean_upper95 = 0.0;
};

/// Certifies the seed-mean average RSF against the theorem bound. sigma = 0
/// runs use zero slack plus a 1e-9 absolute allowance and accept one seed;
/// sigma > 0 requires at least 10 seeds.
TheoremCertificate certify(const RunConfig& config, double slack = 0.05);

struct RateFit {
    std::vector<std::pair<double, double>> points; // (T, avg_rsf)
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares on (log T, log avg_rsf).
RateFit rate_fit(const std::vector<std::pair<double, double>>& points);

struct LemmaCheck {
    std::string lemma;
    std::string problem;
    bool pass = false;
    double margin = 0.0; // worst-case slack left under the bound; < 0 fails
    std::string detail;
};

struct VerifyOptions {
    // Test hook: scales the step size actually taken while the geometry
    // check keeps the nominal bound, so any value != 1 must fail the check.
    double step_fault_scale = 1.0;
};

/// Executable versions of the step-geometry, descent-rule, extrapolation,
/// second-order-remainder and martingale lemmas, each checked on problems
/// whose constants are exact.
std::vector<LemmaCheck> verify_suite(const VerifyOptions& opts = {});

struct CompareRow {
    MethodClass cls = MethodClass::StochasticLMO;
    std::string schedule;
    double avg_rsf_mean = 0.0;
    double avg_rsf_std = 0.0;
    double final_loss_mean = 0.0;
    double final_loss_std = 0.0;
    std::uint64_t grad_evals = 0;
    double wall_seconds = 0.0;
};

/// Runs each config (all sharing problem and horizon) over its seeds and
/// tabulates mean/std of average RSF and final loss plus evaluation counts.
std::vector<CompareRow> compare(const std::vector<RunConfig>& configs);

/// Problem constants with delta_F = F(w0) - F_star for this config's start.
ProblemConstants constants_for(const RunConfig& config);

double mean_of(const std::vector<double>& xs);
double sample_std(const std::vector<double>& xs);

} // namespace lmoopt
