#pragma once

#include "lmoopt/lmo.hpp"
#include "lmoopt/param_value.hpp"
#include "lmoopt/problems.hpp"
#include "lmoopt/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lmoopt {

/// Scalar hyperparameters of the unified LMO update. beta1/beta2 drive the
/// query and buffer momenta, alpha1/alpha2 the variance-reduction correction,
/// lambda the decoupled weight decay, eta1/eta2 the transported-point and
/// iterate step sizes.
struct UnifiedParams {
    double beta1 = 0.0;
    double beta2 = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double lambda = 0.0;
    double eta1 = 1.0;
    double eta2 = 1.0;
};

enum class MethodClass { StochasticLMO, VarianceReduced, IGT };

std::string to_string(MethodClass cls);
MethodClass method_class_from_string(const std::string& name);

/// Base invariants: 0 <= beta1 <= beta2 < 1, lambda >= 0, eta1/eta2 > 0,
/// lambda*eta <= 1 for both step sizes. Throws std::invalid_argument naming
/// the violated constraint.
void validate_params(const UnifiedParams& p);

/// Class constraints on top of validate_params:
///   StochasticLMO   alpha1 = alpha2 = 0 and eta1 = eta2
///   VarianceReduced eta1 = eta2 (alphas free)
///   IGT             alpha1 = alpha2 = 0 and eta1 = eta2 / (1 - beta2)
void validate_for_class(const UnifiedParams& p, MethodClass cls);

/// Hyperparameters prescribed by the convergence analysis for the given
/// class, horizon and diameter. Momentum intervals are resolved at the
/// geometric-midpoint exponent unless beta1_override is given. Schedules:
///   thm1 (stochastic, sigma>0)  eta = 1/(R T^{3/4}),  beta2 = 1 - T^{-1/2}
///   cor4 (stochastic, sigma=0)  eta = 1/(R T^{1/2}),  beta1 = beta2 = 0.9
///   cor1 (VR)                   eta = 1/(R T^{2/3}),  beta2 = 1 - T^{-2/3},
///                               alpha1 = beta1, alpha2 = beta2
///   cor2 (IGT, sigma>0)         eta = 1/(R T^{5/7}),  beta2 = 1 - T^{-4/7}
///   cor3 (IGT, sigma=0)         eta = 1/(R T^{1/2}),  beta1 = beta2 = 1 - T^{-1/4}
UnifiedParams theorem_schedule(MethodClass cls, std::size_t T, double R, bool sigma_positive,
                               std::optional<double> beta1_override = std::nullopt);

std::string schedule_name(MethodClass cls, bool sigma_positive);
UnifiedParams schedule_by_name(const std::string& name, std::size_t T, double R);
MethodClass schedule_class(const std::string& name);

/// beta1 = bar_beta1 * beta2: the two-momentum parameter equivalent to an
/// approximate-Nesterov query with mixing weight bar_beta1.
double nesterov_reparam(double bar_beta1, double beta2);

/// Conversion factor 1/(1 - beta2) between the normalized momentum recursion
/// used here and the raw accumulation convention of the original Muon.
double muon_scaling_factor(double beta2);

/// |g_t - grad F(w_t)|_2, the query error entering the descent rule.
double epsilon_hat_norm(const ParamValue& g, const ParamValue& grad_F_at_w);

/// Per-step outputs: the query g_t, the oracle direction v_t, and whether the
/// query degenerated to zero (step reduces to pure weight decay).
struct StepDiagnostics {
    ParamValue g;
    ParamValue v;
    std::optional<double> epsilon_hat_norm;
    bool zero_query = false;
};

/// State of one parameter group. At t = 0 the correction term sees
/// x_prev = x = w0 and the pending sample is the xi_0 already used for the
/// momentum seed, so the first update reuses that sample.
struct OptimizerState {
    std::size_t t = 0;
    ParamValue w;
    ParamValue x;
    ParamValue x_prev;
    ParamValue m;
    rng::SampleStream stream{0};
    SampleId pending_sample = 0;
};

/// Seeds the state: m = grad f(w0; xi_0) with xi_0 drawn from the stream and
/// retained for reuse inside the t = 0 update.
OptimizerState init_state(const ParamValue& w0, const StochasticOracle& oracle,
                          std::uint64_t seed);

/// Same, with the sample supplied by the caller (parameter groups share one
/// stream).
OptimizerState init_state_with_sample(const ParamValue& w0, const StochasticOracle& oracle,
                                      SampleId xi0);

/// One update of the unified framework. Exactly one fresh sample per step;
/// both gradients of the correction term use that same sample, and the second
/// evaluation is skipped entirely when alpha1 = alpha2 = 0.
StepDiagnostics step_unified(OptimizerState& state, const UnifiedParams& params,
                             const LmoSet& set, const StochasticOracle& oracle);

/// Transported-point update with alpha = 0 and eta1 = eta2/(1 - beta2);
/// an independent transcription used to cross-check step_unified.
StepDiagnostics step_igt(OptimizerState& state, const UnifiedParams& params, const LmoSet& set,
                         const StochasticOracle& oracle);

/// Dedicated single-step-size path (alpha = 0, eta1 = eta2); an independent
/// transcription used to cross-check step_unified.
StepDiagnostics step_stochastic_lmo(OptimizerState& state, const UnifiedParams& params,
                                    const LmoSet& set, const StochasticOracle& oracle);

/// Low-level kernel with an explicit sample id (does not touch the stream).
StepDiagnostics step_with_sample(OptimizerState& state, const UnifiedParams& params,
                                 const LmoSet& set, const StochasticOracle& oracle, SampleId xi);

/// Several parameter groups updated with shared scalars and a shared sample
/// stream, so matrix parameters can use the operator-norm ball while vector
/// parameters use another geometry. The joint objective is the sum of the
/// group losses.
class GroupedOptimizer {
public:
    struct GroupInit {
        ParamValue w0;
        LmoSet set;
        const StochasticOracle* oracle;
    };
    struct Group {
        LmoSet set;
        const StochasticOracle* oracle;
        OptimizerState state;
    };

    GroupedOptimizer(const std::vector<GroupInit>& groups, std::uint64_t seed);

    std::vector<StepDiagnostics> step(const UnifiedParams& params);

    const std::vector<Group>& groups() const { return groups_; }
    std::size_t t() const { return t_; }

private:
    std::vector<Group> groups_;
    rng::SampleStream stream_;
    SampleId pending_;
    std::size_t t_ = 0;
};

} // namespace lmoopt
