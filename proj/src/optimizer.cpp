#include "lmoopt/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace lmoopt {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

ParamValue checked(ParamValue v, const char* what) {
    if (!v.all_finite())
        throw std::runtime_error(std::string("step: non-finite ") + what);
    return v;
}

} // namespace

std::string to_string(MethodClass cls) {
    switch (cls) {
    case MethodClass::StochasticLMO: return "stochastic_lmo";
    case MethodClass::VarianceReduced: return "variance_reduced";
    case MethodClass::IGT: return "igt";
    }
    return "?";
}

MethodClass method_class_from_string(const std::string& name) {
    if (name == "stochastic_lmo") return MethodClass::StochasticLMO;
    if (name == "variance_reduced") return MethodClass::VarianceReduced;
    if (name == "igt") return MethodClass::IGT;
    throw std::invalid_argument("unknown method class '" + name + "'");
}

void validate_params(const UnifiedParams& p) {
    require(std::isfinite(p.beta1) && std::isfinite(p.beta2) && std::isfinite(p.alpha1) &&
                std::isfinite(p.alpha2) && std::isfinite(p.lambda) && std::isfinite(p.eta1) &&
                std::isfinite(p.eta2),
            "params: non-finite value");
    require(p.beta1 >= 0.0, "params: beta1 must be >= 0");
    require(p.beta1 <= p.beta2, "params: beta1 must be <= beta2");
    require(p.beta2 < 1.0, "params: beta2 must be < 1");
    require(p.lambda >= 0.0, "params: lambda must be >= 0");
    require(p.eta1 > 0.0 && p.eta2 > 0.0, "params: step sizes must be positive");
    require(p.lambda * p.eta1 <= 1.0, "params: lambda*eta1 must be <= 1");
    require(p.lambda * p.eta2 <= 1.0, "params: lambda*eta2 must be <= 1");
}

void validate_for_class(const UnifiedParams& p, MethodClass cls) {
    validate_params(p);
    switch (cls) {
    case MethodClass::StochasticLMO:
        require(p.alpha1 == 0.0 && p.alpha2 == 0.0,
                "stochastic_lmo: alpha1 and alpha2 must be zero");
        require(p.eta1 == p.eta2, "stochastic_lmo: eta1 must equal eta2");
        return;
    case MethodClass::VarianceReduced:
        require(p.eta1 == p.eta2, "variance_reduced: eta1 must equal eta2");
        return;
    case MethodClass::IGT: {
        require(p.alpha1 == 0.0 && p.alpha2 == 0.0, "igt: alpha1 and alpha2 must be zero");
        const double want = p.eta2 / (1.0 - p.beta2);
        require(std::abs(p.eta1 - want) <= 1e-9 * std::max(1.0, want),
                "igt: eta1 must equal eta2/(1-beta2)");
        return;
    }
    }
}

UnifiedParams theorem_schedule(MethodClass cls, std::size_t T, double R, bool sigma_positive,
                               std::optional<double> beta1_override) {
    require(T >= 2, "theorem_schedule: horizon must be at least 2");
    require(R > 0.0, "theorem_schedule: diameter must be positive");
    const double Td = static_cast<double>(T);
    UnifiedParams p;
    switch (cls) {
    case MethodClass::StochasticLMO:
        if (sigma_positive) {
            p.eta2 = 1.0 / (R * std::pow(Td, 0.75));
            p.beta2 = 1.0 - std::pow(Td, -0.5);
            // 1 - beta1 in [T^{-1/2}, T^{-1/4}]: midpoint exponent -3/8
            p.beta1 = 1.0 - std::pow(Td, -0.375);
        } else {
            p.eta2 = 1.0 / (R * std::sqrt(Td));
            p.beta2 = 0.9; // any constant momentum admissible here
            p.beta1 = 0.9;
        }
        p.eta1 = p.eta2;
        break;
    case MethodClass::VarianceReduced:
        p.eta2 = 1.0 / (R * std::pow(Td, 2.0 / 3.0));
        p.beta2 = 1.0 - std::pow(Td, -2.0 / 3.0);
        // 1 - beta1 in [T^{-2/3}, T^{-1/3}]: midpoint exponent -1/2
        p.beta1 = 1.0 - std::pow(Td, -0.5);
        p.eta1 = p.eta2;
        p.alpha2 = p.beta2;
        break;
    case MethodClass::IGT:
        if (sigma_positive) {
            p.eta2 = 1.0 / (R * std::pow(Td, 5.0 / 7.0));
            p.beta2 = 1.0 - std::pow(Td, -4.0 / 7.0);
            // 1 - beta1 in [T^{-4/7}, T^{-2/7}]: midpoint exponent -3/7
            p.beta1 = 1.0 - std::pow(Td, -3.0 / 7.0);
        } else {
            p.eta2 = 1.0 / (R * std::sqrt(Td));
            p.beta2 = 1.0 - std::pow(Td, -0.25);
            p.beta1 = p.beta2;
        }
        p.eta1 = p.eta2 / (1.0 - p.beta2);
        break;
    }
    if (beta1_override) {
        require(*beta1_override >= 0.0 && *beta1_override <= p.beta2,
                "theorem_schedule: beta1 override outside [0, beta2]");
        p.beta1 = *beta1_override;
    }
    if (cls == MethodClass::VarianceReduced) p.alpha1 = p.beta1; // largest admissible correction
    validate_for_class(p, cls);
    return p;
}

std::string schedule_name(MethodClass cls, bool sigma_positive) {
    switch (cls) {
    case MethodClass::StochasticLMO: return sigma_positive ? "thm1" : "cor4";
    case MethodClass::VarianceReduced: return "cor1";
    case MethodClass::IGT: return sigma_positive ? "cor2" : "cor3";
    }
    return "?";
}

MethodClass schedule_class(const std::string& name) {
    if (name == "thm1" || name == "cor4") return MethodClass::StochasticLMO;
    if (name == "cor1") return MethodClass::VarianceReduced;
    if (name == "cor2" || name == "cor3") return MethodClass::IGT;
    throw std::invalid_argument("unknown schedule '" + name + "'");
}

UnifiedParams schedule_by_name(const std::string& name, std::size_t T, double R) {
    const bool sigma_positive = (name == "thm1" || name == "cor1" || name == "cor2");
    return theorem_schedule(schedule_class(name), T, R, sigma_positive);
}

double nesterov_reparam(double bar_beta1, double beta2) {
    require(bar_beta1 >= 0.0 && bar_beta1 <= 1.0, "nesterov_reparam: bar_beta1 outside [0, 1]");
    require(beta2 >= 0.0 && beta2 < 1.0, "nesterov_reparam: beta2 outside [0, 1)");
    return bar_beta1 * beta2;
}

double muon_scaling_factor(double beta2) {
    require(std::isfinite(beta2) && beta2 < 1.0, "muon_scaling_factor: beta2 must be < 1");
    return 1.0 / (1.0 - beta2);
}

double epsilon_hat_norm(const ParamValue& g, const ParamValue& grad_F_at_w) {
    return norm(sub(g, grad_F_at_w), Norm::L2);
}

OptimizerState init_state_with_sample(const ParamValue& w0, const StochasticOracle& oracle,
                                      SampleId xi0) {
    require(w0.all_finite(), "init_state: non-finite start point");
    OptimizerState st;
    st.w = w0;
    st.x = w0;
    st.x_prev = w0;
    st.pending_sample = xi0;
    st.m = checked(oracle.sample_grad(w0, xi0), "initial momentum m_{-1}");
    return st;
}

OptimizerState init_state(const ParamValue& w0, const StochasticOracle& oracle,
                          std::uint64_t seed) {
    rng::SampleStream stream(seed);
    const SampleId xi0 = stream.next();
    OptimizerState st = init_state_with_sample(w0, oracle, xi0);
    st.stream = stream;
    return st;
}

StepDiagnostics step_with_sample(OptimizerState& state, const UnifiedParams& params,
                                 const LmoSet& set, const StochasticOracle& oracle, SampleId xi) {
    validate_params(params);
    const ParamValue grad_x = checked(oracle.sample_grad(state.x, xi), "stochastic gradient");

    ParamValue g, m_new;
    if (params.alpha1 != 0.0 || params.alpha2 != 0.0) {
        // Both evaluations of the correction share xi; at t = 0 the points
        // coincide and the difference is exactly zero.
        const ParamValue grad_prev =
            checked(oracle.sample_grad(state.x_prev, xi), "correction gradient");
        const ParamValue corr = sub(grad_x, grad_prev);
        g = checked(combine({params.beta1, 1.0 - params.beta1, params.alpha1},
                            {&state.m, &grad_x, &corr}),
                    "query g_t");
        m_new = checked(combine({params.beta2, 1.0 - params.beta2, params.alpha2},
                                {&state.m, &grad_x, &corr}),
                        "momentum m_t");
    } else {
        g = checked(combine({params.beta1, 1.0 - params.beta1}, {&state.m, &grad_x}), "query g_t");
        m_new = checked(combine({params.beta2, 1.0 - params.beta2}, {&state.m, &grad_x}),
                        "momentum m_t");
    }

    StepDiagnostics diag;
    diag.zero_query = norm(g, Norm::L2) == 0.0;
    diag.v = checked(lmo(set, g), "oracle direction v_t");
    diag.g = std::move(g);

    const ParamValue x_next = checked(
        combine({1.0 - params.lambda * params.eta1, params.eta1}, {&state.w, &diag.v}),
        "transported point x_{t+1}");
    const ParamValue w_next = checked(
        combine({1.0 - params.lambda * params.eta2, params.eta2}, {&state.w, &diag.v}),
        "iterate w_{t+1}");

    state.x_prev = state.x;
    state.x = x_next;
    state.w = w_next;
    state.m = m_new;
    ++state.t;
    return diag;
}

StepDiagnostics step_unified(OptimizerState& state, const UnifiedParams& params,
                             const LmoSet& set, const StochasticOracle& oracle) {
    const SampleId xi = state.t == 0 ? state.pending_sample : state.stream.next();
    return step_with_sample(state, params, set, oracle, xi);
}

StepDiagnostics step_igt(OptimizerState& state, const UnifiedParams& params, const LmoSet& set,
                         const StochasticOracle& oracle) {
    validate_for_class(params, MethodClass::IGT);
    const SampleId xi = state.t == 0 ? state.pending_sample : state.stream.next();
    const ParamValue grad_x = checked(oracle.sample_grad(state.x, xi), "stochastic gradient");

    ParamValue g =
        checked(combine({params.beta1, 1.0 - params.beta1}, {&state.m, &grad_x}), "query g_t");
    ParamValue m_new = checked(combine({params.beta2, 1.0 - params.beta2}, {&state.m, &grad_x}),
                               "momentum m_t");

    StepDiagnostics diag;
    diag.zero_query = norm(g, Norm::L2) == 0.0;
    diag.v = checked(lmo(set, g), "oracle direction v_t");
    diag.g = std::move(g);

    const ParamValue x_next = checked(
        combine({1.0 - params.lambda * params.eta1, params.eta1}, {&state.w, &diag.v}),
        "transported point x_{t+1}");
    const ParamValue w_next = checked(
        combine({1.0 - params.lambda * params.eta2, params.eta2}, {&state.w, &diag.v}),
        "iterate w_{t+1}");

    state.x_prev = state.x;
    state.x = x_next;
    state.w = w_next;
    state.m = m_new;
    ++state.t;
    return diag;
}

StepDiagnostics step_stochastic_lmo(OptimizerState& state, const UnifiedParams& params,
                                    const LmoSet& set, const StochasticOracle& oracle) {
    validate_for_class(params, MethodClass::StochasticLMO);
    const SampleId xi = state.t == 0 ? state.pending_sample : state.stream.next();
    const ParamValue grad_w = checked(oracle.sample_grad(state.w, xi), "stochastic gradient");

    ParamValue g =
        checked(combine({params.beta1, 1.0 - params.beta1}, {&state.m, &grad_w}), "query g_t");
    ParamValue m_new = checked(combine({params.beta2, 1.0 - params.beta2}, {&state.m, &grad_w}),
                               "momentum m_t");

    StepDiagnostics diag;
    diag.zero_query = norm(g, Norm::L2) == 0.0;
    diag.v = checked(lmo(set, g), "oracle direction v_t");
    diag.g = std::move(g);

    const ParamValue w_next = checked(
        combine({1.0 - params.lambda * params.eta2, params.eta2}, {&state.w, &diag.v}),
        "iterate w_{t+1}");

    state.x_prev = state.x;
    state.x = w_next;
    state.w = w_next;
    state.m = m_new;
    ++state.t;
    return diag;
}

GroupedOptimizer::GroupedOptimizer(const std::vector<GroupInit>& groups, std::uint64_t seed)
    : stream_(seed) {
    require(!groups.empty(), "GroupedOptimizer: need at least one group");
    pending_ = stream_.next();
    groups_.reserve(groups.size());
    for (const GroupInit& gi : groups) {
        require(gi.oracle != nullptr, "GroupedOptimizer: null oracle");
        groups_.push_back(Group{gi.set, gi.oracle, init_state_with_sample(gi.w0, *gi.oracle, pending_)});
    }
}

std::vector<StepDiagnostics> GroupedOptimizer::step(const UnifiedParams& params) {
    const SampleId xi = t_ == 0 ? pending_ : stream_.next();
    std::vector<StepDiagnostics> out;
    out.reserve(groups_.size());
    for (Group& g : groups_)
        out.push_back(step_with_sample(g.state, params, g.set, *g.oracle, xi));
    ++t_;
    return out;
}

} // namespace lmoopt
