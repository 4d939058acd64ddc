#include <doctest.h>

#include "lmoopt/optimizer.hpp"

#include <cmath>
#include <stdexcept>

using namespace lmoopt;

namespace {

ProblemSpec quadratic_spec(std::vector<double> eig, double sigma, std::uint64_t seed = 3) {
    ProblemSpec s;
    s.kind = ProblemKind::NoisyQuadratic;
    s.dim = eig.size();
    s.eigenvalues = std::move(eig);
    s.sigma = sigma;
    s.seed = seed;
    return s;
}

UnifiedParams plain(double eta, double beta1 = 0.0, double beta2 = 0.0, double lambda = 0.0) {
    UnifiedParams p;
    p.beta1 = beta1;
    p.beta2 = beta2;
    p.lambda = lambda;
    p.eta1 = p.eta2 = eta;
    return p;
}

} // namespace

TEST_CASE("init_state contract") {
    const auto oracle = make_oracle(quadratic_spec({1, 1}, 0.0));
    const ParamValue zero = ParamValue::vector(2);
    const OptimizerState st = init_state(zero, *oracle, 7);
    CHECK(norm(st.m, Norm::L2) == 0.0); // grad F(0) = 0 and sigma = 0
    CHECK(norm(sub(st.x, zero), Norm::L2) == 0.0);
    CHECK(norm(sub(st.x_prev, zero), Norm::L2) == 0.0);
    CHECK(st.t == 0);

    // bit-for-bit reproducible momentum seed under noise
    const auto noisy = make_oracle(quadratic_spec({1, 4}, 0.7));
    const ParamValue w0 = ParamValue::vector({1, 1});
    const OptimizerState a = init_state(w0, *noisy, 11);
    const OptimizerState b = init_state(w0, *noisy, 11);
    for (std::size_t i = 0; i < 2; ++i) CHECK(a.m[i] == b.m[i]);
}

TEST_CASE("unified step hand trace on diag(1,4)") {
    const auto oracle = make_oracle(quadratic_spec({1, 4}, 0.0));
    OptimizerState st = init_state(ParamValue::vector({1, 1}), *oracle, 1);
    const StepDiagnostics d = step_unified(st, plain(0.1), linf_ball(1.0), *oracle);
    CHECK(d.g[0] == doctest::Approx(1).epsilon(1e-15));
    CHECK(d.g[1] == doctest::Approx(4).epsilon(1e-15));
    CHECK(d.v[0] == -1.0);
    CHECK(d.v[1] == -1.0);
    CHECK(st.w[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(st.w[1] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("lambda*eta = 1 lands exactly on the oracle point") {
    const auto oracle = make_oracle(quadratic_spec({1, 4}, 0.0));
    UnifiedParams p = plain(1.0);
    p.lambda = 1.0;
    OptimizerState st = init_state(ParamValue::vector({5, 5}), *oracle, 1);
    const StepDiagnostics d = step_unified(st, p, linf_ball(1.0), *oracle);
    CHECK(st.w[0] == d.v[0]);
    CHECK(st.w[1] == d.v[1]);
}

TEST_CASE("one Euclidean step is normalized gradient descent") {
    const auto oracle = make_oracle(quadratic_spec({1, 4}, 0.0));
    const ParamValue w0 = ParamValue::vector({1, 1});
    OptimizerState st = init_state(w0, *oracle, 1);
    step_unified(st, plain(0.05), euclidean_ball(1.0), *oracle);
    const ParamValue g = oracle->full_grad(w0);
    const double n = norm(g, Norm::L2);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(st.w[i] == doctest::Approx(w0[i] - 0.05 * g[i] / n).epsilon(1e-14));
}

TEST_CASE("degenerate zero query reduces to weight decay") {
    const auto oracle = make_oracle(quadratic_spec({1, 1}, 0.0));
    UnifiedParams p = plain(0.5);
    p.lambda = 1.0;
    OptimizerState st = init_state(ParamValue::vector(2), *oracle, 1);
    const StepDiagnostics d = step_unified(st, p, euclidean_ball(1.0), *oracle);
    CHECK(d.zero_query);
    CHECK(norm(st.w, Norm::L2) == 0.0);
}

TEST_CASE("parameter validation") {
    UnifiedParams p = plain(0.1, 0.9, 0.5);
    CHECK_THROWS_AS(validate_params(p), std::invalid_argument); // beta1 > beta2

    p = plain(0.1, 0.5, 1.0);
    CHECK_THROWS_AS(validate_params(p), std::invalid_argument); // beta2 = 1

    p = plain(2.0);
    p.lambda = 0.6; // lambda*eta > 1
    CHECK_THROWS_AS(validate_params(p), std::invalid_argument);

    p = plain(0.1, 0.5, 0.9);
    p.alpha1 = 0.2;
    CHECK_THROWS_AS(validate_for_class(p, MethodClass::StochasticLMO), std::invalid_argument);
    CHECK_NOTHROW(validate_for_class(p, MethodClass::VarianceReduced));

    p.alpha1 = 0.0;
    p.eta1 = 0.2; // != eta2/(1-beta2) = 1.0
    CHECK_THROWS_AS(validate_for_class(p, MethodClass::IGT), std::invalid_argument);
    p.eta1 = p.eta2 / (1.0 - p.beta2);
    CHECK_NOTHROW(validate_for_class(p, MethodClass::IGT));
}

TEST_CASE("theorem schedules match their closed forms") {
    // stochastic class, sigma > 0 (T = 10^4, R = 2)
    const UnifiedParams thm1 = theorem_schedule(MethodClass::StochasticLMO, 10000, 2.0, true);
    CHECK(thm1.eta2 == doctest::Approx(5e-4).epsilon(1e-12));
    CHECK(thm1.beta2 == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(thm1.beta1 == doctest::Approx(0.9683772233983162).epsilon(1e-12));
    CHECK(thm1.alpha1 == 0.0);
    CHECK(thm1.eta1 == thm1.eta2);

    // IGT deterministic regime (T = 128, R = 1)
    const UnifiedParams cor3 = theorem_schedule(MethodClass::IGT, 128, 1.0, false);
    CHECK(cor3.eta2 == doctest::Approx(0.08838834764831843).epsilon(1e-12));
    CHECK(cor3.beta1 == doctest::Approx(0.7026982212493198).epsilon(1e-12));
    CHECK(cor3.beta2 == cor3.beta1);
    CHECK(cor3.eta1 == doctest::Approx(cor3.eta2 / (1.0 - cor3.beta2)).epsilon(1e-14));

    // variance-reduced schedule (T = 10^3, R = 1)
    const UnifiedParams cor1 = theorem_schedule(MethodClass::VarianceReduced, 1000, 1.0, true);
    CHECK(cor1.eta2 == doctest::Approx(1e-2).epsilon(1e-12));
    CHECK(cor1.beta2 == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(cor1.alpha2 == cor1.beta2);
    CHECK(cor1.alpha1 == cor1.beta1);
    CHECK(cor1.beta1 == doctest::Approx(0.9683772233983162).epsilon(1e-12));

    CHECK_THROWS_AS(theorem_schedule(MethodClass::IGT, 1, 1.0, true), std::invalid_argument);

    // beta1 override stays within the admissible interval
    const UnifiedParams o = theorem_schedule(MethodClass::StochasticLMO, 10000, 2.0, true, 0.5);
    CHECK(o.beta1 == 0.5);
    CHECK_THROWS_AS(theorem_schedule(MethodClass::StochasticLMO, 10000, 2.0, true, 0.999),
                    std::invalid_argument);
}

TEST_CASE("schedule names") {
    CHECK(schedule_name(MethodClass::StochasticLMO, true) == "thm1");
    CHECK(schedule_name(MethodClass::StochasticLMO, false) == "cor4");
    CHECK(schedule_name(MethodClass::VarianceReduced, true) == "cor1");
    CHECK(schedule_name(MethodClass::IGT, true) == "cor2");
    CHECK(schedule_name(MethodClass::IGT, false) == "cor3");
    CHECK(schedule_class("cor2") == MethodClass::IGT);
    CHECK_THROWS_AS(schedule_by_name("thm9", 100, 1.0), std::invalid_argument);
}

TEST_CASE("nesterov reparametrization") {
    CHECK(nesterov_reparam(1.0, 0.9) == doctest::Approx(0.9));
    CHECK(nesterov_reparam(0.0, 0.5) == 0.0);
    CHECK(nesterov_reparam(0.98, 0.99) == doctest::Approx(0.9702).epsilon(1e-15));
    CHECK_THROWS_AS(nesterov_reparam(1.2, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(nesterov_reparam(0.5, 1.0), std::invalid_argument);
}

TEST_CASE("muon momentum scaling factor") {
    CHECK(muon_scaling_factor(0.0) == doctest::Approx(1));
    CHECK(muon_scaling_factor(0.9) == doctest::Approx(10));
    CHECK(muon_scaling_factor(0.99) == doctest::Approx(100));
    CHECK_THROWS_AS(muon_scaling_factor(1.0), std::invalid_argument);
}

TEST_CASE("epsilon_hat") {
    CHECK(epsilon_hat_norm(ParamValue::vector({1, 0}), ParamValue::vector({0, 0})) ==
          doctest::Approx(1));
    CHECK_THROWS_AS(epsilon_hat_norm(ParamValue::vector({1, 0}), ParamValue::vector({0, 0, 0})),
                    std::invalid_argument);

    // sigma = 0, beta1 = 0: the query is the exact gradient
    const auto oracle = make_oracle(quadratic_spec({1, 4}, 0.0));
    OptimizerState st = init_state(ParamValue::vector({1, 1}), *oracle, 1);
    const StepDiagnostics d = step_unified(st, plain(0.1), euclidean_ball(1.0), *oracle);
    CHECK(epsilon_hat_norm(d.g, oracle->full_grad(ParamValue::vector({1, 1}))) == 0.0);
}

TEST_CASE("epsilon_hat drift bound on a sigma = 0 run") {
    // vanilla momentum lag obeys |eps_hat| <= beta1/(1-beta2) L eta R
    const auto oracle = make_oracle(quadratic_spec({1, 4}, 0.0));
    const LmoSet set = euclidean_ball(1.0);
    const UnifiedParams p = plain(0.01, 0.9, 0.9);
    const double cap = 0.9 / 0.1 * oracle->constants().L * p.eta2 * diameter(set) + 1e-9;

    OptimizerState st = init_state(ParamValue::vector({1, 1}), *oracle, 5);
    for (int t = 0; t < 300; ++t) {
        const ParamValue grad = oracle->full_grad(st.w);
        const StepDiagnostics d = step_unified(st, p, set, *oracle);
        CHECK(epsilon_hat_norm(d.g, grad) <= cap);
    }
}

TEST_CASE("single-gradient accounting") {
    const auto oracle = make_oracle(quadratic_spec({1, 4}, 0.5));
    const ParamValue w0 = ParamValue::vector({1, 1});

    OptimizerState st = init_state(w0, *oracle, 9);
    CHECK(oracle->eval_count() == 1); // the momentum seed
    const UnifiedParams p = plain(0.01, 0.5, 0.9);
    for (int t = 1; t <= 5; ++t) {
        step_unified(st, p, euclidean_ball(1.0), *oracle);
        CHECK(oracle->eval_count() == 1 + static_cast<std::uint64_t>(t));
    }

    const auto oracle2 = make_oracle(quadratic_spec({1, 4}, 0.5));
    OptimizerState st2 = init_state(w0, *oracle2, 9);
    UnifiedParams vr = plain(0.01, 0.5, 0.9);
    vr.alpha1 = 0.5;
    vr.alpha2 = 0.9;
    for (int t = 1; t <= 5; ++t) {
        step_unified(st2, vr, euclidean_ball(1.0), *oracle2);
        CHECK(oracle2->eval_count() == 1 + 2 * static_cast<std::uint64_t>(t));
    }
}

TEST_CASE("reduction equivalence: unified vs dedicated stochastic path") {
    const ProblemSpec spec = quadratic_spec({0.5, 1.5, 3.0, 4.0}, 0.6, 17);
    const auto o1 = make_oracle(spec);
    const auto o2 = make_oracle(spec);
    const ParamValue w0 = ParamValue::vector({1, -1, 0.5, 2});
    const LmoSet set = linf_ball(1.0);
    const UnifiedParams p = plain(0.003, 0.9, 0.99);

    OptimizerState a = init_state(w0, *o1, 31);
    OptimizerState b = init_state(w0, *o2, 31);
    for (int t = 0; t < 200; ++t) {
        step_unified(a, p, set, *o1);
        step_stochastic_lmo(b, p, set, *o2);
        for (std::size_t i = 0; i < w0.size(); ++i)
            CHECK(std::abs(a.w[i] - b.w[i]) <= 1e-12);
    }
}

TEST_CASE("reduction equivalence: step_igt vs constrained step_unified") {
    const ProblemSpec spec = quadratic_spec({0.5, 1.5, 3.0, 4.0}, 0.6, 23);
    const auto o1 = make_oracle(spec);
    const auto o2 = make_oracle(spec);
    const ParamValue w0 = ParamValue::vector({1, -1, 0.5, 2});
    const LmoSet set = euclidean_ball(1.0);
    UnifiedParams p = plain(0.003, 0.9, 0.95);
    p.eta1 = p.eta2 / (1.0 - p.beta2);

    OptimizerState a = init_state(w0, *o1, 77);
    OptimizerState b = init_state(w0, *o2, 77);
    for (int t = 0; t < 200; ++t) {
        step_unified(a, p, set, *o1);
        step_igt(b, p, set, *o2);
        for (std::size_t i = 0; i < w0.size(); ++i) {
            CHECK(std::abs(a.w[i] - b.w[i]) <= 1e-12);
            CHECK(std::abs(a.x[i] - b.x[i]) <= 1e-12);
        }
    }
}

TEST_CASE("igt geometry identities") {
    const ProblemSpec spec = quadratic_spec({1, 2, 4}, 0.4, 29);
    const auto oracle = make_oracle(spec);
    const ParamValue w0 = ParamValue::vector({1, 1, -1});
    const LmoSet set = euclidean_ball(1.0);
    UnifiedParams p = plain(0.004, 0.8, 0.9);
    p.eta1 = p.eta2 / (1.0 - p.beta2);
    const double C = p.beta2 / (1.0 - p.beta2);

    OptimizerState st = init_state(w0, *oracle, 3);
    for (int t = 0; t < 150; ++t) {
        const ParamValue w_before = st.w;
        const StepDiagnostics d = step_igt(st, p, set, *oracle);

        // x_{t+1} - w_{t+1} = (eta1 - eta2)(v_t - lambda w_t)
        const ParamValue lhs = sub(st.x, st.w);
        const ParamValue rhs = scale(sub(d.v, scale(w_before, p.lambda)), p.eta1 - p.eta2);
        CHECK(norm(sub(lhs, rhs), Norm::L2) <= 1e-12);

        // x_{t+1} = w_{t+1} + C (w_{t+1} - w_t)
        const ParamValue extr = add(st.w, scale(sub(st.w, w_before), C));
        CHECK(norm(sub(st.x, extr), Norm::L2) <= 1e-10);

        CHECK(norm(lhs, Norm::L2) <= (p.eta1 - p.eta2) * diameter(set) + 1e-12);
    }

    // beta2 = 0 degenerates to the stochastic path (x = w)
    UnifiedParams p0 = plain(0.01, 0.0, 0.0);
    OptimizerState st0 = init_state(w0, *oracle, 4);
    step_igt(st0, p0, set, *oracle);
    CHECK(norm(sub(st0.x, st0.w), Norm::L2) == 0.0);

    // beta2 = 0.5 doubles the last displacement
    UnifiedParams ph = plain(0.01, 0.5, 0.5);
    ph.eta1 = ph.eta2 / 0.5;
    OptimizerState sth = init_state(w0, *oracle, 4);
    const ParamValue before = sth.w;
    step_igt(sth, ph, set, *oracle);
    const ParamValue want = add(sth.w, sub(sth.w, before));
    CHECK(norm(sub(sth.x, want), Norm::L2) <= 1e-12);
}

TEST_CASE("nesterov query equals the two-momentum query along a shared run") {
    const ProblemSpec spec = quadratic_spec({1, 2, 4}, 0.5, 41);
    const auto oracle = make_oracle(spec);
    const ParamValue w0 = ParamValue::vector({1, -0.5, 0.8});
    const LmoSet set = euclidean_ball(1.0);

    const double bar_beta1 = 0.95, beta2 = 0.9;
    const UnifiedParams p = plain(0.005, nesterov_reparam(bar_beta1, beta2), beta2);

    auto stream = sample_stream(13);
    const SampleId xi0 = stream.next();
    OptimizerState st = init_state_with_sample(w0, *oracle, xi0);
    ParamValue m_bar = oracle->sample_grad(w0, xi0);

    for (int t = 0; t < 300; ++t) {
        const SampleId xi = t == 0 ? xi0 : stream.next();
        const ParamValue grad = oracle->sample_grad(st.x, xi);
        // approximate Nesterov: update the buffer first, then mix
        m_bar = combine({beta2, 1.0 - beta2}, {&m_bar, &grad});
        const ParamValue g_nesterov = combine({bar_beta1, 1.0 - bar_beta1}, {&m_bar, &grad});

        const StepDiagnostics d = step_with_sample(st, p, set, *oracle, xi);
        CHECK(norm(sub(g_nesterov, d.g), Norm::LInf) <= 1e-12);
    }
}

TEST_CASE("variance reduction cancels additive noise") {
    // On additive-noise problems the correction difference is deterministic,
    // so a full-correction VR run tracks the exact gradient after warm-up.
    const ProblemSpec spec = quadratic_spec({1, 2, 3, 4}, 0.8, 71);
    const auto ovr = make_oracle(spec);
    const auto ovan = make_oracle(spec);
    const ParamValue w0 = ParamValue::vector({1, 1, 1, 1});
    const LmoSet set = euclidean_ball(1.0);

    UnifiedParams vr = plain(0.002, 0.9, 0.99);
    vr.alpha1 = vr.beta1;
    vr.alpha2 = vr.beta2;
    const UnifiedParams vanilla = plain(0.002, 0.9, 0.99);

    OptimizerState svr = init_state(w0, *ovr, 19);
    OptimizerState svan = init_state(w0, *ovan, 19);
    double eps_vr = 0.0, eps_van = 0.0;
    const int T = 600;
    for (int t = 0; t < T; ++t) {
        // the same-sample gradient difference is noise-free for additive noise
        const SampleId xi = 1000 + t;
        const ParamValue zeta =
            sub(sub(ovr->sample_grad(svr.x, xi), ovr->sample_grad(svr.x_prev, xi)),
                sub(ovr->full_grad(svr.x), ovr->full_grad(svr.x_prev)));
        CHECK(norm(zeta, Norm::L2) <= 1e-13);

        const ParamValue gv = ovr->full_grad(svr.w);
        const ParamValue gn = ovan->full_grad(svan.w);
        const StepDiagnostics dvr = step_unified(svr, vr, set, *ovr);
        const StepDiagnostics dvan = step_unified(svan, vanilla, set, *ovan);
        if (t >= T / 2) {
            eps_vr += epsilon_hat_norm(dvr.g, gv);
            eps_van += epsilon_hat_norm(dvan.g, gn);
        }
    }
    CHECK(eps_vr < 0.25 * eps_van);
}

TEST_CASE("feasibility under weight decay") {
    // with lambda > 0 and w0 in P, lambda * w_t stays in C
    const ProblemSpec spec = quadratic_spec({1, 3}, 0.5, 51);
    const auto oracle = make_oracle(spec);
    const LmoSet set = linf_ball(1.0);
    UnifiedParams p = plain(0.05, 0.9, 0.99);
    p.lambda = 2.0; // P is the linf ball of radius 0.5
    const ParamValue w0 = ParamValue::vector({0.25, -0.25});

    OptimizerState st = init_state(w0, *oracle, 6);
    for (int t = 0; t < 200; ++t) {
        step_unified(st, p, set, *oracle);
        CHECK(set_norm(set, scale(st.w, p.lambda)) <= set.radius + 1e-12);
    }
}

TEST_CASE("grouped optimizer matches per-group single runs and shares samples") {
    const ProblemSpec spec_a = quadratic_spec({1, 4}, 0.5, 61);
    ProblemSpec spec_b;
    spec_b.kind = ProblemKind::MatrixQuadratic;
    spec_b.rows = 3;
    spec_b.cols = 2;
    spec_b.sigma = 0.3;
    spec_b.seed = 62;
    spec_b.target_seed = 5;

    const auto oa = make_oracle(spec_a);
    const auto ob = make_oracle(spec_b);
    const ParamValue wa = ParamValue::vector({1, 1});
    const ParamValue wb = ParamValue::matrix(3, 2);

    const UnifiedParams p = plain(0.01, 0.8, 0.9);
    GroupedOptimizer opt({{wa, linf_ball(1.0), oa.get()}, {wb, operator_norm_ball(1.0), ob.get()}},
                         99);

    // reference: single-group runs driven by the same seed
    const auto oa2 = make_oracle(spec_a);
    const auto ob2 = make_oracle(spec_b);
    OptimizerState ra = init_state(wa, *oa2, 99);
    OptimizerState rb = init_state(wb, *ob2, 99);

    for (int t = 0; t < 50; ++t) {
        opt.step(p);
        step_unified(ra, p, linf_ball(1.0), *oa2);
        step_unified(rb, p, operator_norm_ball(1.0), *ob2);
        const auto& groups = opt.groups();
        CHECK(norm(sub(groups[0].state.w, ra.w), Norm::L2) == 0.0);
        CHECK(norm(sub(groups[1].state.w, rb.w), Norm::L2) == 0.0);
    }
}
