#include "lmoopt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <sstream>
#include <stdexcept>

namespace lmoopt {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::uint64_t now_ns(const std::chrono::steady_clock::time_point& start) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                             start)
            .count());
}

std::vector<RunTrace> run_seeds(const RunConfig& config) {
    std::vector<std::future<RunTrace>> futures;
    futures.reserve(config.seeds);
    for (std::size_t i = 0; i < config.seeds; ++i) {
        RunConfig c = config;
        c.seed = config.seed + i;
        c.seeds = 1;
        futures.push_back(std::async(std::launch::async, [c] { return run(c); }));
    }
    std::vector<RunTrace> out;
    out.reserve(config.seeds);
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

std::string problem_key(const ProblemSpec& s) {
    std::ostringstream os;
    os << static_cast<int>(s.kind) << ':' << s.seed << ':' << s.dim << ':' << s.sigma << ':'
       << s.coupling << ':' << static_cast<int>(s.noise) << ':' << s.rows << ':' << s.cols << ':'
       << s.target_seed << ':' << s.num_samples << ':' << s.batch;
    for (double e : s.eigenvalues) os << ',' << e;
    if (s.w0) {
        os << ";w0";
        for (double v : *s.w0) os << ',' << v;
    }
    return os.str();
}

} // namespace

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

ProblemConstants constants_for(const RunConfig& config) {
    const auto oracle = make_oracle(config.problem);
    ProblemConstants c = oracle->constants();
    const ParamValue w0 = start_point(config.problem, *oracle);
    c.delta_F = oracle->loss(w0) - c.F_star;
    return c;
}

std::string resolved_schedule_name(const RunConfig& config, const ProblemConstants& constants) {
    if (config.method.params) return "explicit";
    if (config.method.schedule.empty() || config.method.schedule == "auto")
        return schedule_name(config.method.cls, constants.sigma > 0.0);
    return config.method.schedule;
}

double analysis_diameter(const RunConfig& config) {
    return euclidean_diameter(config.method.set, shape_of(config.problem));
}

UnifiedParams resolve_params(const RunConfig& config, const ProblemConstants& constants) {
    if (config.method.params) {
        validate_for_class(*config.method.params, config.method.cls);
        return *config.method.params;
    }
    const std::string name = resolved_schedule_name(config, constants);
    require(schedule_class(name) == config.method.cls,
            "schedule '" + name + "' does not match method class " + to_string(config.method.cls));
    return schedule_by_name(name, config.T, analysis_diameter(config));
}

RunTrace run(const RunConfig& config) {
    require(config.T >= 1, "run: T must be at least 1");
    require(config.stride >= 1, "run: stride must be at least 1");

    const auto start_time = std::chrono::steady_clock::now();
    const auto oracle = make_oracle(config.problem);
    const ParamValue w0 = start_point(config.problem, *oracle);

    ProblemConstants constants = oracle->constants();
    constants.delta_F = oracle->loss(w0) - constants.F_star;
    const UnifiedParams params = resolve_params(config, constants);

    const LmoSet& set = config.method.set;
    OptimizerState state = init_state(w0, *oracle, config.seed);

    RunTrace trace;
    trace.params = params;
    trace.cls = config.method.cls;
    trace.diameter = analysis_diameter(config);
    trace.T = config.T;
    trace.seed = config.seed;

    ParamValue prev_w = state.w;
    double rsf_sum = 0.0;

    for (std::size_t t = 0; t < config.T; ++t) {
        const double loss_t = oracle->loss(state.w);
        const ParamValue grad_t = oracle->full_grad(state.w);
        const double psi = rsf(set, params.lambda, state.w, grad_t).value;
        rsf_sum += psi;

        const bool record = (t % config.stride == 0);
        TraceRow row;
        if (record) {
            row.t = t;
            row.loss = loss_t;
            row.grad_norm = norm(grad_t, Norm::L2);
            row.rsf = psi;
            row.step_norm = t == 0 ? 0.0 : norm(sub(state.w, prev_w), Norm::L2);
            row.grad_evals = oracle->eval_count();
        }
        prev_w = state.w;

        StepDiagnostics diag;
        try {
            diag = step_unified(state, params, set, *oracle);
        } catch (const std::exception& e) {
            throw std::runtime_error("run: step " + std::to_string(t) + ": " + e.what());
        }
        if (diag.zero_query) ++trace.zero_query_steps;

        if (record) {
            row.eps_hat = epsilon_hat_norm(diag.g, grad_t);
            row.wall_ns = now_ns(start_time);
            trace.rows.push_back(std::move(row));
        }
    }

    // final state, always recorded
    {
        const ParamValue grad_T = oracle->full_grad(state.w);
        TraceRow row;
        row.t = config.T;
        row.loss = oracle->loss(state.w);
        row.grad_norm = norm(grad_T, Norm::L2);
        row.rsf = rsf(set, params.lambda, state.w, grad_T).value;
        row.step_norm = norm(sub(state.w, prev_w), Norm::L2);
        row.grad_evals = oracle->eval_count();
        row.wall_ns = now_ns(start_time);
        trace.final_loss = row.loss;
        trace.rows.push_back(std::move(row));
    }

    trace.avg_rsf = rsf_sum / static_cast<double>(config.T);
    trace.grad_evals = oracle->eval_count();
    trace.wall_ns = now_ns(start_time);
    return trace;
}

double theorem_bound(MethodClass cls, const ProblemConstants& constants, double R, std::size_t T,
                     const UnifiedParams& p) {
    validate_for_class(p, cls);
    require(T >= 1, "theorem_bound: T must be positive");
    require(R > 0.0, "theorem_bound: diameter must be positive");

    const double Td = static_cast<double>(T);
    const double eta = p.eta2;
    const double om2 = 1.0 - p.beta2;
    const double lead = constants.delta_F / (Td * eta);
    const double noise =
        R * constants.sigma *
        ((1.0 - p.beta1) + p.beta1 * std::sqrt(om2) + p.beta1 / (Td * om2) + 1.0 / Td);

    switch (cls) {
    case MethodClass::StochasticLMO:
        return lead + noise + constants.L * R * R * eta * (p.beta1 / om2 + 0.5);
    case MethodClass::VarianceReduced:
        return lead + noise +
               constants.L * R * R * eta *
                   (std::abs(p.beta1 - p.alpha1) + p.beta1 * std::abs(p.beta2 - p.alpha2) / om2 +
                    std::abs(p.alpha1) + p.beta1 * std::abs(p.alpha2) / std::sqrt(om2) + 0.5);
    case MethodClass::IGT:
        return lead + noise +
               constants.L * R * R * eta * ((p.beta2 - p.beta1) / om2 + 0.5) +
               constants.rho * R * R * R * eta * eta *
                   (p.beta1 / om2 + p.beta2 * p.beta2 / (om2 * om2));
    }
    throw std::invalid_argument("theorem_bound: unknown class");
}

TheoremCertificate certify(const RunConfig& config, double slack) {
    const ProblemConstants constants = constants_for(config);
    const UnifiedParams params = resolve_params(config, constants);
    const bool stochastic = constants.sigma > 0.0;
    require(!stochastic || config.seeds >= 10,
            "certify: stochastic problems need at least 10 seeds");

    TheoremCertificate cert;
    cert.cls = config.method.cls;
    cert.schedule = resolved_schedule_name(config, constants);
    cert.seeds = config.seeds;
    cert.sigma = constants.sigma;
    cert.sigma_is_estimate = constants.sigma_is_estimate;
    cert.delta_F = constants.delta_F;
    cert.slack = stochastic ? slack : 0.0;
    cert.bound_value =
        theorem_bound(config.method.cls, constants, analysis_diameter(config), config.T, params);

    for (const RunTrace& t : run_seeds(config)) cert.per_seed_avg_rsf.push_back(t.avg_rsf);
    cert.empirical_mean = mean_of(cert.per_seed_avg_rsf);
    const double std_err = cert.per_seed_avg_rsf.size() > 1
                               ? sample_std(cert.per_seed_avg_rsf) /
                                     std::sqrt(static_cast<double>(cert.per_seed_avg_rsf.size()))
                               : 0.0;
    cert.mean_upper95 = cert.empirical_mean + 1.645 * std_err;
    cert.pass = cert.empirical_mean <= cert.bound_value * (1.0 + cert.slack) + 1e-9;
    return cert;
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& points) {
    require(points.size() >= 2, "rate_fit: need at least two points");
    RateFit fit;
    fit.points = points;

    std::vector<double> xs, ys;
    for (const auto& [T, v] : points) {
        require(T > 0.0 && v > 0.0, "rate_fit: points must be positive for the log-log fit");
        xs.push_back(std::log(T));
        ys.push_back(std::log(v));
    }
    const double xm = mean_of(xs), ym = mean_of(ys);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xm) * (xs[i] - xm);
        sxy += (xs[i] - xm) * (ys[i] - ym);
        syy += (ys[i] - ym) * (ys[i] - ym);
    }
    require(sxx > 0.0, "rate_fit: need at least two distinct horizons");
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    double ssr = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ssr += r * r;
    }
    fit.r2 = syy == 0.0 ? 1.0 : 1.0 - ssr / syy;
    return fit;
}

namespace {

struct LemmaRun {
    std::string problem;
    ProblemSpec spec;
    MethodClass cls;
    std::string schedule;
};

// Manual stepping loop used by the lemma checks: exposes xi_t, the query and
// both points of every step, and allows a tampered step size.
struct SteppedQuantities {
    std::vector<double> step_norms;       // |w_{t+1} - w_t|
    std::vector<double> descent_margins;  // slack left in the descent rule
    std::vector<double> extrap_residual;  // |x_{t+1}-w_{t+1}-C(w_{t+1}-w_t)|
    std::vector<double> extrap_norm_gap;  // (eta1-eta2) R - |x_t - w_t|
    std::vector<ParamValue> noise;        // grad f(x_t;xi_t) - grad F(x_t)
};

SteppedQuantities stepped_run(const ProblemSpec& spec, const LmoSet& set, const UnifiedParams& p,
                              std::size_t T, std::uint64_t seed, double fault_scale,
                              bool record_noise) {
    const auto oracle = make_oracle(spec);
    const ParamValue w0 = start_point(spec, *oracle);
    const double R = euclidean_diameter(set, w0);
    const double L = oracle->constants().L;

    UnifiedParams stepped = p;
    stepped.eta2 *= fault_scale; // nominal p is what the checks assume

    auto stream = sample_stream(seed);
    const SampleId xi0 = stream.next();
    OptimizerState st = init_state_with_sample(w0, *oracle, xi0);

    SteppedQuantities q;
    for (std::size_t t = 0; t < T; ++t) {
        const SampleId xi = t == 0 ? xi0 : stream.next();
        const ParamValue w_t = st.w;
        const double loss_t = oracle->loss(w_t);
        const ParamValue grad_t = oracle->full_grad(w_t);
        const double psi_t = rsf(set, p.lambda, w_t, grad_t).value;

        if (record_noise)
            q.noise.push_back(sub(oracle->sample_grad(st.x, xi), oracle->full_grad(st.x)));

        const StepDiagnostics diag = step_with_sample(st, stepped, set, *oracle, xi);

        const double step_norm = norm(sub(st.w, w_t), Norm::L2);
        q.step_norms.push_back(step_norm);

        const double eps = epsilon_hat_norm(diag.g, grad_t);
        const double rhs =
            loss_t - p.eta2 * psi_t + p.eta2 * R * eps + 0.5 * L * p.eta2 * p.eta2 * R * R;
        q.descent_margins.push_back(rhs - oracle->loss(st.w));

        const double C = p.beta2 / (1.0 - p.beta2);
        ParamValue lhs = sub(sub(st.x, st.w), scale(sub(st.w, w_t), C));
        q.extrap_residual.push_back(norm(lhs, Norm::L2));
        q.extrap_norm_gap.push_back((p.eta1 - p.eta2) * R - norm(sub(st.x, st.w), Norm::L2));
    }
    return q;
}

LemmaCheck check_step_geometry(const LemmaRun& lr, double fault_scale) {
    const LmoSet set = euclidean_ball(1.0);
    RunConfig cfg{lr.spec, MethodSpec{lr.cls, set, std::nullopt, lr.schedule}, 256, 11, 1, 1};
    const ProblemConstants c = constants_for(cfg);
    const UnifiedParams p = resolve_params(cfg, c);
    const auto q = stepped_run(lr.spec, set, p, cfg.T, cfg.seed, fault_scale, false);

    double worst = 0.0;
    const double R = euclidean_diameter(set, shape_of(lr.spec));
    for (double s : q.step_norms) worst = std::max(worst, s - p.eta2 * R);
    LemmaCheck out{"step_geometry", lr.problem + "/" + to_string(lr.cls), worst <= 1e-12, -worst,
                   ""};
    std::ostringstream os;
    os << "max(|w_{t+1}-w_t| - eta2*R) = " << worst;
    out.detail = os.str();
    return out;
}

LemmaCheck check_descent(const LemmaRun& lr) {
    const LmoSet set = euclidean_ball(1.0);
    RunConfig cfg{lr.spec, MethodSpec{lr.cls, set, std::nullopt, lr.schedule}, 400, 5, 1, 1};
    const ProblemConstants c = constants_for(cfg);
    const UnifiedParams p = resolve_params(cfg, c);
    const auto q = stepped_run(lr.spec, set, p, cfg.T, cfg.seed, 1.0, false);

    double worst = *std::min_element(q.descent_margins.begin(), q.descent_margins.end());
    LemmaCheck out{"descent_rule", lr.problem + "/" + to_string(lr.cls), worst >= -1e-9, worst, ""};
    std::ostringstream os;
    os << "min descent margin = " << worst;
    out.detail = os.str();
    return out;
}

LemmaCheck check_extrapolation(const LemmaRun& lr) {
    const LmoSet set = euclidean_ball(1.0);
    RunConfig cfg{lr.spec, MethodSpec{MethodClass::IGT, set, std::nullopt, lr.schedule}, 300, 7, 1,
                  1};
    const ProblemConstants c = constants_for(cfg);
    const UnifiedParams p = resolve_params(cfg, c);
    const auto q = stepped_run(lr.spec, set, p, cfg.T, cfg.seed, 1.0, false);

    double worst_res = 0.0, worst_gap = 0.0;
    for (double r : q.extrap_residual) worst_res = std::max(worst_res, r);
    for (double g : q.extrap_norm_gap) worst_gap = std::min(g, worst_gap);
    const bool pass = worst_res <= 1e-10 && worst_gap >= -1e-12;
    LemmaCheck out{"igt_extrapolation", lr.problem, pass, std::min(1e-10 - worst_res, worst_gap),
                   ""};
    std::ostringstream os;
    os << "max identity residual = " << worst_res << ", min ((eta1-eta2)R - |x-w|) = " << worst_gap;
    out.detail = os.str();
    return out;
}

LemmaCheck check_second_order_remainder(const std::string& name, const ProblemSpec& spec) {
    const auto oracle = make_oracle(spec);
    const double rho = oracle->constants().rho;
    const ParamValue w0 = oracle->default_start();

    double worst = 0.0; // max violation of |Z| <= rho |x-y|^2
    for (std::size_t trial = 0; trial < 200; ++trial) {
        ParamValue x = ParamValue::zeros_like(w0), y = ParamValue::zeros_like(w0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = 2.0 * rng::normal(991, trial, i, 1);
            y[i] = 2.0 * rng::normal(991, trial, i, 2);
        }
        const ParamValue d = sub(x, y);
        const ParamValue z = sub(sub(oracle->full_grad(x), oracle->full_grad(y)),
                                 oracle->hessian_vec(y, d));
        const double lhs = norm(z, Norm::L2);
        const double rhs = rho * dot(d, d);
        worst = std::max(worst, lhs - rhs);
    }
    LemmaCheck out{"second_order_remainder", name, worst <= 1e-10, -worst, ""};
    std::ostringstream os;
    os << "max(|Z(x,y)| - rho*|x-y|^2) = " << worst;
    out.detail = os.str();
    return out;
}

LemmaCheck check_martingale(const ProblemSpec& spec) {
    const double beta1 = 0.9, beta2 = 0.99;
    const std::size_t t_check = 50, num_seeds = 200;
    UnifiedParams p;
    p.beta1 = beta1;
    p.beta2 = beta2;
    p.eta1 = p.eta2 = 1e-3;
    const LmoSet set = euclidean_ball(1.0);
    const double sigma = make_oracle(spec)->constants().sigma;

    double acc = 0.0;
    for (std::size_t s = 0; s < num_seeds; ++s) {
        const auto q = stepped_run(spec, set, p, t_check + 1, 1000 + s, 1.0, true);
        // N_t = beta1 beta2^{t-1} eps_0 + beta1(1-beta2) sum beta2^{t-1-s} eps_s
        //       + (1-beta1) eps_t
        ParamValue n = scale(q.noise[0], beta1 * std::pow(beta2, static_cast<double>(t_check - 1)));
        for (std::size_t u = 1; u + 1 <= t_check; ++u)
            n = add(n, scale(q.noise[u], beta1 * (1.0 - beta2) *
                                             std::pow(beta2, static_cast<double>(t_check - 1 - u))));
        n = add(n, scale(q.noise[t_check], 1.0 - beta1));
        acc += dot(n, n) / static_cast<double>(num_seeds);
    }

    const double bound = (beta1 * beta1 * std::pow(beta2, 2.0 * t_check - 2.0) +
                          beta1 * beta1 * (1.0 - beta2) + (1.0 - beta1) * (1.0 - beta1)) *
                         sigma * sigma;
    const bool pass = acc <= 1.1 * bound;
    LemmaCheck out{"martingale_second_moment", "noisy_quadratic", pass, 1.1 * bound - acc, ""};
    std::ostringstream os;
    os << "empirical E|N_t|^2 = " << acc << ", lemma bound = " << bound << " (t = " << t_check
       << ", seeds = " << num_seeds << ")";
    out.detail = os.str();
    return out;
}

} // namespace

std::vector<LemmaCheck> verify_suite(const VerifyOptions& opts) {
    ProblemSpec quad_noisy;
    quad_noisy.kind = ProblemKind::NoisyQuadratic;
    quad_noisy.dim = 8;
    quad_noisy.eigenvalues = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
    quad_noisy.sigma = 0.5;
    quad_noisy.seed = 21;

    ProblemSpec quad_exact = quad_noisy;
    quad_exact.sigma = 0.0;

    ProblemSpec noncvx;
    noncvx.kind = ProblemKind::NonconvexSmooth;
    noncvx.dim = 6;
    noncvx.coupling = 0.5;
    noncvx.sigma = 0.0;
    noncvx.seed = 22;

    std::vector<LemmaCheck> report;

    for (const LemmaRun& lr : {
             LemmaRun{"noisy_quadratic", quad_noisy, MethodClass::StochasticLMO, "thm1"},
             LemmaRun{"noisy_quadratic", quad_noisy, MethodClass::IGT, "cor2"},
             LemmaRun{"noisy_quadratic", quad_noisy, MethodClass::VarianceReduced, "cor1"},
             LemmaRun{"nonconvex_smooth", noncvx, MethodClass::StochasticLMO, "cor4"},
         })
        report.push_back(check_step_geometry(lr, opts.step_fault_scale));

    for (const LemmaRun& lr : {
             LemmaRun{"quadratic_sigma0", quad_exact, MethodClass::StochasticLMO, "cor4"},
             LemmaRun{"quadratic_sigma0", quad_exact, MethodClass::IGT, "cor3"},
             LemmaRun{"nonconvex_sigma0", noncvx, MethodClass::StochasticLMO, "cor4"},
             LemmaRun{"nonconvex_sigma0", noncvx, MethodClass::IGT, "cor3"},
         })
        report.push_back(check_descent(lr));

    report.push_back(check_extrapolation(LemmaRun{"noisy_quadratic", quad_noisy, MethodClass::IGT,
                                                  "cor2"}));
    report.push_back(check_extrapolation(LemmaRun{"nonconvex_sigma0", noncvx, MethodClass::IGT,
                                                  "cor3"}));

    report.push_back(check_second_order_remainder("noisy_quadratic", quad_noisy));
    report.push_back(check_second_order_remainder("nonconvex_smooth", noncvx));

    {
        ProblemSpec mart = quad_noisy;
        mart.dim = 10;
        mart.eigenvalues.clear();
        report.push_back(check_martingale(mart));
    }

    return report;
}

std::vector<CompareRow> compare(const std::vector<RunConfig>& configs) {
    require(!configs.empty(), "compare: empty config list");
    const std::string key = problem_key(configs.front().problem);
    for (const RunConfig& c : configs) {
        require(problem_key(c.problem) == key, "compare: configs must share the problem");
        require(c.T == configs.front().T, "compare: configs must share the horizon");
    }

    std::vector<CompareRow> rows;
    for (const RunConfig& c : configs) {
        const ProblemConstants constants = constants_for(c);
        std::vector<double> avg, fin;
        std::uint64_t evals = 0;
        double wall = 0.0;
        const auto traces = run_seeds(c);
        for (const RunTrace& t : traces) {
            avg.push_back(t.avg_rsf);
            fin.push_back(t.final_loss);
            if (evals == 0) evals = t.grad_evals;
            require(evals == t.grad_evals, "compare: evaluation counts differ across seeds");
            wall += static_cast<double>(t.wall_ns) * 1e-9;
        }
        rows.push_back(CompareRow{c.method.cls, resolved_schedule_name(c, constants), mean_of(avg),
                                  sample_std(avg), mean_of(fin), sample_std(fin), evals, wall});
    }
    return rows;
}

} // namespace lmoopt
