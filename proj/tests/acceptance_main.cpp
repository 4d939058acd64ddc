// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Each criterion pins its tolerances in code.

#include "lmoopt/config.hpp"
#include "lmoopt/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace lmoopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

ParamValue random_query(const LmoSet& set, std::uint64_t seed) {
    if (set.geometry == Geometry::OperatorNorm) {
        ParamValue m = ParamValue::matrix(5, 3);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng::normal(seed, i, 0, 90);
        return m;
    }
    ParamValue v = ParamValue::vector(8);
    for (std::size_t i = 0; i < 8; ++i) v[i] = rng::normal(seed, i, 0, 91);
    return v;
}

ProblemSpec seeded_noisy_quadratic(double sigma, std::size_t dim = 10,
                                   std::uint64_t seed = 101) {
    ProblemSpec s;
    s.kind = ProblemKind::NoisyQuadratic;
    s.dim = dim;
    s.sigma = sigma;
    s.seed = seed;
    return s;
}

// ---------------------------------------------------------------- criterion 1
Outcome lmo_correctness() {
    Outcome out;
    double worst_dual = 0.0, worst_bf = -1e300;
    for (const LmoSet& set : {euclidean_ball(1.0), linf_ball(1.0), operator_norm_ball(1.0)}) {
        for (std::uint64_t trial = 0; trial < 100; ++trial) {
            const ParamValue g = random_query(set, 4000 + trial);
            const double ip = dot(g, lmo(set, g));
            const double dual = -support_value(set, scale(g, -1.0));
            worst_dual = std::max(worst_dual, std::abs(ip - dual));
            const double bf = dot(g, lmo_bruteforce(set, g, 10000, 60 + trial));
            worst_bf = std::max(worst_bf, ip - bf);
        }
    }
    out.pass = worst_dual <= 1e-10 && worst_bf <= 1e-9;
    std::ostringstream os;
    os << "max |<g,lmo> + h_C(-g)| = " << worst_dual << ", max (lmo - bruteforce) = " << worst_bf;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 2
Outcome reduction_equivalences() {
    Outcome out;
    const ProblemSpec spec = seeded_noisy_quadratic(0.6, 6, 55);
    const ParamValue w0 = make_oracle(spec)->default_start();
    double worst = 0.0;

    {
        const auto o1 = make_oracle(spec);
        const auto o2 = make_oracle(spec);
        UnifiedParams p;
        p.beta1 = 0.9;
        p.beta2 = 0.99;
        p.eta1 = p.eta2 = 0.002;
        OptimizerState a = init_state(w0, *o1, 7);
        OptimizerState b = init_state(w0, *o2, 7);
        for (int t = 0; t < 1000; ++t) {
            step_unified(a, p, linf_ball(1.0), *o1);
            step_stochastic_lmo(b, p, linf_ball(1.0), *o2);
            worst = std::max(worst, norm(sub(a.w, b.w), Norm::LInf));
        }
    }
    {
        const auto o1 = make_oracle(spec);
        const auto o2 = make_oracle(spec);
        UnifiedParams p;
        p.beta1 = 0.9;
        p.beta2 = 0.95;
        p.eta2 = 0.002;
        p.eta1 = p.eta2 / (1.0 - p.beta2);
        OptimizerState a = init_state(w0, *o1, 9);
        OptimizerState b = init_state(w0, *o2, 9);
        for (int t = 0; t < 1000; ++t) {
            step_unified(a, p, euclidean_ball(1.0), *o1);
            step_igt(b, p, euclidean_ball(1.0), *o2);
            worst = std::max(worst, norm(sub(a.w, b.w), Norm::LInf));
            worst = std::max(worst, norm(sub(a.x, b.x), Norm::LInf));
        }
    }
    out.pass = worst <= 1e-12;
    out.detail = "max per-coordinate deviation over 1000 steps = " + format_double(worst);
    return out;
}

// ---------------------------------------------------------------- criterion 3
Outcome nesterov_equivalence() {
    Outcome out;
    const ProblemSpec spec = seeded_noisy_quadratic(0.5, 6, 77);
    const auto oracle = make_oracle(spec);
    const ParamValue w0 = oracle->default_start();
    const LmoSet set = euclidean_ball(1.0);

    const double bar_beta1 = 0.98, beta2 = 0.95;
    UnifiedParams p;
    p.beta1 = nesterov_reparam(bar_beta1, beta2);
    p.beta2 = beta2;
    p.eta1 = p.eta2 = 0.002;

    auto stream = sample_stream(21);
    const SampleId xi0 = stream.next();
    OptimizerState st = init_state_with_sample(w0, *oracle, xi0);
    ParamValue m_bar = oracle->sample_grad(w0, xi0);

    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const SampleId xi = t == 0 ? xi0 : stream.next();
        const ParamValue grad = oracle->sample_grad(st.x, xi);
        m_bar = combine({beta2, 1.0 - beta2}, {&m_bar, &grad});
        const ParamValue g_nesterov = combine({bar_beta1, 1.0 - bar_beta1}, {&m_bar, &grad});
        const StepDiagnostics d = step_with_sample(st, p, set, *oracle, xi);
        worst = std::max(worst, norm(sub(g_nesterov, d.g), Norm::LInf));
    }
    out.pass = worst <= 1e-12;
    out.detail = "max query deviation over 1000 steps = " + format_double(worst);
    return out;
}

// ---------------------------------------------------------------- criterion 4
Outcome lemma_suite() {
    Outcome out;
    const std::vector<LemmaCheck> checks = verify_suite();
    std::size_t failed = 0;
    std::ostringstream os;
    for (const LemmaCheck& c : checks) {
        if (!c.pass) {
            ++failed;
            os << " [" << c.lemma << " on " << c.problem << ": " << c.detail << "]";
        }
    }
    out.pass = failed == 0;
    out.detail = std::to_string(checks.size()) + " lemma checks" +
                 (failed ? " with failures:" + os.str() : ", all hold");
    return out;
}

// ---------------------------------------------------------------- criterion 5
Outcome deterministic_certificates() {
    Outcome out;
    ProblemSpec noncvx;
    noncvx.kind = ProblemKind::NonconvexSmooth;
    noncvx.dim = 8;
    noncvx.coupling = 0.5;
    noncvx.sigma = 0.0;
    noncvx.seed = 13;

    std::ostringstream os;
    for (const auto& [spec, label] :
         std::vector<std::pair<ProblemSpec, std::string>>{{seeded_noisy_quadratic(0.0), "quadratic"},
                                                          {noncvx, "nonconvex"}}) {
        for (const std::string& schedule : {std::string("cor4"), std::string("cor3")}) {
            RunConfig c;
            c.problem = spec;
            c.method.cls = schedule_class(schedule);
            c.method.schedule = schedule;
            c.method.set = euclidean_ball(1.0);
            c.T = 1 << 14;
            c.seed = 5;
            const TheoremCertificate cert = certify(c);
            os << label << "/" << schedule << ": " << format_double(cert.empirical_mean)
               << " <= " << format_double(cert.bound_value) << (cert.pass ? " ok; " : " FAIL; ");
            out.pass = out.pass && cert.pass;
        }
    }
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 6
Outcome stochastic_certificates() {
    Outcome out;
    std::ostringstream os;
    for (const std::string& schedule :
         {std::string("thm1"), std::string("cor1"), std::string("cor2")}) {
        RunConfig c;
        c.problem = seeded_noisy_quadratic(0.5);
        c.method.cls = schedule_class(schedule);
        c.method.schedule = schedule;
        c.method.set = euclidean_ball(1.0);
        c.T = 1 << 14;
        c.seed = 40;
        c.seeds = 20;
        const TheoremCertificate cert = certify(c, 0.05);
        os << schedule << ": mean " << format_double(cert.empirical_mean) << " vs bound "
           << format_double(cert.bound_value) << (cert.pass ? " ok; " : " FAIL; ");
        out.pass = out.pass && cert.pass;
    }
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 7
Outcome hierarchy_ordering() {
    Outcome out;
    const std::size_t T = 10000;
    std::vector<RunConfig> configs;
    for (const std::string& schedule :
         {std::string("thm1"), std::string("cor2"), std::string("cor1")}) {
        RunConfig c;
        c.problem = seeded_noisy_quadratic(0.5);
        c.method.cls = schedule_class(schedule);
        c.method.schedule = schedule;
        c.method.set = euclidean_ball(1.0);
        c.T = T;
        c.seed = 70;
        c.seeds = 10;
        configs.push_back(c);
    }
    const std::vector<CompareRow> rows = compare(configs);
    const CompareRow& vanilla = rows[0];
    const CompareRow& igt = rows[1];
    const CompareRow& vr = rows[2];

    const bool order = igt.avg_rsf_mean <= vanilla.avg_rsf_mean &&
                       vr.avg_rsf_mean <= vanilla.avg_rsf_mean;
    const bool counts = vanilla.grad_evals == T + 1 && igt.grad_evals == T + 1 &&
                        vr.grad_evals == 2 * T + 1;
    out.pass = order && counts;
    std::ostringstream os;
    os << "mean avg-RSF: stochastic " << vanilla.avg_rsf_mean << ", igt " << igt.avg_rsf_mean
       << ", vr " << vr.avg_rsf_mean << "; grad evals " << vanilla.grad_evals << "/"
       << igt.grad_evals << "/" << vr.grad_evals;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 8
Outcome rate_direction() {
    Outcome out;
    std::vector<std::pair<double, double>> points;
    for (int k = 10; k <= 16; ++k) {
        RunConfig c;
        c.problem = seeded_noisy_quadratic(0.5);
        c.method.cls = MethodClass::StochasticLMO;
        c.method.schedule = "thm1";
        c.method.set = euclidean_ball(1.0);
        c.T = std::size_t(1) << k;
        c.seed = 90;
        c.seeds = 6;

        std::vector<double> avg;
        for (std::size_t i = 0; i < c.seeds; ++i) {
            RunConfig ci = c;
            ci.seed = c.seed + i;
            ci.seeds = 1;
            avg.push_back(run(ci).avg_rsf);
        }
        points.emplace_back(static_cast<double>(c.T), mean_of(avg));
    }
    const RateFit fit = rate_fit(points);
    out.pass = fit.slope <= -0.20 && fit.r2 >= 0.9;
    std::ostringstream os;
    os << "slope = " << fit.slope << ", r2 = " << fit.r2;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------- criterion 9
Outcome assumption_conformance() {
    Outcome out;
    std::ostringstream os;

    struct Entry {
        std::string name;
        std::unique_ptr<StochasticOracle> oracle;
    };
    std::vector<Entry> entries;
    entries.push_back({"quadratic_additive",
                       make_noisy_quadratic(10, {1, 1.25, 1.5, 1.75, 2, 2.5, 3, 3.5, 3.75, 4},
                                            NoiseModel::Additive, 0.5, 31)});
    entries.push_back({"quadratic_coordinatewise",
                       make_noisy_quadratic(10, {1, 1.25, 1.5, 1.75, 2, 2.5, 3, 3.5, 3.75, 4},
                                            NoiseModel::Coordinatewise, 0.5, 32)});
    entries.push_back({"nonconvex_smooth", make_nonconvex_smooth(8, 0.5, 0.4, 33)});
    entries.push_back({"matrix_quadratic", make_matrix_quadratic(4, 3, 7, 0.3, 34)});
    entries.push_back({"logistic_finite_sum", make_logistic_finite_sum(64, 6, 8, 35)});

    for (const Entry& e : entries) {
        const StochasticOracle& o = *e.oracle;
        const double sigma = o.constants().sigma;
        const double L = o.constants().L;

        // Assumption 2: empirical variance at 20 random points, 1e5 samples
        double worst_ratio = 0.0;
        for (std::uint64_t pt = 0; pt < 20; ++pt) {
            ParamValue w = ParamValue::zeros_like(o.default_start());
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng::normal(7000 + pt, i, 0, 92);
            const ParamValue g = o.full_grad(w);
            double acc = 0.0;
            const std::size_t n = 100000;
            for (std::size_t s = 0; s < n; ++s) {
                const ParamValue d = sub(o.sample_grad(w, s), g);
                acc += dot(d, d) / static_cast<double>(n);
            }
            if (sigma > 0.0) worst_ratio = std::max(worst_ratio, acc / (sigma * sigma));
        }
        if (worst_ratio > 1.02) {
            out.pass = false;
            os << e.name << ": A2 ratio " << worst_ratio << " > 1.02; ";
        }

        // Assumption 1: exact-gradient Lipschitz on 1e3 pairs
        for (std::uint64_t pair = 0; pair < 1000; ++pair) {
            ParamValue x = ParamValue::zeros_like(o.default_start());
            ParamValue y = ParamValue::zeros_like(o.default_start());
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = 1.5 * rng::normal(7100 + pair, i, 0, 93);
                y[i] = 1.5 * rng::normal(7200 + pair, i, 0, 94);
            }
            const double lhs = norm(sub(o.full_grad(x), o.full_grad(y)), Norm::L2);
            if (lhs > L * norm(sub(x, y), Norm::L2) + 1e-9) {
                out.pass = false;
                os << e.name << ": A1 violated; ";
                break;
            }
        }

        // finite differences of the loss agree with the gradient
        for (std::uint64_t pt = 0; pt < 20; ++pt) {
            ParamValue w = ParamValue::zeros_like(o.default_start());
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = 0.8 * rng::normal(7300 + pt, i, 0, 95);
            const ParamValue g = o.full_grad(w);
            const double scale_ref = std::max(1.0, norm(g, Norm::LInf));
            for (std::size_t i = 0; i < w.size(); ++i) {
                ParamValue hi = w, lo = w;
                hi[i] += 1e-6;
                lo[i] -= 1e-6;
                const double fd = (o.loss(hi) - o.loss(lo)) / 2e-6;
                if (std::abs(fd - g[i]) > 1e-5 * scale_ref) {
                    out.pass = false;
                    os << e.name << ": FD mismatch; ";
                    i = w.size();
                    pt = 20;
                }
            }
        }
    }

    // Assumption 3 on the finite-sum problem, 1e3 pairs with shared samples
    {
        const auto o = make_logistic_finite_sum(64, 6, 8, 35);
        const double L = o->constants().L;
        for (std::uint64_t pair = 0; pair < 1000; ++pair) {
            ParamValue x = ParamValue::vector(6), y = ParamValue::vector(6);
            for (std::size_t i = 0; i < 6; ++i) {
                x[i] = rng::normal(7400 + pair, i, 0, 96);
                y[i] = rng::normal(7500 + pair, i, 0, 97);
            }
            const ParamValue dg = sub(o->sample_grad(x, pair), o->sample_grad(y, pair));
            if (norm(dg, Norm::L2) > L * norm(sub(x, y), Norm::L2) + 1e-9) {
                out.pass = false;
                os << "logistic: A3 violated; ";
                break;
            }
        }
    }

    out.detail = out.pass ? "A1/A2/A3 and finite differences hold on all shipped problems"
                          : os.str();
    return out;
}

// --------------------------------------------------------------- criterion 10
Outcome determinism_and_formats() {
    Outcome out;
    std::ostringstream os;

    const fs::path dir = fs::temp_directory_path() / "lmoopt_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "config.json";
    {
        std::ofstream f(cfg);
        f << R"({
  "problem": {"name": "noisy_quadratic",
              "params": {"dim": 4, "eigenvalues": [1.0, 2.0, 3.0, 4.0], "sigma": 0.5, "seed": 3}},
  "method": {"class": "stochastic_lmo", "set": {"geometry": "euclidean"}, "schedule": "thm1"},
  "run": {"T": 200, "seed": 9}
})";
    }

    auto cli = [&](const std::string& args) {
        const std::string cmd = std::string(LMOOPT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    const fs::path out1 = dir / "a", out2 = dir / "b";
    if (cli("run --config " + cfg.string() + " --out " + out1.string()) != 0 ||
        cli("run --config " + cfg.string() + " --out " + out2.string()) != 0) {
        out.pass = false;
        os << "scenario 1: run exited nonzero; ";
    } else if (slurp(out1 / "trace.csv") != slurp(out2 / "trace.csv")) {
        out.pass = false;
        os << "trace.csv differs between identical runs; ";
    } else {
        os << "byte-identical traces; ";
    }

    const int ok_code = cli("run --config " + cfg.string() + " --out " + (dir / "c").string());
    const int fail_code = cli("verify --out " + (dir / "v").string() + " --inject-step-fault 2.5");
    {
        std::ofstream f(cfg);
        f << R"({"problem": {"name": "noisy_quadratic", "params": {"dim": 2}}, "unknown_section": 1})";
    }
    const int cfg_code = cli("run --config " + cfg.string() + " --out " + (dir / "d").string());

    os << "exit codes " << ok_code << "/" << fail_code << "/" << cfg_code << " (want 0/1/2)";
    out.pass = out.pass && ok_code == 0 && fail_code == 1 && cfg_code == 2;
    out.detail = os.str();
    return out;
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "LMO correctness vs duality and brute force", lmo_correctness},
        {2, "reduction equivalences", reduction_equivalences},
        {3, "Nesterov reparametrization", nesterov_equivalence},
        {4, "lemma suite", lemma_suite},
        {5, "deterministic certification", deterministic_certificates},
        {6, "stochastic certification", stochastic_certificates},
        {7, "hierarchy ordering and gradient accounting", hierarchy_ordering},
        {8, "rate direction", rate_direction},
        {9, "assumption conformance", assumption_conformance},
        {10, "determinism and CLI formats", determinism_and_formats},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %2d (%6.2fs): %s — %s\n", o.pass ? "PASS" : "FAIL", c.id,
                    secs, c.name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures;
}
