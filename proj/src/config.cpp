#include "lmoopt/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace lmoopt {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config: " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) fail(path, "unknown key '" + key + "'");
}

double get_number(const json& obj, const std::string& path, const std::string& key, double def) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_number()) fail(path + "." + key, "expected a number");
    return obj.at(key).get<double>();
}

std::uint64_t get_uint(const json& obj, const std::string& path, const std::string& key,
                       std::uint64_t def) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_number_integer() || obj.at(key).get<double>() < 0)
        fail(path + "." + key, "expected a nonnegative integer");
    return obj.at(key).get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key,
                       const std::string& def) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_string()) fail(path + "." + key, "expected a string");
    return obj.at(key).get<std::string>();
}

std::vector<double> get_double_array(const json& obj, const std::string& path,
                                     const std::string& key) {
    if (!obj.at(key).is_array()) fail(path + "." + key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : obj.at(key)) {
        if (!v.is_number()) fail(path + "." + key, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

ProblemSpec parse_problem(const json& doc) {
    const std::string path = "problem";
    check_keys(doc, path, {"name", "params"});
    const std::string name = get_string(doc, path, "name", "");
    const json params = doc.contains("params") ? doc.at("params") : json::object();
    const std::string ppath = path + ".params";

    ProblemSpec spec;
    if (name == "noisy_quadratic") {
        spec.kind = ProblemKind::NoisyQuadratic;
        check_keys(params, ppath, {"dim", "eigenvalues", "noise", "sigma", "seed", "w0"});
        spec.dim = static_cast<std::size_t>(get_uint(params, ppath, "dim", 10));
        if (params.contains("eigenvalues"))
            spec.eigenvalues = get_double_array(params, ppath, "eigenvalues");
        const std::string noise = get_string(params, ppath, "noise", "additive");
        if (noise == "additive") spec.noise = NoiseModel::Additive;
        else if (noise == "coordinatewise") spec.noise = NoiseModel::Coordinatewise;
        else fail(ppath + ".noise", "expected 'additive' or 'coordinatewise'");
        spec.sigma = get_number(params, ppath, "sigma", 0.0);
        if (!spec.eigenvalues.empty() && spec.eigenvalues.size() != spec.dim)
            fail(ppath, "eigenvalues length must equal dim");
    } else if (name == "nonconvex_smooth") {
        spec.kind = ProblemKind::NonconvexSmooth;
        check_keys(params, ppath, {"dim", "coupling", "sigma", "seed", "w0"});
        spec.dim = static_cast<std::size_t>(get_uint(params, ppath, "dim", 10));
        spec.coupling = get_number(params, ppath, "coupling", 0.5);
        spec.sigma = get_number(params, ppath, "sigma", 0.0);
    } else if (name == "matrix_quadratic") {
        spec.kind = ProblemKind::MatrixQuadratic;
        check_keys(params, ppath, {"rows", "cols", "target_seed", "sigma", "seed", "w0"});
        spec.rows = static_cast<std::size_t>(get_uint(params, ppath, "rows", 4));
        spec.cols = static_cast<std::size_t>(get_uint(params, ppath, "cols", 3));
        spec.target_seed = get_uint(params, ppath, "target_seed", 1);
        spec.sigma = get_number(params, ppath, "sigma", 0.0);
    } else if (name == "logistic_finite_sum") {
        spec.kind = ProblemKind::LogisticFiniteSum;
        check_keys(params, ppath, {"num_samples", "dim", "batch", "seed", "w0"});
        spec.num_samples = static_cast<std::size_t>(get_uint(params, ppath, "num_samples", 256));
        spec.dim = static_cast<std::size_t>(get_uint(params, ppath, "dim", 10));
        spec.batch = static_cast<std::size_t>(get_uint(params, ppath, "batch", 16));
    } else {
        fail(path + ".name",
             "unknown problem '" + name +
                 "' (expected noisy_quadratic, nonconvex_smooth, matrix_quadratic or "
                 "logistic_finite_sum)");
    }
    spec.seed = get_uint(params, ppath, "seed", 1);
    if (params.contains("w0")) spec.w0 = get_double_array(params, ppath, "w0");
    return spec;
}

LmoSet parse_set(const json& doc) {
    const std::string path = "method.set";
    check_keys(doc, path, {"geometry", "radius", "op_method", "ns_iterations"});
    const std::string geom = get_string(doc, path, "geometry", "euclidean");
    const double radius = get_number(doc, path, "radius", 1.0);
    if (radius <= 0.0) fail(path + ".radius", "must be positive");
    const std::string method = get_string(doc, path, "op_method", "exact_svd");
    const int iters = static_cast<int>(get_uint(doc, path, "ns_iterations", 5));

    OpMethod op = OpMethod::ExactSvd;
    if (method == "exact_svd") op = OpMethod::ExactSvd;
    else if (method == "newton_schulz") op = OpMethod::NewtonSchulz;
    else fail(path + ".op_method", "expected 'exact_svd' or 'newton_schulz'");

    if (geom == "euclidean") return euclidean_ball(radius);
    if (geom == "linf") return linf_ball(radius);
    if (geom == "operator_norm") return operator_norm_ball(radius, op, iters);
    fail(path + ".geometry", "expected 'euclidean', 'linf' or 'operator_norm'");
}

std::vector<MethodClass> parse_classes(const json& method) {
    if (!method.contains("class")) return {MethodClass::StochasticLMO};
    const json& c = method.at("class");
    std::vector<MethodClass> out;
    try {
        if (c.is_string()) {
            out.push_back(method_class_from_string(c.get<std::string>()));
        } else if (c.is_array()) {
            for (const auto& v : c) out.push_back(method_class_from_string(v.get<std::string>()));
        } else {
            fail("method.class", "expected a string or an array of strings");
        }
    } catch (const std::invalid_argument& e) {
        fail("method.class", e.what());
    }
    if (out.empty()) fail("method.class", "empty class list");
    return out;
}

MethodSpec parse_method(const json& doc, std::vector<MethodClass>& classes) {
    const std::string path = "method";
    check_keys(doc, path, {"class", "set", "schedule", "params"});
    classes = parse_classes(doc);

    MethodSpec spec;
    spec.cls = classes.front();
    if (doc.contains("set")) spec.set = parse_set(doc.at("set"));

    const bool has_schedule = doc.contains("schedule");
    const bool has_params = doc.contains("params");
    if (has_schedule && has_params)
        fail(path, "give either 'schedule' or 'params', not both");

    if (has_params) {
        const json& p = doc.at("params");
        const std::string ppath = path + ".params";
        check_keys(p, ppath, {"beta1", "beta2", "alpha1", "alpha2", "lambda", "eta1", "eta2",
                              "eta"});
        UnifiedParams up;
        up.beta1 = get_number(p, ppath, "beta1", 0.0);
        up.beta2 = get_number(p, ppath, "beta2", 0.0);
        up.alpha1 = get_number(p, ppath, "alpha1", 0.0);
        up.alpha2 = get_number(p, ppath, "alpha2", 0.0);
        up.lambda = get_number(p, ppath, "lambda", 0.0);
        if (p.contains("eta")) {
            if (p.contains("eta1") || p.contains("eta2"))
                fail(ppath, "give either 'eta' or 'eta1'/'eta2'");
            up.eta1 = up.eta2 = get_number(p, ppath, "eta", 1.0);
        } else {
            up.eta2 = get_number(p, ppath, "eta2", 1.0);
            up.eta1 = get_number(p, ppath, "eta1", up.eta2);
        }
        spec.params = up;
        spec.schedule.clear();
    } else {
        spec.schedule = get_string(doc, path, "schedule", "auto");
        if (spec.schedule != "auto") schedule_class(spec.schedule); // validates the name
    }
    return spec;
}

} // namespace

AppConfig parse_config_text(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + origin + ": " + e.what());
    }
    check_keys(doc, "<root>", {"schema_version", "problem", "method", "run", "output"});
    if (doc.contains("schema_version") && doc.at("schema_version") != kSchemaVersion)
        fail("schema_version", "unsupported version");
    if (!doc.contains("problem")) fail("<root>", "missing 'problem' section");

    AppConfig app;
    app.echo = doc;
    app.run.problem = parse_problem(doc.at("problem"));

    if (doc.contains("method")) {
        try {
            app.run.method = parse_method(doc.at("method"), app.classes);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: method: ") + e.what());
        }
    } else {
        app.classes = {app.run.method.cls};
    }

    const json run = doc.contains("run") ? doc.at("run") : json::object();
    check_keys(run, "run", {"T", "seed", "seeds", "stride"});
    if (run.contains("T") && run.at("T").is_array()) {
        for (const auto& v : run.at("T")) {
            if (!v.is_number_integer() || v.get<double>() < 1)
                fail("run.T", "expected positive integers");
            app.T_list.push_back(v.get<std::size_t>());
        }
        if (app.T_list.empty()) fail("run.T", "empty horizon list");
        app.run.T = app.T_list.front();
    } else {
        app.run.T = static_cast<std::size_t>(get_uint(run, "run", "T", 1000));
        if (app.run.T < 1) fail("run.T", "must be at least 1");
        app.T_list = {app.run.T};
    }
    app.run.seed = get_uint(run, "run", "seed", 1);
    app.run.seeds = static_cast<std::size_t>(get_uint(run, "run", "seeds", 1));
    if (app.run.seeds < 1) fail("run.seeds", "must be at least 1");
    app.run.stride = static_cast<std::size_t>(get_uint(run, "run", "stride", 1));
    if (app.run.stride < 1) fail("run.stride", "must be at least 1");

    const json output = doc.contains("output") ? doc.at("output") : json::object();
    check_keys(output, "output", {"dir", "measure_wall"});
    app.out_dir = get_string(output, "output", "dir", "");
    if (output.contains("measure_wall")) {
        if (!output.at("measure_wall").is_boolean()) fail("output.measure_wall", "expected a bool");
        app.measure_wall = output.at("measure_wall").get<bool>();
    }
    return app;
}

AppConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(const std::string& path, const RunTrace& trace, bool measure_wall) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "step,loss,grad_norm,rsf,step_norm,eps_hat,grad_evals,wall_ns\n";
    for (const TraceRow& r : trace.rows) {
        out << r.t << ',' << format_double(r.loss) << ',' << format_double(r.grad_norm) << ','
            << format_double(r.rsf) << ',' << format_double(r.step_norm) << ',';
        if (r.eps_hat) out << format_double(*r.eps_hat);
        out << ',' << r.grad_evals << ',' << (measure_wall ? r.wall_ns : 0) << '\n';
    }
}

nlohmann::ordered_json params_json(const UnifiedParams& p) {
    return json{{"beta1", p.beta1},   {"beta2", p.beta2}, {"alpha1", p.alpha1},
                {"alpha2", p.alpha2}, {"lambda", p.lambda}, {"eta1", p.eta1},
                {"eta2", p.eta2}};
}

nlohmann::ordered_json constants_json(const ProblemConstants& c) {
    json out{{"L", c.L},           {"rho", c.rho},        {"sigma", c.sigma},
             {"F_star", c.F_star}, {"delta_F", c.delta_F}};
    out["sigma_is_estimate"] = c.sigma_is_estimate;
    if (c.sigma_is_estimate) out["sigma_w0_estimate"] = c.sigma_w0_estimate;
    return out;
}

nlohmann::ordered_json certificate_json(const TheoremCertificate& cert) {
    json out;
    out["schema_version"] = kSchemaVersion;
    out["class"] = to_string(cert.cls);
    out["schedule"] = cert.schedule;
    out["bound_value"] = cert.bound_value;
    out["empirical_mean"] = cert.empirical_mean;
    out["mean_upper95"] = cert.mean_upper95;
    out["slack"] = cert.slack;
    out["pass"] = cert.pass;
    out["seeds"] = cert.seeds;
    out["sigma"] = cert.sigma;
    out["sigma_is_estimate"] = cert.sigma_is_estimate;
    out["delta_F"] = cert.delta_F;
    out["per_seed_avg_rsf"] = cert.per_seed_avg_rsf;
    return out;
}

nlohmann::ordered_json ratefit_json(const RateFit& fit, MethodClass cls,
                                    const std::string& schedule) {
    json points = json::array();
    for (const auto& [T, v] : fit.points) points.push_back(json{{"T", T}, {"avg_rsf", v}});
    return json{{"class", to_string(cls)}, {"schedule", schedule}, {"points", points},
                {"slope", fit.slope},      {"intercept", fit.intercept}, {"r2", fit.r2}};
}

nlohmann::ordered_json verify_report_json(const std::vector<LemmaCheck>& checks) {
    bool all = true;
    json rows = json::array();
    for (const LemmaCheck& c : checks) {
        all = all && c.pass;
        rows.push_back(json{{"lemma", c.lemma},
                            {"problem", c.problem},
                            {"pass", c.pass},
                            {"margin", c.margin},
                            {"detail", c.detail}});
    }
    return json{{"schema_version", kSchemaVersion}, {"all_pass", all}, {"checks", rows}};
}

nlohmann::ordered_json summary_json(const AppConfig& config, const ProblemConstants& constants,
                                    const UnifiedParams& params,
                                    const std::vector<RunTrace>& traces,
                                    const TheoremCertificate* certificate) {
    std::vector<double> avg, fin;
    std::uint64_t evals = 0, wall = 0;
    std::size_t zero_queries = 0;
    for (const RunTrace& t : traces) {
        avg.push_back(t.avg_rsf);
        fin.push_back(t.final_loss);
        evals = t.grad_evals;
        wall += t.wall_ns;
        zero_queries += t.zero_query_steps;
    }

    json out;
    out["schema_version"] = kSchemaVersion;
    out["tool"] = json{{"name", kToolName}, {"version", kToolVersion}};
    out["config"] = config.echo;
    out["resolved"] = json{{"class", to_string(config.run.method.cls)},
                           {"schedule", resolved_schedule_name(config.run, constants)},
                           {"params", params_json(params)},
                           {"diameter", analysis_diameter(config.run)},
                           {"constants", constants_json(constants)},
                           {"T", traces.empty() ? config.run.T : traces.front().T},
                           {"seed", config.run.seed},
                           {"seeds", config.run.seeds}};
    out["results"] = json{{"avg_rsf", json{{"mean", mean_of(avg)},
                                           {"std", sample_std(avg)},
                                           {"per_seed", avg}}},
                          {"final_loss", json{{"mean", mean_of(fin)}, {"std", sample_std(fin)}}},
                          {"grad_evals", evals},
                          {"zero_query_steps", zero_queries},
                          {"wall_ns", wall}};
    if (certificate) out["certificate"] = certificate_json(*certificate);
    return out;
}

void write_json(const std::string& path, const nlohmann::ordered_json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << doc.dump(2) << '\n';
}

} // namespace lmoopt
