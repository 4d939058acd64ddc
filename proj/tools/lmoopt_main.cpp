// lmoopt command-line driver: run / sweep / verify / certify.
//
// Exit codes: 0 success (and all checks passed), 1 runtime error or a failed
// check, 2 configuration error.

#include "lmoopt/config.hpp"
#include "lmoopt/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string resolve_out_dir(const std::string& flag_value, const lmoopt::AppConfig* config) {
    if (!flag_value.empty()) return flag_value;
    if (config && !config->out_dir.empty()) return config->out_dir;
    if (const char* env = std::getenv("LMOOPT_OUT"); env && *env) return env;
    return ".";
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "'");
}

int cmd_run(const std::string& config_path, const std::string& out_flag,
            std::size_t seeds_override) {
    lmoopt::AppConfig app = lmoopt::parse_config_file(config_path);
    if (seeds_override > 0) app.run.seeds = seeds_override;
    const std::string dir = resolve_out_dir(out_flag, &app);

    const lmoopt::ProblemConstants constants = lmoopt::constants_for(app.run);
    const lmoopt::UnifiedParams params = lmoopt::resolve_params(app.run, constants);

    ensure_dir(dir);
    std::vector<lmoopt::RunTrace> traces;
    for (std::size_t i = 0; i < app.run.seeds; ++i) {
        lmoopt::RunConfig c = app.run;
        c.seed = app.run.seed + i;
        traces.push_back(lmoopt::run(c));
    }
    lmoopt::write_trace_csv(dir + "/trace.csv", traces.front(), app.measure_wall);
    const ordered_json summary = lmoopt::summary_json(app, constants, params, traces, nullptr);
    lmoopt::write_json(dir + "/summary.json", summary);
    std::cout << "run: avg_rsf mean = "
              << lmoopt::format_double(summary["results"]["avg_rsf"]["mean"].get<double>())
              << ", trace rows = " << traces.front().rows.size() << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_flag,
              std::size_t seeds_override) {
    lmoopt::AppConfig app = lmoopt::parse_config_file(config_path);
    if (seeds_override > 0) app.run.seeds = seeds_override;
    if (app.T_list.size() < 2)
        throw lmoopt::ConfigError("config: run.T: sweep needs at least two horizons");
    const std::string dir = resolve_out_dir(out_flag, &app);
    ensure_dir(dir);

    ordered_json fits = ordered_json::array();
    ordered_json summaries = ordered_json::array();
    for (lmoopt::MethodClass cls : app.classes) {
        std::vector<std::pair<double, double>> points;
        std::string schedule;
        for (std::size_t T : app.T_list) {
            lmoopt::RunConfig c = app.run;
            c.method.cls = cls;
            c.T = T;
            const lmoopt::ProblemConstants constants = lmoopt::constants_for(c);
            schedule = lmoopt::resolved_schedule_name(c, constants);

            std::vector<double> avg;
            for (std::size_t i = 0; i < c.seeds; ++i) {
                lmoopt::RunConfig ci = c;
                ci.seed = c.seed + i;
                avg.push_back(lmoopt::run(ci).avg_rsf);
            }
            const double mean = lmoopt::mean_of(avg);
            points.emplace_back(static_cast<double>(T), mean);
            summaries.push_back(ordered_json{{"class", lmoopt::to_string(cls)},
                                             {"T", T},
                                             {"avg_rsf_mean", mean},
                                             {"avg_rsf_std", lmoopt::sample_std(avg)},
                                             {"seeds", c.seeds}});
        }
        const lmoopt::RateFit fit = lmoopt::rate_fit(points);
        fits.push_back(lmoopt::ratefit_json(fit, cls, schedule));
        std::cout << "sweep " << lmoopt::to_string(cls) << ": slope = " << fit.slope
                  << ", r2 = " << fit.r2 << "\n";
    }

    ordered_json doc;
    doc["schema_version"] = lmoopt::kSchemaVersion;
    doc["tool"] = ordered_json{{"name", lmoopt::kToolName}, {"version", lmoopt::kToolVersion}};
    doc["config"] = app.echo;
    doc["per_T"] = summaries;
    doc["fits"] = fits;
    lmoopt::write_json(dir + "/ratefit.json", doc);
    return 0;
}

int cmd_verify(const std::string& out_flag, double inject_step_fault) {
    const std::string dir = resolve_out_dir(out_flag, nullptr);
    ensure_dir(dir);
    lmoopt::VerifyOptions opts;
    opts.step_fault_scale = inject_step_fault;
    const std::vector<lmoopt::LemmaCheck> checks = lmoopt::verify_suite(opts);

    bool all = true;
    for (const lmoopt::LemmaCheck& c : checks) {
        all = all && c.pass;
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.lemma << " on " << c.problem << ": "
                  << c.detail << "\n";
    }
    lmoopt::write_json(dir + "/verify_report.json", lmoopt::verify_report_json(checks));
    return all ? 0 : 1;
}

int cmd_certify(const std::string& config_path, const std::string& out_flag,
                std::size_t seeds_override, double slack) {
    lmoopt::AppConfig app = lmoopt::parse_config_file(config_path);
    if (seeds_override > 0) app.run.seeds = seeds_override;
    if (app.run.method.params)
        throw lmoopt::ConfigError("config: method: certify requires a theorem schedule");
    const std::string dir = resolve_out_dir(out_flag, &app);
    ensure_dir(dir);

    const lmoopt::TheoremCertificate cert = lmoopt::certify(app.run, slack);
    lmoopt::write_json(dir + "/certificate.json", lmoopt::certificate_json(cert));
    std::cout << (cert.pass ? "[PASS] " : "[FAIL] ") << "certificate " << cert.schedule
              << ": empirical mean = " << cert.empirical_mean
              << ", bound = " << cert.bound_value << ", slack = " << cert.slack
              << (cert.sigma_is_estimate ? " (estimated-sigma)" : "") << "\n";
    return cert.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"stochastic LMO-based optimization experiments"};
    cli.require_subcommand(1);

    std::string config_path, out_dir;
    std::size_t seeds_override = 0;
    double slack = 0.05;
    double inject_step_fault = 1.0;

    CLI::App* run = cli.add_subcommand("run", "run one configuration and write trace + summary");
    run->add_option("--config", config_path, "JSON config path")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seeds", seeds_override, "override run.seeds");

    CLI::App* sweep = cli.add_subcommand("sweep", "run a horizon sweep and fit the rate");
    sweep->add_option("--config", config_path, "JSON config path (run.T must be a list)")
        ->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--seeds", seeds_override, "override run.seeds");

    CLI::App* verify = cli.add_subcommand("verify", "run the lemma verification suite");
    verify->add_option("--out", out_dir, "output directory");
    verify
        ->add_option("--inject-step-fault", inject_step_fault,
                     "test hook: scale the executed step size so the geometry check must fail")
        ->capture_default_str();

    CLI::App* certify = cli.add_subcommand("certify", "certify runs against the theorem bound");
    certify->add_option("--config", config_path, "JSON config path")->required();
    certify->add_option("--out", out_dir, "output directory");
    certify->add_option("--seeds", seeds_override, "override run.seeds");
    certify->add_option("--slack", slack, "relative slack for sigma > 0 certificates")
        ->capture_default_str();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seeds_override);
        if (sweep->parsed()) return cmd_sweep(config_path, out_dir, seeds_override);
        if (verify->parsed()) return cmd_verify(out_dir, inject_step_fault);
        if (certify->parsed()) return cmd_certify(config_path, out_dir, seeds_override, slack);
    } catch (const lmoopt::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
