#pragma once

#include "lmoopt/harness.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace lmoopt {

/// Configuration problems (bad JSON, unknown keys, violated invariants) map
/// to exit code 2; anything else that throws maps to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parsed experiment document. run.T carries the first horizon; sweeps use
/// T_list and may fan out over several method classes.
struct AppConfig {
    RunConfig run;
    std::vector<std::size_t> T_list;
    std::vector<MethodClass> classes;
    std::string out_dir;
    bool measure_wall = false;
    nlohmann::ordered_json echo;
};

AppConfig parse_config_text(const std::string& text, const std::string& origin);
AppConfig parse_config_file(const std::string& path);

/// 17 significant digits: exact round trip for 64-bit floats.
std::string format_double(double v);

/// trace.csv with the fixed header
/// step,loss,grad_norm,rsf,step_norm,eps_hat,grad_evals,wall_ns.
/// Wall times are written as 0 unless measure_wall is set, keeping the file
/// byte-identical across repeated runs of the same config and seed.
void write_trace_csv(const std::string& path, const RunTrace& trace, bool measure_wall);

nlohmann::ordered_json params_json(const UnifiedParams& p);
nlohmann::ordered_json constants_json(const ProblemConstants& c);
nlohmann::ordered_json certificate_json(const TheoremCertificate& cert);
nlohmann::ordered_json ratefit_json(const RateFit& fit, MethodClass cls,
                                    const std::string& schedule);
nlohmann::ordered_json verify_report_json(const std::vector<LemmaCheck>& checks);

nlohmann::ordered_json summary_json(const AppConfig& config, const ProblemConstants& constants,
                                    const UnifiedParams& params,
                                    const std::vector<RunTrace>& traces,
                                    const TheoremCertificate* certificate);

void write_json(const std::string& path, const nlohmann::ordered_json& doc);

inline constexpr const char* kToolName = "lmoopt";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

} // namespace lmoopt
