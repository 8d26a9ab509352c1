#pragma once

#include "misciga/adaptation.hpp"
#include "misciga/multi_index.hpp"
#include "misciga/pde.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace misciga::cli {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Process exit codes (documented in the README).
enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config_error = 2,
    exit_solver_failure = 3,
    exit_budget_exhausted = 4,
};

struct ReferenceSpec {
    MultiIndex alpha;
    MultiIndex beta;
};

struct McSpec {
    MultiIndex alpha;
    std::vector<long> samples;
    std::optional<double> target_tolerance;
};

struct RatesSpec {
    std::vector<double> r;
    std::vector<double> c;
    std::vector<double> g0;
};

struct ExperimentConfig {
    // problem descriptor
    std::string geometry = "quarter_annulus";  // built-in name or patch file path
    double r_in = 1.0;
    double r_out = 2.0;
    double height = 1.0;
    RandomSineField field;
    bool has_field = true;  // false = deterministic manufactured problem
    int degree = 2;
    double grading = 3.0;
    Functional functional{Functional::Kind::domain_integral, {}};

    // run control
    std::vector<double> tolerances{1e-1, 1e-2, 1e-3};
    int w0 = 0;
    unsigned long long seed = 42;
    long budget = 100000000;
    std::optional<RatesSpec> rates;
    std::string rates_file;
    std::optional<ReferenceSpec> reference;
    std::optional<McSpec> mc;
    SpatialFitOptions fit;
    std::string output_dir = "out";
    std::string misc_dir;  // convergence inputs
    std::string mc_dir;

    nlohmann::json raw;
};

ExperimentConfig load_config(const std::string& path);

/// Builds the diffusion problem described by the configuration.
DiffusionProblem build_problem(const ExperimentConfig& config);

/// Exact functional value when the configured problem is manufactured.
std::optional<double> exact_value(const ExperimentConfig& config);

/// FNV-1a hash of the canonical problem descriptor (geometry, field,
/// functional, degree, grading); used to refuse mismatched inputs.
std::string problem_hash(const ExperimentConfig& config);

/// Rates for a MISC run: inline config, or a rates file written by fit-rates.
RatesSpec resolve_rates(const ExperimentConfig& config);

std::string fmt17(double v);

}  // namespace misciga::cli
