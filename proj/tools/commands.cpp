#include "commands.hpp"

#include "misciga/adaptation.hpp"
#include "misciga/errors.hpp"
#include "misciga/estimator.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace misciga::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw ConfigError("cannot create output directory: " + path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open output file: " + path);
    return os;
}

void write_metadata(const ExperimentConfig& config, const std::string& command,
                    const json& extra) {
    json meta;
    meta["command"] = command;
    meta["problem_hash"] = problem_hash(config);
    meta["config"] = config.raw;
    meta["extra"] = extra;
    auto os = open_out(config.output_dir + "/metadata.json");
    os << meta.dump(2) << "\n";
}

/// Modeled work of one solve at a spatial level: 2^(sum alpha_i c_i).
double per_solve_model(const MultiIndex& alpha, const std::vector<double>& c) {
    double exponent = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) exponent += alpha[i] * c[i];
    return std::exp2(exponent);
}

double total_model_work(const std::map<MultiIndex, long>& solves,
                        const std::vector<double>& c) {
    double w = 0.0;
    for (const auto& [alpha, count] : solves) w += count * per_solve_model(alpha, c);
    return w;
}

std::string status_name(MiscStatus status) {
    switch (status) {
        case MiscStatus::converged: return "converged";
        case MiscStatus::budget_exhausted: return "budget";
        case MiscStatus::iteration_limit: return "iterations";
    }
    return "unknown";
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open input table: " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

int column_of(const CsvTable& table, const std::string& name, const std::string& path) {
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i] == name) return static_cast<int>(i);
    throw ConfigError("column '" + name + "' missing in " + path);
}

json read_metadata(const std::string& dir) {
    std::ifstream is(dir + "/metadata.json");
    if (!is) throw ConfigError("cannot open " + dir + "/metadata.json");
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("metadata parse error: ") + e.what());
    }
    return j;
}

double fit_loglog_slope(const std::vector<std::pair<double, double>>& work_error) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& [w, e] : work_error) {
        if (!(w > 0.0) || !(e > 0.0)) continue;
        const double x = std::log10(w);
        const double y = std::log10(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw ConfigError("not enough positive (work, error) pairs for a slope fit");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

int cmd_fit_rates(const ExperimentConfig& config) {
    const DiffusionProblem problem = build_problem(config);
    const DiffusionBackend backend(problem);
    ensure_dir(config.output_dir);

    const SpatialFitResult fit = fit_spatial_rates(backend, config.fit);

    json rates;
    rates["r"] = fit.r;
    rates["c"] = fit.c;
    rates["r_residual"] = fit.r_residual;
    rates["c_residual"] = fit.c_residual;
    rates["warnings"] = fit.warnings;
    rates["base_level"] = config.fit.base_level;
    rates["num_levels"] = config.fit.num_levels;
    {
        auto os = open_out(config.output_dir + "/rates.json");
        os << rates.dump(2) << "\n";
    }
    {
        auto os = open_out(config.output_dir + "/rates.csv");
        os << "direction,r,c,r_residual,c_residual\n";
        for (std::size_t k = 0; k < fit.r.size(); ++k)
            os << k << ',' << fmt17(fit.r[k]) << ',' << fmt17(fit.c[k]) << ','
               << fmt17(fit.r_residual[k]) << ',' << fmt17(fit.c_residual[k]) << "\n";
    }
    write_metadata(config, "fit-rates", rates);

    std::cout << "fitted rates (sweep levels " << config.fit.base_level << ".."
              << config.fit.base_level + config.fit.num_levels - 1 << "):\n";
    for (std::size_t k = 0; k < fit.r.size(); ++k)
        std::cout << "  direction " << k << ": r = " << fit.r[k] << " (resid "
                  << fit.r_residual[k] << "), c = " << fit.c[k] << " (resid "
                  << fit.c_residual[k] << ")\n";
    for (const auto& w : fit.warnings) std::cout << "  warning: " << w << "\n";
    return exit_ok;
}

int cmd_misc(const ExperimentConfig& config) {
    const DiffusionProblem problem = build_problem(config);
    const DiffusionBackend backend(problem);
    const int d = backend.spatial_dims();
    const int n = backend.stochastic_dims();

    RatesSpec rates = resolve_rates(config);
    if (static_cast<int>(rates.r.size()) != d || static_cast<int>(rates.c.size()) != d)
        throw ConfigError("rates r/c must have one entry per spatial direction");
    if (rates.g0.empty()) rates.g0.assign(n, 1.0);
    if (static_cast<int>(rates.g0.size()) != n)
        throw ConfigError("rates g0 must have one entry per stochastic direction");

    ensure_dir(config.output_dir);

    std::optional<double> reference;
    json ref_meta;
    if (config.reference) {
        if (static_cast<int>(config.reference->alpha.size()) != d ||
            static_cast<int>(config.reference->beta.size()) != n)
            throw ConfigError("reference alpha/beta dimensions do not match the problem");
        EstimatorCache ref_cache;
        reference = full_tensor_value(backend, config.reference->alpha,
                                      config.reference->beta, ref_cache);
        ref_meta["alpha"] = config.reference->alpha;
        ref_meta["beta"] = config.reference->beta;
        ref_meta["value"] = *reference;
        ref_meta["solves"] = ref_cache.total_solves();
    }

    auto conv = open_out(config.output_dir + "/convergence.csv");
    conv << "index,tol,estimate,error_vs_reference,iterations,lambda_size,solves,"
            "work_dofs,work_model,status\n";
    auto ghist = open_out(config.output_dir + "/g_history.csv");
    ghist << "index,tol,iteration,lambda_size,estimate,margin_model_error";
    for (int j = 0; j < n; ++j) ghist << ",g" << j + 1;
    ghist << "\n";
    auto alloc = open_out(config.output_dir + "/cost_allocation.csv");
    alloc << "index,tol,total_mesh_refinement,collocation_points\n";
    auto timings = open_out(config.output_dir + "/timings.txt");

    bool any_budget = false;
    for (std::size_t ti = 0; ti < config.tolerances.size(); ++ti) {
        const double tol = config.tolerances[ti];
        EstimatorCache cache;
        MiscOptions options;
        options.model = RateModel{rates.r, rates.c, rates.g0};
        options.tolerance = tol;
        options.w0 = config.w0;
        options.max_solves = config.budget;

        const auto start = std::chrono::steady_clock::now();
        const MiscResult result = run_misc(backend, cache, options);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (result.status == MiscStatus::budget_exhausted) any_budget = true;

        const auto solves = cache.solves_per_alpha();
        conv << ti << ',' << fmt17(tol) << ',' << fmt17(result.estimate) << ',';
        if (reference) conv << fmt17(std::abs(result.estimate - *reference));
        conv << ',' << result.history.size() - 1 << ',' << result.lambda.size() << ','
             << cache.total_solves() << ',' << fmt17(cache.total_work()) << ','
             << fmt17(total_model_work(solves, rates.c)) << ','
             << status_name(result.status) << "\n";

        for (const auto& rec : result.history) {
            ghist << ti << ',' << fmt17(tol) << ',' << rec.iteration << ',' << rec.lambda_size
                  << ',' << fmt17(rec.estimate) << ',' << fmt17(rec.margin_model_error);
            for (double g : rec.g) ghist << ',' << fmt17(g);
            ghist << "\n";
        }

        // collocation points per total mesh refinement (sum of alpha_i - 1)
        std::map<int, long> allocation;
        for (const auto& [alpha, count] : solves) {
            int refinement = 0;
            for (int a : alpha) refinement += a - 1;
            allocation[refinement] += count;
        }
        for (const auto& [refinement, points] : allocation)
            alloc << ti << ',' << fmt17(tol) << ',' << refinement << ',' << points << "\n";

        {
            auto lam = open_out(config.output_dir + "/lambda_" + std::to_string(ti) + ".txt");
            write_index_set(lam, result.lambda);
        }
        timings << "tol " << fmt17(tol) << " wall_seconds " << wall << "\n";
        std::cout << "tol " << tol << ": estimate = " << result.estimate;
        if (reference) std::cout << ", |err| = " << std::abs(result.estimate - *reference);
        std::cout << ", solves = " << cache.total_solves() << ", status = "
                  << status_name(result.status) << ", wall = " << wall << " s\n";
    }

    json extra;
    extra["rates"] = {{"r", rates.r}, {"c", rates.c}, {"g0", rates.g0}};
    if (config.reference) extra["reference"] = ref_meta;
    write_metadata(config, "misc", extra);
    return any_budget ? exit_budget_exhausted : exit_ok;
}

int cmd_mc(const ExperimentConfig& config) {
    const DiffusionProblem problem = build_problem(config);
    const DiffusionBackend backend(problem);
    const int n = backend.stochastic_dims();
    if (!config.mc) throw ConfigError("mc mode needs an mc block (alpha, samples)");
    if (static_cast<int>(config.mc->alpha.size()) != backend.spatial_dims())
        throw ConfigError("mc.alpha dimension does not match the problem");

    ensure_dir(config.output_dir);

    std::vector<long> counts = config.mc->samples;
    std::sort(counts.begin(), counts.end());

    // one deterministic stream: row M uses the first M draws
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    auto draw = [&]() {
        std::vector<double> y(n);
        for (double& v : y) v = uniform(rng);
        return y;
    };

    std::vector<double> values;
    auto extend_to = [&](long count) {
        while (static_cast<long>(values.size()) < count)
            values.push_back(backend.solve(config.mc->alpha, draw()));
    };

    if (config.mc->target_tolerance) {
        const long pilot = counts.empty() ? 64 : counts.front();
        extend_to(pilot);
        double mean = 0.0;
        for (long i = 0; i < pilot; ++i) mean += values[i];
        mean /= pilot;
        double var = 0.0;
        for (long i = 0; i < pilot; ++i) var += (values[i] - mean) * (values[i] - mean);
        var /= (pilot - 1);
        const double target = *config.mc->target_tolerance;
        const long needed = std::max<long>(
            pilot, static_cast<long>(std::ceil(var / (target * target))));
        counts.push_back(needed);
        std::sort(counts.begin(), counts.end());
    }
    counts.erase(std::unique(counts.begin(), counts.end()), counts.end());

    const double dofs = backend.solve_cost(config.mc->alpha);
    auto os = open_out(config.output_dir + "/mc.csv");
    os << "samples,mean,stderr,work_dofs\n";
    for (long count : counts) {
        extend_to(count);
        double mean = 0.0;
        for (long i = 0; i < count; ++i) mean += values[i];
        mean /= count;
        double var = 0.0;
        for (long i = 0; i < count; ++i) var += (values[i] - mean) * (values[i] - mean);
        const double stderr_est = count > 1 ? std::sqrt(var / (count - 1) / count) : 0.0;
        os << count << ',' << fmt17(mean) << ',' << fmt17(stderr_est) << ','
           << fmt17(count * dofs) << "\n";
        std::cout << "samples " << count << ": mean = " << mean << ", stderr = " << stderr_est
                  << "\n";
    }

    json extra;
    extra["alpha"] = config.mc->alpha;
    extra["seed"] = config.seed;
    write_metadata(config, "mc", extra);
    return exit_ok;
}

int cmd_convergence(const ExperimentConfig& config) {
    if (config.misc_dir.empty() || config.mc_dir.empty())
        throw ConfigError("convergence mode needs misc_dir and mc_dir");

    const json misc_meta = read_metadata(config.misc_dir);
    const json mc_meta = read_metadata(config.mc_dir);
    if (misc_meta.at("problem_hash") != mc_meta.at("problem_hash"))
        throw ConfigError("refusing to merge: inputs were produced for different problems");
    if (!misc_meta.at("extra").contains("reference"))
        throw ConfigError("misc input has no reference value; rerun misc with a reference");
    const double reference = misc_meta["extra"]["reference"]["value"].get<double>();

    const CsvTable misc = read_csv(config.misc_dir + "/convergence.csv");
    const CsvTable mc = read_csv(config.mc_dir + "/mc.csv");

    ensure_dir(config.output_dir);
    auto os = open_out(config.output_dir + "/comparison.csv");
    os << "method,label,error,work_dofs\n";

    std::vector<std::pair<double, double>> misc_points, mc_points;
    {
        const int cerr = column_of(misc, "error_vs_reference", "convergence.csv");
        const int cwork = column_of(misc, "work_dofs", "convergence.csv");
        const int ctol = column_of(misc, "tol", "convergence.csv");
        for (const auto& row : misc.rows) {
            if (row[cerr].empty()) throw ConfigError("misc rows lack reference errors");
            const double err = std::stod(row[cerr]);
            const double work = std::stod(row[cwork]);
            misc_points.emplace_back(work, err);
            os << "misc," << row[ctol] << ',' << fmt17(err) << ',' << fmt17(work) << "\n";
        }
    }
    {
        const int cmean = column_of(mc, "mean", "mc.csv");
        const int cwork = column_of(mc, "work_dofs", "mc.csv");
        const int csamp = column_of(mc, "samples", "mc.csv");
        for (const auto& row : mc.rows) {
            const double err = std::abs(std::stod(row[cmean]) - reference);
            const double work = std::stod(row[cwork]);
            mc_points.emplace_back(work, err);
            os << "mc," << row[csamp] << ',' << fmt17(err) << ',' << fmt17(work) << "\n";
        }
    }

    const double misc_slope = fit_loglog_slope(misc_points);
    const double mc_slope = fit_loglog_slope(mc_points);
    {
        auto slopes = open_out(config.output_dir + "/slopes.csv");
        slopes << "method,slope,points\n";
        slopes << "misc," << fmt17(misc_slope) << ',' << misc_points.size() << "\n";
        slopes << "mc," << fmt17(mc_slope) << ',' << mc_points.size() << "\n";
    }

    json extra;
    extra["misc_slope"] = misc_slope;
    extra["mc_slope"] = mc_slope;
    extra["reference"] = reference;
    write_metadata(config, "convergence", extra);

    std::cout << "error-vs-work slopes: misc = " << misc_slope << ", mc = " << mc_slope << "\n";
    std::cout << (misc_slope < mc_slope ? "misc converges faster per unit work\n"
                                        : "warning: misc slope is not better than mc\n");
    return exit_ok;
}

}  // namespace misciga::cli
