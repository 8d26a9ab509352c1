#include "config.hpp"

#include "misciga/geometry.hpp"

#include <cstdio>
#include <fstream>

namespace misciga::cli {

using nlohmann::json;

namespace {

std::vector<double> as_doubles(const json& j, const std::string& what) {
    if (!j.is_array()) throw ConfigError(what + " must be an array");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
}

MultiIndex as_levels(const json& j, const std::string& what) {
    if (!j.is_array()) throw ConfigError(what + " must be an array");
    MultiIndex out;
    for (const auto& v : j) {
        const int level = v.get<int>();
        if (level < 1) throw ConfigError(what + " entries must be >= 1");
        out.push_back(level);
    }
    return out;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    ExperimentConfig cfg;
    cfg.raw = j;

    if (j.contains("problem")) {
        const json& p = j["problem"];
        if (p.contains("geometry")) cfg.geometry = p["geometry"].get<std::string>();
        if (p.contains("r_in")) cfg.r_in = p["r_in"].get<double>();
        if (p.contains("r_out")) cfg.r_out = p["r_out"].get<double>();
        if (p.contains("height")) cfg.height = p["height"].get<double>();
        if (p.contains("degree")) cfg.degree = p["degree"].get<int>();
        if (p.contains("grading_exponent")) cfg.grading = p["grading_exponent"].get<double>();
        if (!(cfg.r_in > 0.0) || !(cfg.r_out > cfg.r_in) || !(cfg.height > 0.0))
            throw ConfigError("problem: need 0 < r_in < r_out and height > 0");
        if (cfg.degree < 1) throw ConfigError("problem.degree must be >= 1");
        if (cfg.grading < 1.0) throw ConfigError("problem.grading_exponent must be >= 1");

        if (p.contains("field")) {
            const json& f = p["field"];
            cfg.has_field = true;
            if (f.contains("c")) cfg.field.c = f["c"].get<double>();
            if (f.contains("amplitudes"))
                cfg.field.amplitudes = as_doubles(f["amplitudes"], "field.amplitudes");
            if (f.contains("frequencies"))
                cfg.field.frequencies = as_doubles(f["frequencies"], "field.frequencies");
            if (cfg.field.amplitudes.size() != cfg.field.frequencies.size())
                throw ConfigError("field: amplitudes and frequencies must have equal length");
            if (cfg.field.amplitudes.empty())
                throw ConfigError("field: need at least one mode");
        } else {
            cfg.has_field = false;
        }
        cfg.field.r_in = cfg.r_in;
        cfg.field.r_out = cfg.r_out;
        cfg.field.height = cfg.height;

        if (p.contains("functional")) {
            const json& fn = p["functional"];
            if (fn.is_string() && fn.get<std::string>() == "domain_integral") {
                cfg.functional.kind = Functional::Kind::domain_integral;
            } else if (fn.is_object() && fn.contains("point")) {
                cfg.functional.kind = Functional::Kind::point_value;
                const auto pt = as_doubles(fn["point"], "functional.point");
                for (std::size_t c = 0; c < pt.size() && c < 3; ++c)
                    cfg.functional.point[c] = pt[c];
            } else {
                throw ConfigError("functional must be \"domain_integral\" or {\"point\": [...]}");
            }
        }
    }

    if (j.contains("tolerances")) {
        cfg.tolerances = as_doubles(j["tolerances"], "tolerances");
        if (cfg.tolerances.empty()) throw ConfigError("tolerances must be non-empty");
        for (std::size_t i = 0; i < cfg.tolerances.size(); ++i) {
            if (!(cfg.tolerances[i] > 0.0)) throw ConfigError("tolerances must be positive");
            if (i > 0 && cfg.tolerances[i] >= cfg.tolerances[i - 1])
                throw ConfigError("tolerance schedule must be strictly decreasing");
        }
    }
    if (j.contains("w0")) cfg.w0 = j["w0"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<unsigned long long>();
    if (j.contains("budget")) {
        cfg.budget = j["budget"].get<long>();
        if (cfg.budget <= 0) throw ConfigError("budget must be positive");
    }
    if (j.contains("rates")) {
        const json& r = j["rates"];
        RatesSpec spec;
        spec.r = as_doubles(r.at("r"), "rates.r");
        spec.c = as_doubles(r.at("c"), "rates.c");
        if (r.contains("g0")) spec.g0 = as_doubles(r["g0"], "rates.g0");
        cfg.rates = std::move(spec);
    }
    if (j.contains("rates_file")) cfg.rates_file = j["rates_file"].get<std::string>();
    if (j.contains("reference")) {
        ReferenceSpec ref;
        ref.alpha = as_levels(j["reference"].at("alpha"), "reference.alpha");
        ref.beta = as_levels(j["reference"].at("beta"), "reference.beta");
        cfg.reference = std::move(ref);
    }
    if (j.contains("mc")) {
        McSpec mc;
        mc.alpha = as_levels(j["mc"].at("alpha"), "mc.alpha");
        if (j["mc"].contains("samples")) {
            for (const auto& s : j["mc"]["samples"]) {
                const long count = s.get<long>();
                if (count < 1) throw ConfigError("mc.samples entries must be >= 1");
                mc.samples.push_back(count);
            }
        }
        if (j["mc"].contains("target_tolerance"))
            mc.target_tolerance = j["mc"]["target_tolerance"].get<double>();
        if (mc.samples.empty() && !mc.target_tolerance)
            throw ConfigError("mc: need samples or target_tolerance");
        cfg.mc = std::move(mc);
    }
    if (j.contains("fit")) {
        if (j["fit"].contains("base_level"))
            cfg.fit.base_level = j["fit"]["base_level"].get<int>();
        if (j["fit"].contains("num_levels"))
            cfg.fit.num_levels = j["fit"]["num_levels"].get<int>();
    }
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("misc_dir")) cfg.misc_dir = j["misc_dir"].get<std::string>();
    if (j.contains("mc_dir")) cfg.mc_dir = j["mc_dir"].get<std::string>();
    return cfg;
}

DiffusionProblem build_problem(const ExperimentConfig& config) {
    if (config.geometry == "manufactured_square") {
        DiffusionProblem p = manufactured_square(config.degree);
        p.grading_exponent = config.grading;
        return p;
    }
    if (config.geometry == "manufactured_annulus") {
        DiffusionProblem p = manufactured_annulus(config.r_in, config.r_out);
        p.grading_exponent = config.grading;
        return p;
    }
    if (config.geometry == "quarter_annulus") {
        if (!config.has_field)
            throw ConfigError("quarter_annulus problem needs a field block");
        return make_test1_problem_2d(config.field, config.grading);
    }
    if (config.geometry == "thick_quarter_ring") {
        if (!config.has_field)
            throw ConfigError("thick_quarter_ring problem needs a field block");
        return make_test1_problem_3d(config.field, config.grading);
    }

    // anything else is a patch file path
    Patch patch = [&]() {
        try {
            return read_patch_file(config.geometry);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("geometry: ") + e.what());
        }
    }();
    if (!config.has_field)
        throw ConfigError("file geometries need a field block");
    RandomSineField field = config.field;
    DiffusionProblem problem{
        std::move(patch),
        [field](const Point& x, std::span<const double> y) { return field(x, y); },
        [](const Point&) { return 1.0; },
        config.functional,
        static_cast<int>(config.field.amplitudes.size()),
        config.grading,
        {true, true, true, true, true, true}};
    return problem;
}

std::optional<double> exact_value(const ExperimentConfig& config) {
    if (config.geometry == "manufactured_square") return manufactured_square_exact();
    if (config.geometry == "manufactured_annulus")
        return manufactured_annulus_exact(config.r_in, config.r_out);
    return std::nullopt;
}

std::string problem_hash(const ExperimentConfig& config) {
    nlohmann::json desc;
    desc["geometry"] = config.geometry;
    desc["r_in"] = config.r_in;
    desc["r_out"] = config.r_out;
    desc["height"] = config.height;
    desc["degree"] = config.degree;
    desc["grading"] = config.grading;
    if (config.has_field) {
        desc["field_c"] = config.field.c;
        desc["amplitudes"] = config.field.amplitudes;
        desc["frequencies"] = config.field.frequencies;
    }
    desc["functional"] =
        config.functional.kind == Functional::Kind::domain_integral ? "integral" : "point";
    const std::string canonical = desc.dump();

    unsigned long long h = 1469598103934665603ull;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", h);
    return buf;
}

RatesSpec resolve_rates(const ExperimentConfig& config) {
    RatesSpec spec;
    if (config.rates) {
        spec = *config.rates;
    } else if (!config.rates_file.empty()) {
        std::ifstream is(config.rates_file);
        if (!is) throw ConfigError("cannot open rates file: " + config.rates_file);
        json j;
        try {
            is >> j;
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("rates file parse error: ") + e.what());
        }
        spec.r = as_doubles(j.at("r"), "rates.r");
        spec.c = as_doubles(j.at("c"), "rates.c");
        if (j.contains("g0")) spec.g0 = as_doubles(j["g0"], "rates.g0");
    } else {
        throw ConfigError("misc mode needs rates (inline or rates_file)");
    }
    for (double v : spec.r)
        if (!(v > 0.0)) throw ConfigError("rates.r must be positive");
    for (double v : spec.c)
        if (!(v > 0.0)) throw ConfigError("rates.c must be positive");
    return spec;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace misciga::cli
