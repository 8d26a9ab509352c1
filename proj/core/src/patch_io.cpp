#include "misciga/errors.hpp"
#include "misciga/geometry.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace misciga {

namespace {

// Shortest round-trip decimal form, deterministic across runs.
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& what) {
    throw std::invalid_argument("patch file: " + what);
}

}  // namespace

void write_patch(std::ostream& os, const Patch& patch) {
    os << "misciga-patch 1\n";
    os << "dim " << patch.dim() << "\n";
    os << "degrees";
    for (const auto& kv : patch.knot_vectors()) os << ' ' << kv.degree();
    os << "\n";
    for (int k = 0; k < patch.dim(); ++k) {
        const auto& knots = patch.knot_vector(k).knots();
        os << "knots " << k << ' ' << knots.size();
        for (double t : knots) os << ' ' << fmt(t);
        os << "\n";
    }
    os << "points " << patch.num_points() << "\n";
    for (const auto& p : patch.control_points()) {
        os << fmt(p[0]) << ' ' << fmt(p[1]);
        if (patch.dim() == 3) os << ' ' << fmt(p[2]);
        os << "\n";
    }
    if (patch.is_nurbs()) {
        os << "weights " << patch.weights().size() << "\n";
        for (double w : patch.weights()) os << fmt(w) << "\n";
    }
    os << "end\n";
}

Patch read_patch(std::istream& is) {
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != "misciga-patch" || version != 1)
        parse_fail("bad header");

    std::string key;
    int dim = 0;
    if (!(is >> key >> dim) || key != "dim") parse_fail("expected dim");
    if (dim != 2 && dim != 3) parse_fail("dim must be 2 or 3");

    if (!(is >> key) || key != "degrees") parse_fail("expected degrees");
    std::vector<int> degrees(dim);
    for (int k = 0; k < dim; ++k)
        if (!(is >> degrees[k])) parse_fail("truncated degrees");

    std::vector<KnotVector> kvs;
    kvs.reserve(dim);
    for (int k = 0; k < dim; ++k) {
        int direction = 0;
        std::size_t count = 0;
        if (!(is >> key >> direction >> count) || key != "knots" || direction != k)
            parse_fail("expected knots for direction " + std::to_string(k));
        std::vector<double> knots(count);
        for (auto& t : knots)
            if (!(is >> t)) parse_fail("truncated knot vector");
        kvs.emplace_back(std::move(knots), degrees[k]);
    }

    std::size_t n_points = 0;
    if (!(is >> key >> n_points) || key != "points") parse_fail("expected points");
    std::vector<Point> cps(n_points, Point{0.0, 0.0, 0.0});
    for (auto& p : cps) {
        for (int c = 0; c < dim; ++c)
            if (!(is >> p[c])) parse_fail("truncated control points");
    }

    std::vector<double> weights;
    if (!(is >> key)) parse_fail("truncated file");
    if (key == "weights") {
        std::size_t n_weights = 0;
        if (!(is >> n_weights)) parse_fail("truncated weights");
        weights.resize(n_weights);
        for (auto& w : weights)
            if (!(is >> w)) parse_fail("truncated weights");
        if (!(is >> key)) parse_fail("truncated file");
    }
    if (key != "end") parse_fail("expected end");

    return Patch(dim, std::move(kvs), std::move(cps), std::move(weights));
}

void write_patch_file(const std::string& path, const Patch& patch) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open patch file for writing: " + path);
    write_patch(os, patch);
}

Patch read_patch_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open patch file: " + path);
    return read_patch(is);
}

}  // namespace misciga
