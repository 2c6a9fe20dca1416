#include <cmath>
#include <fstream>
#include <sstream>

#include "mcflab/cli.hpp"
#include "mcflab/error.hpp"
#include "mcflab/field_io.hpp"
#include "mcflab/fixtures.hpp"

namespace mcflab::cli {

namespace {

double number(json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) obj[key] = fallback;
    if (!obj[key].is_number()) throw ValidationError("config key '" + key + "' must be a number");
    return obj[key].get<double>();
}

double required_number(const json& obj, const std::string& key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number()) throw ValidationError("config key '" + where + "." + key + "' must be a number");
    return v.get<double>();
}

std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ValidationError("config key '" + where + "' must be an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number()) throw ValidationError("config key '" + where + "' must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Vec vector_of(const json& v, const std::string& where) {
    const std::vector<double> list = number_list(v, where);
    return Eigen::Map<const Vec>(list.data(), static_cast<Eigen::Index>(list.size()));
}

std::string kind_of(const json& obj, const std::string& where) {
    const json& v = require(obj, "kind", where);
    if (!v.is_string()) throw ValidationError("config key '" + where + ".kind' must be a string");
    return v.get<std::string>();
}

void require_k(int k, int want, const std::string& kind) {
    if (k != want) throw ValidationError("field kind '" + kind + "' needs k = " + std::to_string(want));
}

} // namespace

json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        json cfg = json::parse(buf.str());
        if (!cfg.is_object()) throw ValidationError("config root must be a JSON object");
        return cfg;
    } catch (const json::parse_error& e) {
        throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ValidationError("missing config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
    return obj.at(key);
}

GridSpec parse_grid(json& obj) {
    const json& spec = require(obj, "spec", "");
    const double n = required_number(spec, "n", "spec");
    const double k = required_number(spec, "k", "spec");
    const double L = required_number(spec, "L", "spec");
    const double h = required_number(spec, "h", "spec");
    if (n != std::floor(n) || k != std::floor(k)) throw ValidationError("spec.n and spec.k must be integers");
    return GridSpec::make(static_cast<int>(n), static_cast<int>(k), L, h);
}

Generator parse_generator(json& obj, int n, int k, std::uint64_t seed) {
    if (!obj.is_object()) throw ValidationError("field description must be an object");
    const std::string kind = kind_of(obj, "field");
    if (kind == "linear") {
        const json& rows = require(obj, "A", "field");
        if (!rows.is_array() || static_cast<int>(rows.size()) != k) {
            throw ValidationError("field.A must have k rows");
        }
        Mat A(k, n);
        for (int a = 0; a < k; ++a) {
            const Vec row = vector_of(rows[a], "field.A");
            if (row.size() != n) throw ValidationError("field.A rows must have n entries");
            A.row(a) = row.transpose();
        }
        return fixtures::linear_map(A);
    }
    if (kind == "constant") {
        const Vec c = vector_of(require(obj, "c", "field"), "field.c");
        if (c.size() != k) throw ValidationError("field.c must have k entries");
        return fixtures::constant_map(c);
    }
    if (kind == "sphere") {
        require_k(k, 1, kind);
        const double rho = number(obj, "rho", std::sqrt(static_cast<double>(n)));
        const double clamp = number(obj, "clamp", 0.97);
        return fixtures::sphere_cap(rho, clamp);
    }
    if (kind == "bump") {
        require_k(k, 1, kind);
        if (!obj.contains("center")) obj["center"] = std::vector<double>(n, 0.0);
        const Vec center = vector_of(obj["center"], "field.center");
        if (center.size() != n) throw ValidationError("field.center must have n entries");
        return fixtures::compact_bump(center, number(obj, "width", 1.0), number(obj, "amplitude", 0.1));
    }
    if (kind == "gaussian") {
        require_k(k, 1, kind);
        return fixtures::gaussian_bump(number(obj, "width", 1.0), number(obj, "amplitude", 0.1));
    }
    if (kind == "quadratic") {
        require_k(k, 1, kind);
        return fixtures::quadratic_bowl(number(obj, "c", 1.0));
    }
    if (kind == "abs_plus_const") {
        require_k(k, 1, kind);
        return fixtures::abs_plus_const(number(obj, "c", 1.0));
    }
    if (kind == "saddle") {
        require_k(k, 1, kind);
        if (n < 2) throw ValidationError("field kind 'saddle' needs n >= 2");
        return fixtures::saddle(number(obj, "c", 1.0));
    }
    if (kind == "cone") {
        require_k(k, 1, kind);
        if (n < 2) throw ValidationError("field kind 'cone' needs n >= 2");
        return fixtures::homogeneous_cone();
    }
    if (kind == "random") {
        const double modes = number(obj, "modes", 3);
        const double amplitude = number(obj, "amplitude", 0.2);
        if (!obj.contains("seed")) obj["seed"] = seed;
        return fixtures::random_smooth(n, k, obj["seed"].get<std::uint64_t>(), static_cast<int>(modes), amplitude);
    }
    if (kind == "sum") {
        json& terms = obj["terms"];
        if (!terms.is_array() || terms.empty()) throw ValidationError("field.terms must be a nonempty array");
        Generator g = parse_generator(terms[0], n, k, seed);
        for (std::size_t i = 1; i < terms.size(); ++i) g = fixtures::sum(g, parse_generator(terms[i], n, k, seed));
        return g;
    }
    throw ValidationError("unknown field kind '" + kind + "'");
}

GraphField parse_field(json& obj, const std::optional<GridSpec>& spec, std::uint64_t seed,
                       const std::filesystem::path& base_dir) {
    if (obj.is_object() && obj.value("kind", "") == "file") {
        const json& p = require(obj, "path", "field");
        if (!p.is_string()) throw ValidationError("field.path must be a string");
        std::filesystem::path path = p.get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        GraphField field = read_field(path);
        if (spec && !(field.spec() == *spec)) throw ValidationError("stored field grid differs from spec");
        return field;
    }
    if (!spec) throw ValidationError("missing config key 'spec'");
    std::optional<double> c0;
    if (obj.is_object() && obj.contains("gradient_bound")) c0 = obj["gradient_bound"].get<double>();
    return build_field(*spec, parse_generator(obj, spec->n(), spec->k(), seed), c0);
}

SolverConfig parse_solver(json& obj) {
    SolverConfig cfg;
    if (!obj.is_object()) obj = json::object();
    cfg.c_tau = number(obj, "c_tau", cfg.c_tau);
    cfg.eps = number(obj, "eps", cfg.eps);
    cfg.abs_tol = number(obj, "abs_tol", cfg.abs_tol);
    cfg.max_iters = static_cast<long>(number(obj, "max_iters", static_cast<double>(cfg.max_iters)));
    cfg.damping_initial = number(obj, "damping_initial", cfg.damping_initial);
    cfg.damping_ramp = static_cast<long>(number(obj, "damping_ramp", static_cast<double>(cfg.damping_ramp)));
    cfg.divergence_factor = number(obj, "divergence_factor", cfg.divergence_factor);
    return cfg;
}

FlowConfig parse_flow(json& obj) {
    FlowConfig cfg;
    if (!obj.is_object()) obj = json::object();
    cfg.cfl = number(obj, "cfl", cfg.cfl);
    cfg.t_end = number(obj, "t_end", cfg.t_end);
    if (!obj.contains("boundary")) obj["boundary"] = to_string(cfg.boundary);
    cfg.boundary = boundary_policy_from_string(obj["boundary"].get<std::string>());
    if (!obj.contains("snapshots")) obj["snapshots"] = json::array();
    cfg.snapshots = number_list(obj["snapshots"], "flow.snapshots");
    return cfg;
}

SphereSampling parse_sampling(json& obj, int n, std::uint64_t seed) {
    if (!obj.is_object()) obj = json::object();
    const int fallback = n == 1 ? 2 : (n == 2 ? 360 : 2000);
    const double count = number(obj, "count", fallback);
    if (!obj.contains("scheme")) obj["scheme"] = to_string(default_sphere_scheme(n));
    const SphereScheme scheme = sphere_scheme_from_string(obj["scheme"].get<std::string>());
    if (!obj.contains("seed")) obj["seed"] = seed;
    return sphere_sampling(n, 1.0, static_cast<int>(count), scheme, obj["seed"].get<std::uint64_t>());
}

} // namespace mcflab::cli
