#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcflab/analysis.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/gridfield.hpp"
#include "mcflab/soliton.hpp"

namespace mcflab::cli {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.0";

struct RunConfig {
    std::string subcommand;
    std::filesystem::path config_path;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 42;
    bool quiet = false;
};

/// Parses argv and runs one subcommand. Returns the process exit code:
/// 0 success, 2 validation or io failure, 3 numerical failure.
int dispatch(int argc, char** argv);
int run(const RunConfig& cfg);

/// Maps an exception to the exit code contract.
int exit_code_for(const std::exception& e);

// ---------------------------------------------------------------------------
// Config parsing. Each parser fills defaults back into the object it reads so
// the manifest can echo the resolved config.
// ---------------------------------------------------------------------------

json load_config(const std::filesystem::path& path);

/// Value at key, or throws ValidationError naming the dotted path.
const json& require(const json& obj, const std::string& key, const std::string& where);

GridSpec parse_grid(json& obj);

/**
 * Closed-form map from {"kind": ...}. Kinds: linear (A), constant (c),
 * sphere (rho, clamp), bump (center, width, amplitude), gaussian (width,
 * amplitude), quadratic (c), abs_plus_const (c), saddle (c), cone, random
 * (modes, amplitude), sum (terms).
 */
Generator parse_generator(json& obj, int n, int k, std::uint64_t seed);

/// {"kind": "file", "path": ...} loads a stored field; any other kind is
/// sampled on `spec`.
GraphField parse_field(json& obj, const std::optional<GridSpec>& spec, std::uint64_t seed,
                       const std::filesystem::path& base_dir);

SolverConfig parse_solver(json& obj);
FlowConfig parse_flow(json& obj);
SphereSampling parse_sampling(json& obj, int n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Header `check,param,lhs,rhs,ratio`; param is R or "lambda:mu".
void write_estimates_csv(std::ostream& out, const std::vector<EstimateReport>& reports);
std::string estimates_header();

json profile_to_json(const ConeProfile& profile);

/// Throws NumericalError naming the first non-finite number.
void require_finite(const json& value, const std::string& where = "summary");

/// Writes text with LF endings and records the file for the manifest.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);
    const std::filesystem::path& dir() const { return dir_; }
    void write(const std::string& name, const std::string& contents);
    void write_json(const std::string& name, const json& value);
    /// name -> hex SHA-256, in insertion order of names.
    const std::map<std::string, std::string>& checksums() const { return checksums_; }

private:
    std::filesystem::path dir_;
    std::map<std::string, std::string> checksums_;
};

std::string sha256_hex(const std::string& data);

} // namespace mcflab::cli
