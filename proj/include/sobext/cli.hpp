#pragma once

#include "sobext/fermi_domain.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sobext {

using Json = nlohmann::ordered_json;

struct SurfaceConfig {
    std::string kind = "constant"; // constant | warped
    double kappa = 0.0;
    std::string profile = "sn"; // warped: sn | odd_poly | poly_cosh_mix
    std::vector<double> coeffs;
    int dimension = 2;
};

struct BoundaryConfig {
    std::string type; // disk | fourier | interval
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
    std::vector<double> coeffs_cos;
    std::vector<double> coeffs_sin;
    double length = 1.0;
};

struct SweepAxis {
    std::string name; // K | H | r | R0
    double from = 0.0;
    double to = 0.0;
    int steps = 1;

    std::vector<double> values() const;
};

struct RunConfig {
    SurfaceConfig surface;
    std::optional<BoundaryConfig> boundary;
    std::optional<double> r;
    double G = 3.0;
    int quad = 64;
    int resolution = 256;
    int modes = 0;
    int samples = 50;
    std::uint64_t seed = 42;
    std::optional<double> t_min;
    std::optional<double> t_max;
    int t_steps = 12;
    double K = 0.0;
    std::optional<double> H;
    std::optional<double> k_lower;
    std::optional<double> H_min;
    int n = 2;
    std::vector<SweepAxis> sweep;
    std::string report;
    std::string csv;
};

// Strict parse: unknown keys and wrongly typed values raise ConfigError naming the key.
RunConfig parse_config(const std::string& text);
RunConfig config_from_json(const nlohmann::json& root);

ModelSurface build_surface(const SurfaceConfig& config);
// Requires a disk or Fourier boundary.
DomainSpec build_domain(const RunConfig& config);

// Cartesian product of the sweep axes in the order K, H, r, R0.
std::vector<std::map<std::string, double>> enumerate_sweep(const RunConfig& config);

// Fixed key order, two-space indent, floats with 17 significant digits, non-finite as null.
std::string dump_report(const Json& report);
std::string format_double(double v);

struct RunResult {
    int exit_code = 0;
    Json report;
    std::string csv;
};

RunResult run_constants(const RunConfig& config);
RunResult run_regularity(const RunConfig& config);
RunResult run_verify_extension(const RunConfig& config);
RunResult run_heat(const RunConfig& config);
RunResult run_sweep(const RunConfig& config);

// Dispatches, writes the report (stdout when no path) and CSV, maps errors to exit codes:
// 0 pass, 1 bound violated, 2 input error.
int run_command(const std::string& command, const RunConfig& config);

} // namespace sobext
