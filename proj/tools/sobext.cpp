#include "sobext/cli.hpp"
#include "sobext/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;

json read_json(const std::string& source, const std::string& what) {
    std::string text = source;
    if (!source.empty() && source.front() != '{') {
        std::ifstream in(source);
        if (!in) throw sobext::ConfigError("cannot read " + what + " '" + source + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw sobext::ConfigError("malformed JSON in " + what + ": " + e.what());
    }
}

struct Flags {
    std::string config, domain, report, csv;
    std::optional<double> K, H, k_lower, H_min, r, G, t_min, t_max;
    std::optional<long long> n, samples, quad, seed, resolution, modes, t_steps;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--domain", f.domain, "domain JSON (file or inline)");
    cmd->add_option("--K", f.K, "sectional curvature bound |Sec| <= K");
    cmd->add_option("--H", f.H, "second fundamental form bound |II| <= H");
    cmd->add_option("--k-lower", f.k_lower, "lower sectional curvature bound");
    cmd->add_option("--H-min", f.H_min, "lower second fundamental form bound");
    cmd->add_option("--n", f.n, "dimension");
    cmd->add_option("--r", f.r, "tube radius");
    cmd->add_option("--G", f.G, "cutoff slope constant");
    cmd->add_option("--samples", f.samples, "number of random test fields");
    cmd->add_option("--quad", f.quad, "quadrature nodes per panel");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--resolution", f.resolution, "grid resolution");
    cmd->add_option("--modes", f.modes, "eigenmodes kept in the heat kernel (0 = all)");
    cmd->add_option("--t-min", f.t_min, "smallest time");
    cmd->add_option("--t-max", f.t_max, "largest time");
    cmd->add_option("--t-steps", f.t_steps, "time grid points");
    cmd->add_option("--report", f.report, "report path (stdout if omitted)");
    cmd->add_option("--csv", f.csv, "CSV path");
}

json merged_config(const Flags& f) {
    json root = f.config.empty() ? json::object() : read_json(f.config, "config");
    if (!root.is_object()) throw sobext::ConfigError("config must be an object");
    if (!f.domain.empty()) {
        json d = read_json(f.domain, "domain");
        if (d.is_object() && d.contains("type")) {
            root["boundary"] = d;
        } else if (d.is_object()) {
            for (const auto& item : d.items()) {
                if (item.key() != "surface" && item.key() != "boundary")
                    throw sobext::ConfigError("unknown key 'domain." + item.key() + "'");
                root[item.key()] = item.value();
            }
        } else {
            throw sobext::ConfigError("domain must be an object");
        }
    }
    auto put = [&](const char* key, const auto& v) {
        if (v) root[key] = *v;
    };
    put("K", f.K);
    put("H", f.H);
    put("k_lower", f.k_lower);
    put("H_min", f.H_min);
    put("n", f.n);
    put("r", f.r);
    put("G", f.G);
    put("samples", f.samples);
    put("quad", f.quad);
    put("seed", f.seed);
    put("resolution", f.resolution);
    put("modes", f.modes);
    put("t_min", f.t_min);
    put("t_max", f.t_max);
    put("t_steps", f.t_steps);
    if (!f.report.empty()) root["report"] = f.report;
    if (!f.csv.empty()) root["csv"] = f.csv;
    return root;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sobolev extension constants and heat kernel diagnostics"};
    app.require_subcommand(1);
    Flags flags;
    const char* commands[][2] = {
        {"constants", "comparison constants and the extension norm bound"},
        {"regularity", "boundary regularity check for a domain"},
        {"verify-extension", "sampled extension operator norm against the bound"},
        {"heat", "Neumann heat kernel diagnostics"},
        {"sweep", "parameter sweep of the constants"},
    };
    for (const auto& c : commands) add_flags(app.add_subcommand(c[0], c[1]), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    sobext::RunConfig config;
    try {
        config = sobext::config_from_json(merged_config(flags));
    } catch (const sobext::Error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    }
    return sobext::run_command(command, config);
}
