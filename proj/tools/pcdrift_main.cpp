// Command-line front end: `pcdrift run <config> [--key value ...]` and
// `pcdrift validate <config>`.

#include <exception>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "pcdrift/pipeline.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_data = 2;

int exit_code(const pcdrift::Error& e) { return static_cast<int>(e.kind()); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rolling-window PCA: coefficient heat maps, eigenvector angle drift and retention rules"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(pcdrift::version));

    auto* run_cmd = app.add_subcommand("run", "Run the full pipeline from a config file");
    std::string run_config;
    unsigned workers = 1;
    std::map<std::string, std::string> overrides;
    run_cmd->add_option("config", run_config, "Config file (key = value lines)")->required();
    run_cmd->add_option("--workers", workers, "Worker threads (results do not depend on this)")
        ->check(CLI::Range(1u, 1024u));
    for (const auto& key : pcdrift::config_keys())
        run_cmd->add_option("--" + key, overrides[key], "Override '" + key + "' from the config");

    auto* validate_cmd = app.add_subcommand("validate", "Check a config file without reading any data");
    std::string validate_config;
    validate_cmd->add_option("config", validate_config, "Config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try {
        if (*validate_cmd) {
            const auto diag = pcdrift::validate(validate_config);
            for (const auto& d : diag) std::cout << d << '\n';
            if (diag.empty()) std::cout << "ok\n";
            return diag.empty() ? exit_ok : exit_config;
        }

        pcdrift::ConfigParse parsed = pcdrift::parse_config_file(run_config);
        for (const auto& key : pcdrift::config_keys()) {
            const auto* opt = run_cmd->get_option("--" + key);
            if (opt->count() == 0) continue;
            if (auto msg = pcdrift::apply_setting(parsed.config, key, overrides[key]); !msg.empty())
                parsed.diagnostics.push_back("--" + msg);
        }
        for (auto& d : pcdrift::check_config(parsed.config)) parsed.diagnostics.push_back(std::move(d));
        if (!parsed.diagnostics.empty()) {
            for (const auto& d : parsed.diagnostics) std::cerr << "config error: " << d << '\n';
            return exit_config;
        }

        const auto summary = pcdrift::run(parsed.config, pcdrift::RunOptions{workers});
        std::cout << "window=" << summary.window << " windows=" << summary.windows
                  << " variables=" << summary.variables << " output=" << parsed.config.output_dir << '\n';
        return exit_ok;
    } catch (const pcdrift::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
}
