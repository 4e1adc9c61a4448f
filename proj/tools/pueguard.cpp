// pueguard: runs the shipped figure presets or a custom scenario file and
// writes CSVs, a manifest and optional gnuplot scripts.

#include "pueguard/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"PUE attack detection and defense simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(pueguard::kToolVersion));

    pueguard::ExperimentOptions opt;
    std::string config;
    std::uint64_t seed = 0;
    int replications = 0;

    for (const char* name : {"fig3", "fig5", "fig6", "custom"}) {
        const bool custom = std::string_view(name) == "custom";
        auto* sub = app.add_subcommand(name, custom ? "run a scenario file" : std::string("run the ") + name + " preset");
        sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
        auto* cfg = sub->add_option("--config", config, custom ? "scenario file" : "config replacing the shipped preset")
                        ->check(CLI::ExistingFile);
        if (custom) cfg->required();
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--replications", replications, "replications per sweep point")->check(CLI::PositiveNumber);
        sub->add_flag("--emit-plots", opt.emit_plots, "also write a gnuplot script");
        sub->add_option("--threads", opt.threads, "worker threads (0: all cores)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        auto* sub = app.get_subcommands().front();
        if (!config.empty()) opt.config_path = config;
        if (sub->count("--seed")) opt.seed = seed;
        if (sub->count("--replications")) opt.replications = replications;
        const auto experiment = pueguard::parse_experiment(sub->get_name());
        const auto report = pueguard::run_experiment(experiment, opt);
        for (const auto& f : report.files) std::cout << opt.out_dir << '/' << f << '\n';
    } catch (const pueguard::ConfigError& e) {
        std::cerr << "pueguard: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "pueguard: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
