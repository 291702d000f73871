#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cbmech/scenario.hpp>

// exit codes: 0 success, 1 validation failure, 2 numerical failure
int main(int argc, char** argv) {
    CLI::App app{"multifield continuum mechanics scenario runner"};
    app.require_subcommand(1);

    std::string config, out_dir, report, series;
    bool strict = false;

    CLI::App* run = app.add_subcommand("run", "run a config file or bundled scenario");
    run->add_option("config", config, "path to a config JSON, or a bundled name")
        ->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_flag("--strict", strict, "treat warnings as failures");

    app.add_subcommand("list", "list bundled scenarios");

    CLI::App* exp = app.add_subcommand("export", "print a stored series as CSV");
    exp->add_option("report", report, "summary.json produced by `run`")->required();
    exp->add_option("--series", series, "series name to extract")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        if (run->parsed()) {
            const cbmech::RunReport r = cbmech::run_scenario(config, out_dir, strict);
            std::cout << "wrote " << r.summary_path << "\n";
            if (r.exit_code != 0)
                std::cerr << "scenario finished with failures (exit "
                          << r.exit_code << ")\n";
            return r.exit_code;
        }
        if (app.get_subcommand("list")->parsed()) {
            std::vector<const cbmech::BundledScenario*> cat;
            for (const cbmech::BundledScenario& b : cbmech::bundled_scenarios())
                cat.push_back(&b);
            std::sort(cat.begin(), cat.end(),
                      [](const auto* a, const auto* b) { return a->name < b->name; });
            for (const auto* b : cat)
                std::cout << b->name << "  " << b->description << "\n";
            return 0;
        }
        if (exp->parsed()) {
            std::cout << cbmech::export_plot_data(report, series);
            return 0;
        }
    } catch (const cbmech::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const cbmech::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
