#include <CLI11.hpp>
#include <iostream>
#include <mstein/experiments.hpp>

int main(int argc, char** argv) {
    CLI::App app{"coupled Langevin diffusions and transport bounds on curved spaces"};
    app.require_subcommand(1);

    std::string config_path, run_dir;
    CLI::App* run = app.add_subcommand("run", "execute an experiment config, write artifacts");
    run->add_option("config", config_path, "path to a key = value config file")->required();
    CLI::App* report =
        app.add_subcommand("report", "summarize the checks recorded in a run directory");
    report->add_option("dir", run_dir, "run output directory")->required();
    app.add_subcommand("selftest", "run the built-in quick checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Bad invocations count as configuration errors.
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (run->parsed()) return mstein::cli_run(config_path, std::cout, std::cerr);
    if (report->parsed()) return mstein::cli_report(run_dir, std::cout, std::cerr);
    return mstein::cli_selftest(std::cout, std::cerr);
}
