#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "torusflow/scenario.hpp"

int main(int argc, char** argv) {
    using namespace torusflow;
    CLI::App app{"Geodesic flows on the two-torus: experiments and reports"};
    app.require_subcommand(1);

    struct Bound {
        std::string config;
        std::map<std::string, std::string> values;
    };
    std::map<std::string, Bound> bound;
    for (const auto& [name, opts] : command_table()) {
        CLI::App* sub = app.add_subcommand(name);
        Bound& b = bound[name];
        sub->add_option("--config", b.config, "key = value config file");
        for (const auto& o : opts) {
            std::string help = o.help;
            if (!o.fallback.empty()) help += " [" + o.fallback + "]";
            sub->add_option("--" + o.key, b.values[o.key], help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    try {
        ScenarioConfig cfg(name);
        const Bound& b = bound[name];
        if (!b.config.empty()) cfg.load_file(b.config);
        for (const auto& [key, value] : b.values)
            if (sub->count("--" + key) > 0) cfg.set(key, value);
        const RunResult r = run_scenario(cfg);
        if (r.exit_code != 0) {
            std::cerr << "torusflow " << name << ": " << r.message << "\n";
        } else {
            std::cout << r.summary["result"].dump(2) << "\n";
        }
        for (const auto& f : r.files) std::cerr << "wrote " << f << "\n";
        return r.exit_code;
    } catch (const ValidationError& e) {
        std::cerr << "torusflow " << name << ": " << e.what() << "\n";
        return 1;
    }
}
