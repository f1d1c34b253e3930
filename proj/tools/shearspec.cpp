// shearspec: batch front end. Every config key is also a --key option; -c FILE loads key = value lines first.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "shearspec/cli.hpp"

using namespace shearspec;

namespace {

struct Sub {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> opts;
    std::string config_file;
    bool newton = false;
    bool no_cache = false;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shearspec: spectra of oscillatory shears, travelling waves and 3D growing modes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "shearspec schema " + std::to_string(io::schema_version));

    std::map<std::string, Sub> subs;
    for (const auto& cmd : subcommands()) {
        Sub& s = subs[cmd];
        s.app = app.add_subcommand(cmd);
        s.app->add_option("-c,--config", s.config_file, "key = value file; command-line options override it");
        for (const auto& k : key_table()) {
            if (!key_applies(k, cmd)) continue;
            std::string help = k.help + " [" + k.default_value + "]";
            auto* o = s.app->add_option("--" + k.name, s.values[k.name], help);
            if (k.type == KeyType::boolean) o->expected(0, 1);
            s.opts[k.name] = o;
        }
        s.app->add_flag("--no-cache", s.no_cache, "bypass the result cache");
        if (cmd == "catseye") s.app->add_flag("--newton", s.newton, "Newton-corrected wave (same as --order newton)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : cli::config_error;
    }

    for (auto& [cmd, s] : subs) {
        if (!s.app->parsed()) continue;
        RunConfig cfg;
        try {
            cfg = RunConfig(cmd);
            if (!s.config_file.empty()) cfg.load_file(s.config_file);
            for (const auto& [name, opt] : s.opts) {
                if (opt->count() == 0) continue;
                const std::string& v = s.values[name];
                cfg.set(name, v.empty() && find_key(name)->type == KeyType::boolean ? "true" : v);
            }
            if (s.newton) cfg.set("order", "newton");
            if (s.no_cache) cfg.set("cache", "false");
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return cli::config_error;
        }
        cli::Outcome o = cli::run(cfg, &std::cerr);
        if (!o.error.empty()) {
            std::cerr << "error: " << o.error << "\n";
            std::cout << io::json{{"subcommand", cmd}, {"error", o.error}, {"exit_code", o.exit_code}}.dump(2) << "\n";
            return o.exit_code;
        }
        for (const auto& w : o.record.warnings) std::cerr << "warning: " << w << "\n";
        if (o.from_cache) std::cerr << "cache hit " << o.record.input_hash << "\n";
        std::cout << o.record.to_json().dump(2) << "\n";
        return o.exit_code;
    }
    return cli::config_error;
}
