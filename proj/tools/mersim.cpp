#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "mersim/pipeline.hpp"

namespace {

// `key = value` lines, '#' comments; same keys as the long flags.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto strip = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        std::string t = strip(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        kv[strip(t.substr(0, eq))] = strip(t.substr(eq + 1));
    }
    return kv;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "no" || value == "0") return false;
    throw std::runtime_error("config key '" + key + "' expects true/false, found '" + value + "'");
}

void apply_config_file(const std::string& path, mersim::RunConfig& config) {
    for (const auto& [key, value] : read_config_file(path)) {
        if (key == "feeder") config.feeder_path = value;
        else if (key == "reliability") config.reliability_path = value;
        else if (key == "roads") config.roads_path = value;
        else if (key == "profile") config.profile_path = value;
        else if (key == "years") config.years = std::stoi(value);
        else if (key == "seed") config.seed = std::stoull(value);
        else if (key == "install-min") config.installation_minutes = std::stod(value);
        else if (key == "replications") config.replications = std::stoi(value);
        else if (key == "threads") config.threads = std::stoi(value);
        else if (key == "no-reconfig") config.reconfiguration = !to_bool(key, value);
        else if (key == "lossless-base") config.lossless_base = to_bool(key, value);
        else if (key == "out") config.out_dir = value;
        else if (key == "dump-diagnostics") config.diagnostics_path = value;
        else if (key == "dump-voltages") config.voltage_dump_path = value;
        else throw std::runtime_error("unknown config key '" + key + "'");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mersim - movable energy resource sizing for distribution service restoration"};
    app.require_subcommand(1);

    mersim::RunConfig config;
    std::string config_path;

    // Config values load first so explicit flags override them.
    for (int i = 1; i + 1 < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config") config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
    }
    if (!config_path.empty()) {
        try {
            apply_config_file(config_path, config);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }

    CLI::App* run = app.add_subcommand("run", "simulate outages and size the MER fleet");
    std::string config_path_echo;
    run->add_option("--config", config_path_echo, "config file with the same keys as the flags");
    run->add_option("--feeder", config.feeder_path, "feeder description file");
    run->add_option("--reliability", config.reliability_path, "reliability table CSV");
    run->add_option("--roads", config.roads_path, "road network file");
    run->add_option("--profile", config.profile_path, "CSV overriding the 'default' load profile");
    run->add_option("--years", config.years, "simulated horizon in years")->check(CLI::PositiveNumber);
    run->add_option("--seed", config.seed, "master random seed");
    run->add_option("--install-min", config.installation_minutes, "MER installation time, minutes")
        ->check(CLI::NonNegativeNumber);
    run->add_option("--replications", config.replications, "independently seeded horizon segments")
        ->check(CLI::PositiveNumber);
    run->add_option("--threads", config.threads, "worker threads (0 = hardware)");
    run->add_flag("--no-reconfig{false}", config.reconfiguration, "disable tie-switch reconfiguration");
    run->add_flag("--lossless-base", config.lossless_base, "base series = scaled load sum, no power flow");
    run->add_option("--out", config.out_dir, "output directory for report.json / report.txt");
    run->add_option("--dump-diagnostics", config.diagnostics_path, "write per-contingency JSON lines here");
    run->add_option("--dump-voltages", config.voltage_dump_path, "write base-year voltage CSV here");

    CLI11_PARSE(app, argc, argv);

    for (const auto& [value, name] : {std::pair<const std::string&, const char*>{config.feeder_path, "--feeder"},
                                      {config.reliability_path, "--reliability"},
                                      {config.roads_path, "--roads"}}) {
        if (value.empty()) {
            std::cerr << "error: " << name << " is required (flag or config file)\n";
            return 1;
        }
    }

    try {
        mersim::RunResult result = mersim::run_pipeline(config);
        std::cout << result.report_text;
        if (result.nonconverged_hours > 0)
            std::cout << "warning: " << result.nonconverged_hours
                      << " hour(s) skipped for non-convergent power flow\n";
        std::cout << "report written to " << config.out_dir << "/report.json\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
