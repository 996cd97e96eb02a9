// qsl: optimize, propagate and sweep qubit state transfers from the shell.

#include "qsl/errors.hpp"
#include "qsl/run_config.hpp"
#include "qsl/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <set>
#include <string>
#include <vector>

namespace {

const std::set<std::string> kValueOptions{"--config", "--set", "--out", "--output-root", "--label", "--workers",
                                          "--seed"};

bool looks_like_label(const std::string &token)
{
    try {
        qsl::parse_state_label(token);
        return true;
    } catch (const qsl::Error &) {
        return false;
    }
}

// "-X" would otherwise be read as a short option. State labels move behind
// "--" in their original order so the parser sees them as positionals.
std::vector<std::string> reorder_labels(int argc, char **argv)
{
    std::vector<std::string> head, labels;
    bool after_separator = false;
    for (int i = 1; i < argc; ++i) {
        const std::string token = argv[i];
        if (after_separator) {
            labels.push_back(token);
        } else if (token == "--") {
            after_separator = true;
        } else if (looks_like_label(token) && !(i > 1 && kValueOptions.count(argv[i - 1]))) {
            labels.push_back(token);
        } else {
            head.push_back(token);
        }
    }
    head.emplace_back("--");
    head.insert(head.end(), labels.begin(), labels.end());
    return head;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Open-system qubit state transfer: GRAPE pulse optimization and parameter sweeps", "qsl"};
    app.set_version_flag("--version", std::string(qsl::library_version()));

    std::string subcommand;
    std::vector<std::string> labels;
    std::string config_file, out_dir, output_root, label;
    std::vector<std::string> sets;
    int workers = 0;
    long long seed = -1;
    bool force = false, closed_system = false, print_config = false;

    app.add_option("subcommand", subcommand,
                   "optimize | propagate | sweep-time | sweep-detuning | sweep-chi | contour | states");
    app.add_option("labels", labels, "Initial and target state, e.g. +X -X");
    app.add_option("--config", config_file, "Flat JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "Override one key, e.g. --set grape.n_steps=40 (repeatable)")->allow_extra_args(false);
    app.add_option("--out", out_dir, "Write outputs to exactly this directory");
    app.add_option("--output-root", output_root, "Parent of timestamped run directories");
    app.add_option("--label", label, "Run directory label");
    app.add_flag("--force", force, "Reuse an existing output directory");
    app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Random seed")->check(CLI::NonNegativeNumber);
    app.add_flag("--closed-system", closed_system, "Switch off every dissipation channel");
    app.add_flag("--print-config", print_config, "Print the effective configuration and exit");

    std::vector<std::string> args = reorder_labels(argc, argv);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qsl::ValidationError("").exit_code();
    }

    try {
        qsl::ConfigSources sources;
        if (!config_file.empty()) sources.file = config_file;
        if (!subcommand.empty()) sources.sets.emplace_back("subcommand", subcommand);
        for (const std::string &s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw qsl::ValidationError("--set expects key=value, got \"" + s + "\"");
            }
            sources.sets.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        if (!out_dir.empty()) sources.sets.emplace_back("output.dir", out_dir);
        if (!output_root.empty()) sources.sets.emplace_back("output.root", output_root);
        if (!label.empty()) sources.sets.emplace_back("output.label", label);
        if (force) sources.sets.emplace_back("output.force", "true");
        if (workers > 0) sources.sets.emplace_back("workers", std::to_string(workers));
        if (seed >= 0) sources.sets.emplace_back("seed", std::to_string(seed));
        if (closed_system) {
            for (const char *key : {"params.environment", "params.did_lindblad", "params.did_cross"}) {
                sources.sets.emplace_back(key, "false");
            }
        }
        sources.positionals = labels;

        const qsl::RunConfig cfg = qsl::parse_config(sources);
        if (print_config) {
            std::cout << qsl::to_canonical_json(cfg);
            return 0;
        }
        return qsl::run(cfg, std::cout, std::cerr);
    } catch (const qsl::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    }
}
