#include "qsl/run_config.hpp"

#include "json_codec.hpp"
#include "qsl/errors.hpp"
#include "qsl/pulse_io.hpp"
#include "qsl/version.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <ostream>
#include <sstream>

namespace qsl {

using detail::json;

namespace {

std::filesystem::path output_root(const RunConfig &cfg)
{
    if (!cfg.output_root.empty()) return cfg.output_root;
    if (const char *env = std::getenv("QSL_OUTPUT_ROOT"); env != nullptr && *env != '\0') return env;
    return "runs";
}

std::filesystem::path make_run_dir(const RunConfig &cfg)
{
    const std::string label = cfg.output_label.empty() ? std::string(to_string(cfg.subcommand)) : cfg.output_label;
    return create_run_directory(output_root(cfg), label, cfg.output_dir, cfg.force);
}

std::string created_at()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json provenance(const RunConfig &cfg)
{
    return {{"config", json::parse(to_canonical_json(cfg))},
            {"version", std::string(library_version())},
            {"seed", cfg.seed},
            {"created_at", created_at()}};
}

// The configured GRAPE settings with file and warm-start seeds loaded.
GrapeConfig resolve_grape(const RunConfig &cfg, std::ostream &err)
{
    GrapeConfig g = cfg.grape;
    if (cfg.initial_guess == "file") {
        g.initial_guess = InitialGuess::from_pulse(read_pulse_file(cfg.initial_file).pulse);
    } else if (cfg.initial_guess == "warm_start") {
        const Transfer &src = *cfg.warm_start_from;
        GrapeConfig source_cfg = cfg.grape;
        source_cfg.initial_guess = InitialGuess::constant(cfg.grape.initial_guess.u1, cfg.grape.initial_guess.u2);
        const OptimizationReport seed =
            optimize(source_cfg, density_from_state(src.from), density_from_state(src.to), cfg.params);
        err << "warm start: " << to_string(src) << " F = " << format_double(seed.final_fidelity) << " after "
            << seed.iterations << " iterations\n";
        g.initial_guess = warm_start(seed, g);
    }
    g.validate();
    return g;
}

std::string bloch_text(const BlochVector &b)
{
    return "(" + format_double(b.x) + ", " + format_double(b.y) + ", " + format_double(b.z) + ")";
}

int run_optimize(const RunConfig &cfg, std::ostream &out, std::ostream &err)
{
    const GrapeConfig g = resolve_grape(cfg, err);
    const std::filesystem::path dir = make_run_dir(cfg);
    const OptimizationReport report =
        optimize(g, density_from_state(cfg.transfer.from), density_from_state(cfg.transfer.to), cfg.params);

    write_pulse_file(dir / "pulse.json", {report.pulse, cfg.params, cfg.transfer, report.final_fidelity});
    const BlochExport exported = bloch_trajectory_export(cfg.transfer, report.pulse, cfg.params,
                                                         dir / "trajectory.csv", {g.substeps, cfg.sample_stride});
    const BlochVector final_bloch = bloch_vector(report.trajectory.final_state());
    const json summary = {
        {"transfer", to_string(cfg.transfer)},
        {"fidelity", report.final_fidelity},
        {"iterations", report.iterations},
        {"convergence", to_string(report.reason)},
        {"fidelity_history", report.fidelity_history},
        {"final_bloch", {final_bloch.x, final_bloch.y, final_bloch.z}},
        {"diagnostics",
         {{"max_trace_deviation", report.trajectory.diagnostics.max_trace_deviation},
          {"max_hermiticity_deviation", report.trajectory.diagnostics.max_hermiticity_deviation},
          {"min_eigenvalue", report.trajectory.diagnostics.min_eigenvalue}}},
        {"provenance", provenance(cfg)},
    };
    detail::write_text_file(dir / "report.json", summary.dump(2) + "\n");

    out << "optimize " << to_string(cfg.transfer) << ": F = " << format_double(exported.fidelity) << " after "
        << report.iterations << " iterations (" << to_string(report.reason) << "), output " << dir.string() << "\n";
    return 0;
}

int run_propagate(const RunConfig &cfg, std::ostream &out)
{
    const PulseDocument doc = read_pulse_file(cfg.pulse_file);
    const std::filesystem::path dir = make_run_dir(cfg);
    const BlochExport exported = bloch_trajectory_export(cfg.transfer, doc.pulse, cfg.params, dir / "trajectory.csv",
                                                         {cfg.grape.substeps, cfg.sample_stride});
    const TrajectoryDiagnostics &diag = exported.trajectory.diagnostics;
    const BlochVector final_bloch = exported.trajectory.samples.back().bloch;
    const json summary = {
        {"transfer", to_string(cfg.transfer)},
        {"pulse_file", cfg.pulse_file},
        {"fidelity", exported.fidelity},
        {"final_bloch", {final_bloch.x, final_bloch.y, final_bloch.z}},
        {"diagnostics",
         {{"max_trace_deviation", diag.max_trace_deviation},
          {"max_hermiticity_deviation", diag.max_hermiticity_deviation},
          {"min_eigenvalue", diag.min_eigenvalue}}},
        {"provenance", provenance(cfg)},
    };
    detail::write_text_file(dir / "report.json", summary.dump(2) + "\n");

    out << "propagate " << to_string(cfg.transfer) << ": F = " << format_double(exported.fidelity)
        << ", final Bloch " << bloch_text(final_bloch) << ", output " << dir.string() << "\n";
    return 0;
}

int run_sweep(const RunConfig &cfg, std::ostream &out, std::ostream &err)
{
    SweepSpec spec;
    spec.transfer = cfg.transfer;
    spec.axes = cfg.sweep_axes;
    spec.grape = resolve_grape(cfg, err);
    spec.grape.workers = 1; // parallelism goes to grid points
    spec.params = cfg.params;
    spec.reoptimize = cfg.reoptimize;
    spec.warm_chain = cfg.warm_chain;
    spec.workers = cfg.workers;

    const std::filesystem::path dir = make_run_dir(cfg);
    SweepResult result;
    switch (cfg.subcommand) {
    case Subcommand::SweepTime: result = sweep_time(spec); break;
    case Subcommand::SweepDetuning: result = sweep_detuning(spec); break;
    case Subcommand::SweepChi: result = sweep_chi(spec); break;
    default: result = contour_chi_time(spec); break;
    }
    write_sweep_outputs(result, dir);

    double lo = INFINITY, hi = -INFINITY;
    int failed = 0;
    for (const SweepRecord &r : result.records) {
        if (!r.ok) {
            ++failed;
            err << "point";
            for (double c : r.coords) err << " " << format_double(c);
            err << ": " << r.status << "\n";
            continue;
        }
        lo = std::min(lo, r.fidelity);
        hi = std::max(hi, r.fidelity);
    }
    out << to_string(cfg.subcommand) << " " << to_string(cfg.transfer) << ": " << result.records.size()
        << " points";
    if (const auto best = result.argmax()) {
        const SweepRecord &r = result.records[*best];
        out << ", F in [" << format_double(lo) << ", " << format_double(hi) << "], best at";
        for (std::size_t i = 0; i < r.coords.size(); ++i) {
            out << " " << to_string(result.spec.axes[i].param) << " = " << format_double(r.coords[i]);
        }
        out << " (total_time " << format_double(r.total_time) << ")";
    }
    if (failed > 0) out << ", " << failed << " failed";
    out << ", output " << dir.string() << "\n";
    return failed == static_cast<int>(result.records.size()) ? NumericalError("").exit_code() : 0;
}

} // namespace

std::string list_states()
{
    const auto clean = [](double v) { return std::abs(v) < 1e-15 ? 0.0 : v; };
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %-26s %-26s %s\n", "state", "c0", "c1", "bloch (x, y, z)");
    os << line;
    for (StateLabel label : all_state_labels()) {
        const NamedState s = named_state(label);
        const BlochVector b = bloch_vector(density_from_state(label));
        char c0[40], c1[40];
        std::snprintf(c0, sizeof c0, "%.10f%+.10fi", clean(s.ket.c0.real()), clean(s.ket.c0.imag()));
        std::snprintf(c1, sizeof c1, "%.10f%+.10fi", clean(s.ket.c1.real()), clean(s.ket.c1.imag()));
        std::snprintf(line, sizeof line, "%-6s %-26s %-26s (%.10f, %.10f, %.10f)\n",
                      std::string(to_string(label)).c_str(), c0, c1, clean(b.x), clean(b.y), clean(b.z));
        os << line;
    }
    return os.str();
}

int run(const RunConfig &cfg, std::ostream &out, std::ostream &err)
{
    try {
        switch (cfg.subcommand) {
        case Subcommand::States: out << list_states(); return 0;
        case Subcommand::Optimize: return run_optimize(cfg, out, err);
        case Subcommand::Propagate: return run_propagate(cfg, out);
        default: return run_sweep(cfg, out, err);
        }
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace qsl
