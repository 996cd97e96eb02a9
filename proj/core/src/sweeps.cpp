#include "qsl/sweeps.hpp"

#include "json_codec.hpp"
#include "qsl/errors.hpp"
#include "qsl/parallel.hpp"
#include "qsl/pulse_io.hpp"
#include "qsl/version.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <sstream>

#ifndef QSL_VERSION_STRING
#define QSL_VERSION_STRING "unknown"
#endif

namespace qsl {

using detail::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string utc_stamp(const char *format)
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[64];
    std::strftime(buf, sizeof buf, format, &tm);
    return buf;
}

void require_axes(const SweepSpec &spec, std::initializer_list<SweepParam> params, const char *sweep)
{
    if (spec.axes.size() != params.size()) {
        throw ValidationError(std::string(sweep) + " sweep expects " + std::to_string(params.size()) +
                              " axis/axes, got " + std::to_string(spec.axes.size()));
    }
    auto it = params.begin();
    for (const GridAxis &axis : spec.axes) {
        if (axis.param != *it++) {
            throw ValidationError(std::string(sweep) + " sweep: unexpected axis '" +
                                  std::string(to_string(axis.param)) + "'");
        }
        axis.validate();
    }
}

// Every grid point as coordinates, row-major over the axes.
std::vector<std::vector<double>> grid_points(const SweepSpec &spec)
{
    std::vector<std::vector<double>> points{{}};
    for (const GridAxis &axis : spec.axes) {
        std::vector<std::vector<double>> next;
        for (const auto &prefix : points) {
            for (double v : axis.values()) {
                next.push_back(prefix);
                next.back().push_back(v);
            }
        }
        points = std::move(next);
    }
    return points;
}

struct PointSetup {
    ModelParams params;
    GrapeConfig grape;
};

PointSetup point_setup(const SweepSpec &spec, const std::vector<double> &coords)
{
    if (coords.size() != spec.axes.size()) {
        throw ValidationError("sweep point has " + std::to_string(coords.size()) + " coordinates for " +
                              std::to_string(spec.axes.size()) + " axes");
    }
    PointSetup s{spec.params, spec.grape};
    for (std::size_t i = 0; i < coords.size(); ++i) {
        switch (spec.axes[i].param) {
        case SweepParam::StepDuration: s.grape.dt = coords[i]; break;
        case SweepParam::StepCount: s.grape.n_steps = static_cast<int>(std::lround(coords[i])); break;
        case SweepParam::Detuning: s.params = s.params.with_detuning(coords[i]); break;
        case SweepParam::Chi: s.params = s.params.with_chi(coords[i]); break;
        }
    }
    return s;
}

PulseSequence pulse_for_point(const SweepSpec &spec, const GrapeConfig &grape)
{
    PulseSequence p = *spec.fixed_pulse;
    if (p.n_steps() != grape.n_steps) {
        throw ValidationError("fixed pulse has " + std::to_string(p.n_steps()) + " steps, point expects " +
                              std::to_string(grape.n_steps));
    }
    p.dt = grape.dt;
    return p;
}

// Fills spec.fixed_pulse for propagate-only sweeps by optimizing once at the
// base configuration.
SweepSpec resolve_fixed_pulse(SweepSpec spec, const ModelParams &design_params)
{
    if (spec.reoptimize || spec.fixed_pulse) return spec;
    spec.fixed_pulse = optimize(spec.grape, density_from_state(spec.transfer.from),
                                density_from_state(spec.transfer.to), design_params)
                           .pulse;
    return spec;
}

// Runs the listed point indices in order, chaining each optimum into the next.
void run_chain(const SweepSpec &spec, const std::vector<std::vector<double>> &points,
               const std::vector<std::size_t> &order, std::vector<SweepRecord> &records)
{
    std::optional<PulseSequence> seed;
    for (std::size_t idx : order) {
        records[idx] = run_sweep_point(spec, points[idx], seed);
        if (records[idx].ok && records[idx].pulse) seed = records[idx].pulse;
    }
}

SweepResult run_grid(const std::string &kind, const SweepSpec &spec,
                     const std::vector<std::vector<std::size_t>> &chains)
{
    SweepResult result;
    result.kind = kind;
    result.spec = spec;
    const auto points = grid_points(spec);
    result.records.resize(points.size());

    const bool chained = spec.reoptimize && spec.warm_chain;
    if (chained) {
        parallel_for(chains.size(), spec.workers,
                     [&](std::size_t c) { run_chain(spec, points, chains[c], result.records); });
    } else {
        parallel_for(points.size(), spec.workers,
                     [&](std::size_t i) { result.records[i] = run_sweep_point(spec, points[i], std::nullopt); });
    }

    result.provenance = {sweep_spec_json(spec), std::string(library_version()), spec.grape.seed,
                         utc_stamp("%Y-%m-%dT%H:%M:%SZ")};
    return result;
}

std::vector<std::vector<std::size_t>> single_chain(std::size_t n)
{
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    return {order};
}

json pulse_or_null(const std::optional<PulseSequence> &p) { return p ? detail::to_json(*p) : json(nullptr); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

std::string_view library_version() { return QSL_VERSION_STRING; }

std::string_view to_string(SweepParam param)
{
    switch (param) {
    case SweepParam::StepDuration: return "dt";
    case SweepParam::StepCount: return "n_steps";
    case SweepParam::Detuning: return "delta_minus";
    case SweepParam::Chi: return "chi";
    }
    return "?";
}

std::string_view to_string(Spacing spacing) { return spacing == Spacing::Log ? "log" : "linear"; }

void GridAxis::validate() const
{
    const std::string name(to_string(param));
    if (count < 2) throw ValidationError("sweep axis " + name + ": count must be >= 2");
    if (!std::isfinite(min) || !std::isfinite(max) || !(min < max)) {
        throw ValidationError("sweep axis " + name + ": need finite min < max");
    }
    if (spacing == Spacing::Log && !(min > 0.0)) {
        throw ValidationError("sweep axis " + name + ": log spacing requires positive bounds");
    }
    if ((param == SweepParam::StepDuration || param == SweepParam::Chi) && !(min > 0.0)) {
        throw ValidationError("sweep axis " + name + ": values must be positive");
    }
    if (param == SweepParam::StepCount) {
        if (min < 1.0) throw ValidationError("sweep axis n_steps: values must be >= 1");
        const auto v = values();
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!(v[i] > v[i - 1])) {
                throw ValidationError("sweep axis n_steps: grid rounds to repeated step counts");
            }
        }
    }
}

std::vector<double> GridAxis::values() const
{
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / (count - 1);
        if (spacing == Spacing::Log) {
            v[i] = std::exp(std::log(min) + f * (std::log(max) - std::log(min)));
        } else {
            // exact mirror images when min == -max
            v[i] = (min * (count - 1 - i) + max * i) / (count - 1);
        }
    }
    v.front() = min;
    v.back() = max;
    if (param == SweepParam::StepCount) {
        for (double &x : v) x = std::round(x);
    }
    return v;
}

std::optional<std::size_t> SweepResult::argmax() const
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].ok) continue;
        if (!best || records[i].fidelity > records[*best].fidelity) best = i;
    }
    return best;
}

std::vector<std::vector<double>> SweepResult::fidelity_matrix() const
{
    if (spec.axes.size() != 2) throw ValidationError("fidelity_matrix needs a two-axis sweep");
    const auto rows = static_cast<std::size_t>(spec.axes[0].count);
    const auto cols = static_cast<std::size_t>(spec.axes[1].count);
    std::vector<std::vector<double>> m(rows, std::vector<double>(cols, kNaN));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const SweepRecord &rec = records.at(r * cols + c);
            if (rec.ok) m[r][c] = rec.fidelity;
        }
    }
    return m;
}

PulseBand SweepResult::band() const
{
    PulseBand band;
    bool first = true;
    for (const SweepRecord &rec : records) {
        if (!rec.ok || !rec.pulse) continue;
        const PulseSequence &p = *rec.pulse;
        if (first) {
            band = {p.u1, p.u1, p.u2, p.u2};
            first = false;
            continue;
        }
        if (static_cast<std::size_t>(p.n_steps()) != band.u1_min.size()) {
            throw ValidationError("band: pulses have different step counts");
        }
        for (std::size_t j = 0; j < p.u1.size(); ++j) {
            band.u1_min[j] = std::min(band.u1_min[j], p.u1[j]);
            band.u1_max[j] = std::max(band.u1_max[j], p.u1[j]);
            band.u2_min[j] = std::min(band.u2_min[j], p.u2[j]);
            band.u2_max[j] = std::max(band.u2_max[j], p.u2[j]);
        }
    }
    return band;
}

PulseSequence rescale_pulse(const PulseSequence &pulse, int n_steps, double dt)
{
    pulse.validate();
    if (n_steps < 1 || !(dt > 0.0)) throw ValidationError("rescale_pulse: invalid target grid");
    const double scale = pulse.total_time() / (n_steps * dt);
    const int src_n = pulse.n_steps();
    PulseSequence out = PulseSequence::constant(n_steps, dt, 0.0, 0.0);
    for (int k = 0; k < n_steps; ++k) {
        const double mid = (k + 0.5) / n_steps;
        const int src = std::min(src_n - 1, static_cast<int>(mid * src_n));
        out.u1[k] = pulse.u1[src] * scale;
        out.u2[k] = pulse.u2[src] * scale;
    }
    return out;
}

SweepRecord run_sweep_point(const SweepSpec &spec, const std::vector<double> &coords,
                            const std::optional<PulseSequence> &chain_seed)
{
    SweepRecord rec;
    rec.coords = coords;
    try {
        const PointSetup s = point_setup(spec, coords);
        rec.n_steps = s.grape.n_steps;
        rec.dt = s.grape.dt;
        rec.total_time = s.grape.total_time();
        rec.chi = s.params.chi();
        rec.delta_minus = s.params.delta_minus();

        const DensityMatrix rho0 = density_from_state(spec.transfer.from);
        const DensityMatrix target = density_from_state(spec.transfer.to);
        if (spec.reoptimize) {
            OptimizationReport report = optimize(s.grape, rho0, target, s.params);
            if (chain_seed) {
                rec.chain_seed = chain_seed;
                GrapeConfig seeded = s.grape;
                seeded.initial_guess = InitialGuess::from_pulse(rescale_pulse(*chain_seed, s.grape.n_steps, s.grape.dt));
                OptimizationReport alt = optimize(seeded, rho0, target, s.params);
                if (alt.final_fidelity > report.final_fidelity) report = std::move(alt);
            }
            rec.fidelity = report.final_fidelity;
            rec.final_bloch = bloch_vector(report.trajectory.final_state());
            rec.iterations = report.iterations;
            rec.convergence = std::string(to_string(report.reason));
            rec.pulse = std::move(report.pulse);
        } else {
            const PulseSequence pulse = pulse_for_point(spec, s.grape);
            const EffectiveFinalState fs = effective_final_state(rho0, pulse, s.params, target, s.grape.substeps);
            rec.fidelity = fs.fidelity;
            rec.final_bloch = bloch_vector(fs.rho);
            rec.convergence = "fixed";
        }
        rec.ok = true;
        rec.status = "ok";
    } catch (const Error &e) {
        rec.ok = false;
        rec.fidelity = kNaN;
        rec.status = std::string("failed: ") + e.what();
    }
    return rec;
}

SweepResult sweep_time(const SweepSpec &spec)
{
    if (spec.axes.size() != 1 ||
        (spec.axes[0].param != SweepParam::StepDuration && spec.axes[0].param != SweepParam::StepCount)) {
        throw ValidationError("time sweep expects a single dt or n_steps axis");
    }
    spec.axes[0].validate();
    if (spec.axes[0].param == SweepParam::StepCount && !spec.reoptimize) {
        throw ValidationError("time sweep over n_steps requires reoptimize (a fixed pulse has fixed length)");
    }
    spec.grape.validate();
    const SweepSpec resolved = resolve_fixed_pulse(spec, spec.params);
    return run_grid("time", resolved, single_chain(static_cast<std::size_t>(spec.axes[0].count)));
}

SweepResult sweep_detuning(const SweepSpec &spec)
{
    require_axes(spec, {SweepParam::Detuning}, "detuning");
    const GridAxis &axis = spec.axes[0];
    if (std::abs(axis.min + axis.max) > 1e-12 * std::max(1.0, std::abs(axis.max)) || axis.count % 2 == 0) {
        throw ValidationError("detuning sweep needs a grid symmetric about zero with an odd count");
    }
    spec.grape.validate();
    const SweepSpec resolved = resolve_fixed_pulse(spec, spec.params.with_detuning(0.0));
    return run_grid("detuning", resolved, single_chain(static_cast<std::size_t>(axis.count)));
}

SweepResult sweep_chi(const SweepSpec &spec)
{
    require_axes(spec, {SweepParam::Chi}, "chi");
    if (spec.axes[0].spacing != Spacing::Log) throw ValidationError("chi sweep requires log spacing");
    spec.grape.validate();
    const SweepSpec resolved = resolve_fixed_pulse(spec, spec.params);
    return run_grid("chi", resolved, single_chain(static_cast<std::size_t>(spec.axes[0].count)));
}

SweepResult contour_chi_time(const SweepSpec &spec)
{
    require_axes(spec, {SweepParam::Chi, SweepParam::StepDuration}, "contour");
    if (spec.axes[0].spacing != Spacing::Log) throw ValidationError("contour chi axis requires log spacing");
    spec.grape.validate();
    const SweepSpec resolved = resolve_fixed_pulse(spec, spec.params);

    // One chain per dt column, running along chi.
    const auto rows = static_cast<std::size_t>(spec.axes[0].count);
    const auto cols = static_cast<std::size_t>(spec.axes[1].count);
    std::vector<std::vector<std::size_t>> chains(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < rows; ++r) chains[c].push_back(r * cols + c);
    }
    return run_grid("contour", resolved, chains);
}

std::string sweep_spec_json(const SweepSpec &spec)
{
    json axes = json::array();
    for (const GridAxis &a : spec.axes) {
        axes.push_back({{"param", to_string(a.param)},
                        {"min", a.min},
                        {"max", a.max},
                        {"count", a.count},
                        {"spacing", to_string(a.spacing)}});
    }
    const json j = {
        {"transfer", {{"from", to_string(spec.transfer.from)}, {"to", to_string(spec.transfer.to)}}},
        {"axes", axes},
        {"grape", detail::to_json(spec.grape)},
        {"params", detail::to_json(spec.params)},
        {"reoptimize", spec.reoptimize},
        {"warm_chain", spec.warm_chain},
        {"fixed_pulse", pulse_or_null(spec.fixed_pulse)},
    };
    return j.dump();
}

std::filesystem::path create_run_directory(const std::filesystem::path &root, const std::string &label,
                                           const std::filesystem::path &explicit_dir, bool force)
{
    namespace fs = std::filesystem;
    const fs::path dir = explicit_dir.empty() ? root / (utc_stamp("%Y%m%dT%H%M%SZ") + "_" + label) : explicit_dir;
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!force) {
            throw IoError("output directory '" + dir.string() + "' already exists (use --force to overwrite)");
        }
        if (!fs::is_directory(dir, ec)) throw IoError("output path '" + dir.string() + "' is not a directory");
        return dir;
    }
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

std::string format_double(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_sweep_csv(const SweepResult &result, const std::filesystem::path &path)
{
    std::ostringstream os;
    const auto f = format_double;
    const auto status = [](const SweepRecord &r) { return r.ok ? "ok" : "failed"; };
    const auto bloch = [&](const SweepRecord &r) {
        return f(r.final_bloch.x) + "," + f(r.final_bloch.y) + "," + f(r.final_bloch.z);
    };
    if (result.kind == "time") {
        os << "total_time,fidelity,status,n_steps,dt,iterations,bloch_x,bloch_y,bloch_z\n";
        for (const auto &r : result.records) {
            os << f(r.total_time) << ',' << f(r.fidelity) << ',' << status(r) << ',' << r.n_steps << ','
               << f(r.dt) << ',' << r.iterations << ',' << bloch(r) << '\n';
        }
    } else if (result.kind == "detuning") {
        os << "delta_minus,fidelity,status,bloch_x,bloch_y,bloch_z\n";
        for (const auto &r : result.records) {
            os << f(r.delta_minus) << ',' << f(r.fidelity) << ',' << status(r) << ',' << bloch(r) << '\n';
        }
    } else if (result.kind == "chi") {
        os << "chi,fidelity,status,total_time,iterations,bloch_x,bloch_y,bloch_z\n";
        for (const auto &r : result.records) {
            os << f(r.chi) << ',' << f(r.fidelity) << ',' << status(r) << ',' << f(r.total_time) << ','
               << r.iterations << ',' << bloch(r) << '\n';
        }
    } else {
        os << "chi,dt,total_time,fidelity,status\n";
        for (const auto &r : result.records) {
            os << f(r.chi) << ',' << f(r.dt) << ',' << f(r.total_time) << ',' << f(r.fidelity) << ','
               << status(r) << '\n';
        }
    }
    detail::write_text_file(path, os.str());
}

void write_sweep_outputs(const SweepResult &result, const std::filesystem::path &dir)
{
    write_sweep_csv(result, dir / "sweep.csv");

    if (result.kind == "chi" && result.spec.reoptimize) {
        const PulseBand band = result.band();
        std::ostringstream os;
        os << "step,u1_min,u1_max,u2_min,u2_max\n";
        for (std::size_t j = 0; j < band.u1_min.size(); ++j) {
            os << j << ',' << format_double(band.u1_min[j]) << ',' << format_double(band.u1_max[j]) << ','
               << format_double(band.u2_min[j]) << ',' << format_double(band.u2_max[j]) << '\n';
        }
        detail::write_text_file(dir / "band.csv", os.str());
    }

    json points = json::array();
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const SweepRecord &r = result.records[i];
        json entry = {{"index", i},
                      {"coords", r.coords},
                      {"fidelity", number_or_null(r.fidelity)},
                      {"status", r.status},
                      {"file", nullptr}};
        std::optional<PulseSequence> pulse = r.pulse;
        if (!pulse && r.ok && result.spec.fixed_pulse) {
            pulse = *result.spec.fixed_pulse;
            pulse->dt = r.dt;
        }
        if (pulse) {
            char name[32];
            std::snprintf(name, sizeof name, "point_%04zu.json", i);
            PulseDocument doc{*pulse, point_setup(result.spec, r.coords).params, result.spec.transfer,
                              r.ok ? std::optional<double>(r.fidelity) : std::nullopt};
            json j = json::parse(to_json_string(doc));
            j["meta"]["sweep"] = {{"kind", result.kind},
                                  {"index", i},
                                  {"coords", r.coords},
                                  {"status", r.status},
                                  {"iterations", r.iterations},
                                  {"convergence", r.convergence},
                                  {"chain_seed", pulse_or_null(r.chain_seed)}};
            detail::write_text_file(dir / name, j.dump(2) + "\n");
            entry["file"] = name;
        }
        points.push_back(entry);
    }

    const auto best = result.argmax();
    const json index = {
        {"kind", result.kind},
        {"provenance",
         {{"config", json::parse(result.provenance.config_json)},
          {"version", result.provenance.version},
          {"seed", result.provenance.seed},
          {"created_at", result.provenance.created_at}}},
        {"points", points},
        {"argmax", best ? json(*best) : json(nullptr)},
    };
    detail::write_text_file(dir / "index.json", index.dump(2) + "\n");
}

BlochExport bloch_trajectory_export(const Transfer &transfer, const PulseSequence &pulse,
                                    const ModelParams &params, const std::filesystem::path &path,
                                    const PropagationOptions &options)
{
    return bloch_trajectory_export(density_from_state(transfer.from), density_from_state(transfer.to), pulse, params,
                                   path, options);
}

BlochExport bloch_trajectory_export(const DensityMatrix &rho0, const DensityMatrix &target,
                                    const PulseSequence &pulse, const ModelParams &params,
                                    const std::filesystem::path &path, const PropagationOptions &options)
{
    Trajectory traj = propagate(rho0, pulse, params, options);
    std::ostringstream os;
    os << "t,x,y,z,purity\n";
    for (const TrajectorySample &s : traj.samples) {
        os << format_double(s.t) << ',' << format_double(s.bloch.x) << ',' << format_double(s.bloch.y) << ','
           << format_double(s.bloch.z) << ',' << format_double(s.rho.purity()) << '\n';
    }
    detail::write_text_file(path, os.str());
    const double f = uhlmann_fidelity(target, traj.final_state());
    return {std::move(traj), f};
}

} // namespace qsl
