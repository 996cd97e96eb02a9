#include "qsl/run_config.hpp"

#include "json_codec.hpp"
#include "qsl/errors.hpp"

#include <array>
#include <cmath>
#include <set>

namespace qsl {

using detail::json;

namespace {

enum class Type { Number, Integer, Boolean, String };

struct KeySpec {
    const char *key;
    Type type;
    bool nullable; // null means "subcommand default"
};

// Every accepted key. Anything else is rejected.
constexpr std::array kKeys{
    KeySpec{"subcommand", Type::String, false},
    KeySpec{"transfer.from", Type::String, false},
    KeySpec{"transfer.to", Type::String, false},
    KeySpec{"params.omega_ratio", Type::Number, false},
    KeySpec{"params.delta_minus", Type::Number, false},
    KeySpec{"params.chi", Type::Number, false},
    KeySpec{"params.p1", Type::Number, false},
    KeySpec{"params.p2", Type::Number, false},
    KeySpec{"params.environment", Type::Boolean, false},
    KeySpec{"params.did_lindblad", Type::Boolean, false},
    KeySpec{"params.did_cross", Type::Boolean, false},
    KeySpec{"grape.n_steps", Type::Integer, false},
    KeySpec{"grape.dt", Type::Number, false},
    KeySpec{"grape.max_iterations", Type::Integer, false},
    KeySpec{"grape.f_tol", Type::Number, false},
    KeySpec{"grape.f_tol_window", Type::Integer, false},
    KeySpec{"grape.g_tol", Type::Number, false},
    KeySpec{"grape.h_fd", Type::Number, false},
    KeySpec{"grape.h0", Type::Number, false},
    KeySpec{"grape.shrink", Type::Number, false},
    KeySpec{"grape.max_shrinks", Type::Integer, false},
    KeySpec{"grape.u_max", Type::Number, false},
    KeySpec{"grape.substeps", Type::Integer, false},
    KeySpec{"grape.sign_restarts", Type::Boolean, false},
    KeySpec{"grape.initial_guess", Type::String, false},
    KeySpec{"grape.initial_u1", Type::Number, false},
    KeySpec{"grape.initial_u2", Type::Number, false},
    KeySpec{"grape.random_amplitude", Type::Number, false},
    KeySpec{"grape.initial_file", Type::String, false},
    KeySpec{"grape.warm_start_from", Type::String, false},
    KeySpec{"sweep.axis", Type::String, true},
    KeySpec{"sweep.min", Type::Number, true},
    KeySpec{"sweep.max", Type::Number, true},
    KeySpec{"sweep.count", Type::Integer, true},
    KeySpec{"sweep.spacing", Type::String, true},
    KeySpec{"sweep.min2", Type::Number, true},
    KeySpec{"sweep.max2", Type::Number, true},
    KeySpec{"sweep.count2", Type::Integer, true},
    KeySpec{"sweep.reoptimize", Type::Boolean, true},
    KeySpec{"sweep.warm_chain", Type::Boolean, false},
    KeySpec{"propagate.pulse_file", Type::String, false},
    KeySpec{"propagate.sample_stride", Type::Integer, false},
    KeySpec{"output.root", Type::String, false},
    KeySpec{"output.dir", Type::String, false},
    KeySpec{"output.label", Type::String, false},
    KeySpec{"output.force", Type::Boolean, false},
    KeySpec{"seed", Type::Integer, false},
    KeySpec{"workers", Type::Integer, false},
};

const KeySpec *find_key(std::string_view key)
{
    for (const KeySpec &k : kKeys) {
        if (key == k.key) return &k;
    }
    return nullptr;
}

std::string key_list()
{
    std::string s;
    for (const KeySpec &k : kKeys) {
        if (!s.empty()) s += ", ";
        s += k.key;
    }
    return s;
}

json defaults()
{
    const ModelParams p = ModelParams::flux_qubit();
    const GrapeConfig g;
    json j = {
        {"subcommand", "optimize"},
        {"transfer.from", "+X"},
        {"transfer.to", "-X"},
        {"params.omega_ratio", p.omega_ratio()},
        {"params.delta_minus", p.delta_minus()},
        {"params.chi", p.chi()},
        {"params.p1", p.p1()},
        {"params.p2", p.p2()},
        {"params.environment", true},
        {"params.did_lindblad", true},
        {"params.did_cross", true},
        {"grape.n_steps", g.n_steps},
        {"grape.dt", g.dt},
        {"grape.max_iterations", g.max_iterations},
        {"grape.f_tol", g.f_tol},
        {"grape.f_tol_window", g.f_tol_window},
        {"grape.g_tol", g.g_tol},
        {"grape.h_fd", g.h_fd},
        {"grape.h0", g.h0},
        {"grape.shrink", g.shrink},
        {"grape.max_shrinks", g.max_shrinks},
        {"grape.u_max", g.u_max},
        {"grape.substeps", g.substeps},
        {"grape.sign_restarts", g.sign_restarts},
        {"grape.initial_guess", "constant"},
        {"grape.initial_u1", g.initial_guess.u1},
        {"grape.initial_u2", g.initial_guess.u2},
        {"grape.random_amplitude", g.initial_guess.random_amplitude},
        {"grape.initial_file", ""},
        {"grape.warm_start_from", ""},
        {"sweep.warm_chain", true},
        {"propagate.pulse_file", ""},
        {"propagate.sample_stride", 1},
        {"output.root", ""},
        {"output.dir", ""},
        {"output.label", ""},
        {"output.force", false},
        {"seed", 0},
        {"workers", 1},
    };
    for (const KeySpec &k : kKeys) {
        if (k.nullable) j[k.key] = nullptr;
    }
    return j;
}

std::string type_name(Type t)
{
    switch (t) {
    case Type::Number: return "a number";
    case Type::Integer: return "an integer";
    case Type::Boolean: return "a boolean";
    case Type::String: return "a string";
    }
    return "?";
}

void check_type(const KeySpec &spec, const json &value)
{
    if (value.is_null() && spec.nullable) return;
    bool ok = false;
    switch (spec.type) {
    case Type::Number: ok = value.is_number() && std::isfinite(value.get<double>()); break;
    case Type::Integer:
        ok = value.is_number_integer() ||
             (value.is_number_float() && std::nearbyint(value.get<double>()) == value.get<double>() &&
              std::abs(value.get<double>()) < 9e15);
        break;
    case Type::Boolean: ok = value.is_boolean(); break;
    case Type::String: ok = value.is_string(); break;
    }
    if (!ok) throw ValidationError("config key '" + std::string(spec.key) + "': expected " + type_name(spec.type) +
                                   ", got " + value.dump());
}

// Applies one source onto the accumulated flat config.
void merge(json &acc, std::set<std::string> &explicit_keys, const std::string &key, const json &value,
           std::string_view origin)
{
    const KeySpec *spec = find_key(key);
    if (spec == nullptr) {
        throw ValidationError("unknown config key '" + key + "' in " + std::string(origin) +
                              " (valid keys: " + key_list() + ")");
    }
    check_type(*spec, value);
    acc[key] = value;
    explicit_keys.insert(key);
}

struct Flat {
    json values;
    std::set<std::string> explicit_keys;

    bool is_set(const std::string &key) const { return explicit_keys.count(key) != 0; }
    bool is_null(const std::string &key) const { return values.at(key).is_null(); }
    double number(const std::string &key) const { return values.at(key).get<double>(); }
    int integer(const std::string &key) const
    {
        const double v = values.at(key).get<double>();
        if (v < -2147483648.0 || v > 2147483647.0) {
            throw ValidationError("config key '" + key + "': out of range");
        }
        return static_cast<int>(v);
    }
    bool boolean(const std::string &key) const { return values.at(key).get<bool>(); }
    std::string string(const std::string &key) const { return values.at(key).get<std::string>(); }
};

// Re-raises a validation failure with the key path in front.
template <typename F>
auto with_key(const std::string &key, F &&fn)
{
    try {
        return fn();
    } catch (const ValidationError &e) {
        throw ValidationError("config key '" + key + "': " + e.what());
    }
}

StateLabel label_at(const Flat &f, const std::string &key)
{
    return with_key(key, [&] { return parse_state_label(f.string(key)); });
}

Transfer parse_transfer(std::string_view text)
{
    const auto arrow = text.find("->");
    if (arrow == std::string_view::npos) {
        throw ValidationError("expected a transfer like \"+X->+Z\", got \"" + std::string(text) + "\"");
    }
    return {parse_state_label(text.substr(0, arrow)), parse_state_label(text.substr(arrow + 2))};
}

SweepParam parse_axis(std::string_view text)
{
    for (SweepParam p : {SweepParam::StepDuration, SweepParam::StepCount, SweepParam::Detuning, SweepParam::Chi}) {
        if (text == to_string(p)) return p;
    }
    throw ValidationError("unknown sweep axis \"" + std::string(text) + "\" (valid: dt, n_steps, delta_minus, chi)");
}

Spacing parse_spacing(std::string_view text)
{
    if (text == "linear") return Spacing::Linear;
    if (text == "log") return Spacing::Log;
    throw ValidationError("unknown spacing \"" + std::string(text) + "\" (valid: linear, log)");
}

GridAxis default_axis(Subcommand cmd, SweepParam axis)
{
    switch (cmd) {
    case Subcommand::SweepTime:
        if (axis == SweepParam::StepCount) return {axis, 2.0, 60.0, 40, Spacing::Linear};
        return {SweepParam::StepDuration, 0.01, 0.2, 40, Spacing::Linear};
    case Subcommand::SweepDetuning: return {SweepParam::Detuning, -3.0, 3.0, 61, Spacing::Linear};
    case Subcommand::SweepChi:
    case Subcommand::Contour: return {SweepParam::Chi, 1e-5, 1e-1, 17, Spacing::Log};
    default: return {};
    }
}

GridAxis resolve_axis(const Flat &f, GridAxis axis, const std::string &suffix, bool spacing_key)
{
    if (!f.is_null("sweep.min" + suffix)) axis.min = f.number("sweep.min" + suffix);
    if (!f.is_null("sweep.max" + suffix)) axis.max = f.number("sweep.max" + suffix);
    if (!f.is_null("sweep.count" + suffix)) axis.count = f.integer("sweep.count" + suffix);
    if (spacing_key && !f.is_null("sweep.spacing")) {
        axis.spacing = with_key("sweep.spacing", [&] { return parse_spacing(f.string("sweep.spacing")); });
    }
    with_key("sweep", [&] {
        axis.validate();
        return 0;
    });
    return axis;
}

std::vector<GridAxis> resolve_sweep(const Flat &f, Subcommand cmd)
{
    const bool has_axis = !f.is_null("sweep.axis");
    const SweepParam axis =
        has_axis ? with_key("sweep.axis", [&] { return parse_axis(f.string("sweep.axis")); }) : SweepParam::StepDuration;

    SweepParam expected = SweepParam::StepDuration;
    switch (cmd) {
    case Subcommand::SweepTime:
        if (axis != SweepParam::StepDuration && axis != SweepParam::StepCount) {
            throw ValidationError("config key 'sweep.axis': sweep-time takes dt or n_steps");
        }
        return {resolve_axis(f, default_axis(cmd, axis), "", true)};
    case Subcommand::SweepDetuning: expected = SweepParam::Detuning; break;
    case Subcommand::SweepChi:
    case Subcommand::Contour: expected = SweepParam::Chi; break;
    default:
        return {};
    }
    if (has_axis && axis != expected) {
        throw ValidationError("config key 'sweep.axis': " + std::string(to_string(cmd)) + " sweeps " +
                              std::string(to_string(expected)));
    }
    std::vector<GridAxis> axes{resolve_axis(f, default_axis(cmd, expected), "", true)};
    if (cmd == Subcommand::Contour) {
        axes.push_back(resolve_axis(f, {SweepParam::StepDuration, 0.01, 0.2, 25, Spacing::Linear}, "2", false));
    }
    return axes;
}

RunConfig build(const Flat &f, const std::vector<std::string> &positionals)
{
    RunConfig cfg;
    cfg.subcommand = with_key("subcommand", [&] { return parse_subcommand(f.string("subcommand")); });

    cfg.transfer = {label_at(f, "transfer.from"), label_at(f, "transfer.to")};
    if (positionals.size() > 2) throw ValidationError("expected at most two state labels (from, to)");
    if (!positionals.empty()) {
        cfg.transfer.from = with_key("transfer.from", [&] { return parse_state_label(positionals[0]); });
    }
    if (positionals.size() == 2) {
        cfg.transfer.to = with_key("transfer.to", [&] { return parse_state_label(positionals[1]); });
    }

    double p1 = f.number("params.p1");
    double p2 = f.number("params.p2");
    if (f.is_set("params.p1") && !f.is_set("params.p2")) p2 = 1.0 - p1;
    if (f.is_set("params.p2") && !f.is_set("params.p1")) p1 = 1.0 - p2;
    const Channels channels{f.boolean("params.environment"), f.boolean("params.did_lindblad"),
                            f.boolean("params.did_cross")};
    cfg.params = ModelParams(f.number("params.omega_ratio"), f.number("params.delta_minus"),
                             f.number("params.chi"), p1, p2, channels);

    GrapeConfig &g = cfg.grape;
    g.n_steps = f.integer("grape.n_steps");
    g.dt = f.number("grape.dt");
    g.max_iterations = f.integer("grape.max_iterations");
    g.f_tol = f.number("grape.f_tol");
    g.f_tol_window = f.integer("grape.f_tol_window");
    g.g_tol = f.number("grape.g_tol");
    g.h_fd = f.number("grape.h_fd");
    g.h0 = f.number("grape.h0");
    g.shrink = f.number("grape.shrink");
    g.max_shrinks = f.integer("grape.max_shrinks");
    g.u_max = f.number("grape.u_max");
    g.substeps = f.integer("grape.substeps");
    g.sign_restarts = f.boolean("grape.sign_restarts");

    const auto seed = f.values.at("seed");
    if (seed.get<double>() < 0.0) throw ValidationError("config key 'seed': must be non-negative");
    cfg.seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>()
                                         : static_cast<std::uint64_t>(seed.get<double>());
    g.seed = cfg.seed;
    cfg.workers = f.integer("workers");
    if (cfg.workers < 1) throw ValidationError("config key 'workers': must be >= 1");
    g.workers = cfg.workers;

    cfg.initial_guess = f.string("grape.initial_guess");
    cfg.initial_file = f.string("grape.initial_file");
    const std::string warm = f.string("grape.warm_start_from");
    if (!warm.empty()) cfg.warm_start_from = with_key("grape.warm_start_from", [&] { return parse_transfer(warm); });
    const double u1 = f.number("grape.initial_u1"), u2 = f.number("grape.initial_u2");
    const double amplitude = f.number("grape.random_amplitude");
    if (cfg.initial_guess == "constant") {
        g.initial_guess = InitialGuess::constant(u1, u2);
    } else if (cfg.initial_guess == "random") {
        g.initial_guess = InitialGuess::random(amplitude);
    } else if (cfg.initial_guess == "file") {
        if (cfg.initial_file.empty()) throw ValidationError("config key 'grape.initial_file': required by initial_guess \"file\"");
        g.initial_guess = InitialGuess::constant(u1, u2); // replaced by the file at run time
    } else if (cfg.initial_guess == "warm_start") {
        if (!cfg.warm_start_from) {
            throw ValidationError("config key 'grape.warm_start_from': required by initial_guess \"warm_start\"");
        }
        g.initial_guess = InitialGuess::constant(u1, u2); // source transfer starts here
    } else {
        throw ValidationError("config key 'grape.initial_guess': expected constant, random, file or warm_start, got \"" +
                              cfg.initial_guess + "\"");
    }
    g.initial_guess.u1 = u1;
    g.initial_guess.u2 = u2;
    g.initial_guess.random_amplitude = amplitude;
    with_key("grape", [&] {
        g.validate();
        return 0;
    });

    cfg.sweep_axes = resolve_sweep(f, cfg.subcommand);
    cfg.reoptimize = f.is_null("sweep.reoptimize") ? cfg.subcommand != Subcommand::SweepDetuning
                                                   : f.boolean("sweep.reoptimize");
    cfg.warm_chain = f.boolean("sweep.warm_chain");
    if (cfg.subcommand == Subcommand::SweepTime && cfg.sweep_axes[0].param == SweepParam::StepCount &&
        !cfg.reoptimize) {
        throw ValidationError("config key 'sweep.reoptimize': an n_steps sweep must re-optimize");
    }

    cfg.pulse_file = f.string("propagate.pulse_file");
    if (cfg.subcommand == Subcommand::Propagate && cfg.pulse_file.empty()) {
        throw ValidationError("config key 'propagate.pulse_file': required by propagate");
    }
    cfg.sample_stride = f.integer("propagate.sample_stride");
    if (cfg.sample_stride < 1) throw ValidationError("config key 'propagate.sample_stride': must be >= 1");

    cfg.output_root = f.string("output.root");
    cfg.output_dir = f.string("output.dir");
    cfg.output_label = f.string("output.label");
    cfg.force = f.boolean("output.force");
    return cfg;
}

json parse_json_text(std::string_view text, std::string_view origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        throw ValidationError(std::string(origin) + ": invalid JSON: " + e.what());
    }
}

void merge_object(Flat &flat, const json &obj, std::string_view origin)
{
    if (!obj.is_object()) throw ValidationError(std::string(origin) + ": expected a flat JSON object");
    for (const auto &[key, value] : obj.items()) merge(flat.values, flat.explicit_keys, key, value, origin);
}

} // namespace

std::string_view to_string(Subcommand cmd)
{
    switch (cmd) {
    case Subcommand::Optimize: return "optimize";
    case Subcommand::Propagate: return "propagate";
    case Subcommand::SweepTime: return "sweep-time";
    case Subcommand::SweepDetuning: return "sweep-detuning";
    case Subcommand::SweepChi: return "sweep-chi";
    case Subcommand::Contour: return "contour";
    case Subcommand::States: return "states";
    }
    return "?";
}

Subcommand parse_subcommand(std::string_view text)
{
    for (Subcommand c : {Subcommand::Optimize, Subcommand::Propagate, Subcommand::SweepTime, Subcommand::SweepDetuning,
                         Subcommand::SweepChi, Subcommand::Contour, Subcommand::States}) {
        if (text == to_string(c)) return c;
    }
    throw ValidationError("unknown subcommand \"" + std::string(text) +
                          "\" (valid: optimize, propagate, sweep-time, sweep-detuning, sweep-chi, contour, states)");
}

RunConfig parse_config(const ConfigSources &sources)
{
    Flat flat{defaults(), {}};
    if (sources.file) {
        const std::string origin = sources.file->string();
        merge_object(flat, parse_json_text(detail::read_text_file(*sources.file), origin), origin);
    }
    for (const auto &[key, text] : sources.sets) {
        // String keys take the text verbatim unless it is a quoted JSON string.
        const KeySpec *spec = find_key(key);
        const bool raw = spec != nullptr && spec->type == Type::String && (text.empty() || text.front() != '"') &&
                         text != "null";
        json value = text;
        if (!raw) {
            try {
                value = json::parse(text);
            } catch (const json::parse_error &) {
                value = text;
            }
        }
        merge(flat.values, flat.explicit_keys, key, value, "--set " + key);
    }
    return build(flat, sources.positionals);
}

RunConfig parse_config_text(std::string_view json_text)
{
    Flat flat{defaults(), {}};
    merge_object(flat, parse_json_text(json_text, "config"), "config");
    return build(flat, {});
}

std::string to_canonical_json(const RunConfig &cfg)
{
    const GrapeConfig &g = cfg.grape;
    const ModelParams &p = cfg.params;
    json j = {
        {"subcommand", to_string(cfg.subcommand)},
        {"transfer.from", to_string(cfg.transfer.from)},
        {"transfer.to", to_string(cfg.transfer.to)},
        {"params.omega_ratio", p.omega_ratio()},
        {"params.delta_minus", p.delta_minus()},
        {"params.chi", p.chi()},
        {"params.p1", p.p1()},
        {"params.p2", p.p2()},
        {"params.environment", p.channels().environment},
        {"params.did_lindblad", p.channels().did_lindblad},
        {"params.did_cross", p.channels().did_cross},
        {"grape.n_steps", g.n_steps},
        {"grape.dt", g.dt},
        {"grape.max_iterations", g.max_iterations},
        {"grape.f_tol", g.f_tol},
        {"grape.f_tol_window", g.f_tol_window},
        {"grape.g_tol", g.g_tol},
        {"grape.h_fd", g.h_fd},
        {"grape.h0", g.h0},
        {"grape.shrink", g.shrink},
        {"grape.max_shrinks", g.max_shrinks},
        {"grape.u_max", g.u_max},
        {"grape.substeps", g.substeps},
        {"grape.sign_restarts", g.sign_restarts},
        {"grape.initial_guess", cfg.initial_guess},
        {"grape.initial_u1", g.initial_guess.u1},
        {"grape.initial_u2", g.initial_guess.u2},
        {"grape.random_amplitude", g.initial_guess.random_amplitude},
        {"grape.initial_file", cfg.initial_file},
        {"grape.warm_start_from", cfg.warm_start_from ? to_string(*cfg.warm_start_from) : std::string()},
        {"sweep.axis", nullptr},
        {"sweep.min", nullptr},
        {"sweep.max", nullptr},
        {"sweep.count", nullptr},
        {"sweep.spacing", nullptr},
        {"sweep.min2", nullptr},
        {"sweep.max2", nullptr},
        {"sweep.count2", nullptr},
        {"sweep.reoptimize", cfg.reoptimize},
        {"sweep.warm_chain", cfg.warm_chain},
        {"propagate.pulse_file", cfg.pulse_file},
        {"propagate.sample_stride", cfg.sample_stride},
        {"output.root", cfg.output_root},
        {"output.dir", cfg.output_dir},
        {"output.label", cfg.output_label},
        {"output.force", cfg.force},
        {"seed", cfg.seed},
        {"workers", cfg.workers},
    };
    if (!cfg.sweep_axes.empty()) {
        const GridAxis &a = cfg.sweep_axes[0];
        j["sweep.axis"] = to_string(a.param);
        j["sweep.min"] = a.min;
        j["sweep.max"] = a.max;
        j["sweep.count"] = a.count;
        j["sweep.spacing"] = to_string(a.spacing);
    }
    if (cfg.sweep_axes.size() > 1) {
        const GridAxis &b = cfg.sweep_axes[1];
        j["sweep.min2"] = b.min;
        j["sweep.max2"] = b.max;
        j["sweep.count2"] = b.count;
    }
    return j.dump(2) + "\n";
}

} // namespace qsl
