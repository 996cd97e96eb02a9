#include "json_codec.hpp"

#include "qsl/errors.hpp"

#include <fstream>
#include <sstream>

namespace qsl::detail {

namespace {

std::string key_path(std::string_view where, std::string_view key)
{
    return where.empty() ? std::string(key) : std::string(where) + "." + std::string(key);
}

bool optional_bool(const json &j, std::string_view key, std::string_view where, bool fallback)
{
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) throw ValidationError(key_path(where, key) + ": expected a boolean");
    return it->get<bool>();
}

} // namespace

double require_number(const json &j, std::string_view key, std::string_view where)
{
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(key_path(where, key) + ": missing");
    if (!it->is_number()) throw ValidationError(key_path(where, key) + ": expected a number");
    return it->get<double>();
}

json to_json(const ModelParams &params)
{
    const Channels &ch = params.channels();
    return {
        {"omega_ratio", params.omega_ratio()},
        {"delta_minus", params.delta_minus()},
        {"delta_plus", params.delta_plus()},
        {"chi", params.chi()},
        {"p1", params.p1()},
        {"p2", params.p2()},
        {"channels",
         {{"environment", ch.environment}, {"did_lindblad", ch.did_lindblad}, {"did_cross", ch.did_cross}}},
    };
}

ModelParams params_from_json(const json &j, std::string_view where)
{
    if (!j.is_object()) throw ValidationError(std::string(where) + ": expected an object");
    Channels ch;
    if (const auto it = j.find("channels"); it != j.end()) {
        const std::string sub = key_path(where, "channels");
        if (!it->is_object()) throw ValidationError(sub + ": expected an object");
        ch.environment = optional_bool(*it, "environment", sub, true);
        ch.did_lindblad = optional_bool(*it, "did_lindblad", sub, true);
        ch.did_cross = optional_bool(*it, "did_cross", sub, true);
    }
    return ModelParams(require_number(j, "omega_ratio", where), require_number(j, "delta_minus", where),
                       require_number(j, "chi", where), require_number(j, "p1", where),
                       require_number(j, "p2", where), ch);
}

json to_json(const PulseSequence &pulse)
{
    return {{"n_steps", pulse.n_steps()}, {"dt", pulse.dt}, {"u1", pulse.u1}, {"u2", pulse.u2}};
}

json to_json(const GrapeConfig &cfg)
{
    json guess;
    switch (cfg.initial_guess.kind) {
    case InitialGuess::Kind::Constant:
        guess = {{"kind", "constant"}, {"u1", cfg.initial_guess.u1}, {"u2", cfg.initial_guess.u2}};
        break;
    case InitialGuess::Kind::Pulse:
        guess = {{"kind", "pulse"}, {"pulse", to_json(cfg.initial_guess.pulse)}};
        break;
    case InitialGuess::Kind::Random:
        guess = {{"kind", "random"}, {"amplitude", cfg.initial_guess.random_amplitude}};
        break;
    }
    return {
        {"n_steps", cfg.n_steps},
        {"dt", cfg.dt},
        {"max_iterations", cfg.max_iterations},
        {"f_tol", cfg.f_tol},
        {"f_tol_window", cfg.f_tol_window},
        {"g_tol", cfg.g_tol},
        {"h_fd", cfg.h_fd},
        {"h0", cfg.h0},
        {"shrink", cfg.shrink},
        {"max_shrinks", cfg.max_shrinks},
        {"u_max", cfg.u_max},
        {"substeps", cfg.substeps},
        {"sign_restarts", cfg.sign_restarts},
        {"initial_guess", guess},
        {"seed", cfg.seed},
    };
}

void write_text_file(const std::filesystem::path &path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    return buf.str();
}

} // namespace qsl::detail
