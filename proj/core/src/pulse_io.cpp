#include "qsl/pulse_io.hpp"

#include "json_codec.hpp"
#include "qsl/errors.hpp"

namespace qsl {

using detail::json;

namespace {

std::vector<double> number_array(const json &j, const char *key)
{
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string(key) + ": missing");
    if (!it->is_array()) throw ValidationError(std::string(key) + ": expected an array");
    std::vector<double> out;
    out.reserve(it->size());
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json &v = (*it)[i];
        if (!v.is_number()) {
            throw ValidationError(std::string(key) + "[" + std::to_string(i) + "]: expected a number");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace

std::string to_json_string(const PulseDocument &doc)
{
    json j = detail::to_json(doc.pulse);
    json meta = json::object();
    if (doc.params) meta["params"] = detail::to_json(*doc.params);
    if (doc.transfer) {
        meta["transfer"] = {{"from", to_string(doc.transfer->from)}, {"to", to_string(doc.transfer->to)}};
    }
    if (doc.fidelity) meta["fidelity"] = *doc.fidelity;
    j["meta"] = meta;
    return j.dump(2) + "\n";
}

PulseDocument pulse_document_from_json(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ValidationError(std::string("pulse file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("pulse file: expected a JSON object");

    PulseDocument doc;
    doc.pulse.dt = detail::require_number(j, "dt", "");
    doc.pulse.u1 = number_array(j, "u1");
    doc.pulse.u2 = number_array(j, "u2");
    const auto n = j.find("n_steps");
    if (n == j.end() || !n->is_number_integer()) throw ValidationError("n_steps: expected an integer");
    if (n->get<long long>() != static_cast<long long>(doc.pulse.u1.size())) {
        throw ValidationError("n_steps: " + n->dump() + " does not match u1 length " +
                              std::to_string(doc.pulse.u1.size()));
    }
    doc.pulse.validate();

    if (const auto m = j.find("meta"); m != j.end() && !m->is_null()) {
        if (!m->is_object()) throw ValidationError("meta: expected an object");
        if (const auto p = m->find("params"); p != m->end()) {
            doc.params = detail::params_from_json(*p, "meta.params");
        }
        if (const auto t = m->find("transfer"); t != m->end()) {
            if (!t->is_object() || !t->contains("from") || !t->contains("to") || !(*t)["from"].is_string() ||
                !(*t)["to"].is_string()) {
                throw ValidationError("meta.transfer: expected {\"from\": label, \"to\": label}");
            }
            doc.transfer = Transfer{parse_state_label((*t)["from"].get<std::string>()),
                                    parse_state_label((*t)["to"].get<std::string>())};
        }
        if (const auto f = m->find("fidelity"); f != m->end()) {
            if (!f->is_number()) throw ValidationError("meta.fidelity: expected a number");
            doc.fidelity = f->get<double>();
        }
    }
    return doc;
}

void write_pulse_file(const std::filesystem::path &path, const PulseDocument &doc)
{
    detail::write_text_file(path, to_json_string(doc));
}

PulseDocument read_pulse_file(const std::filesystem::path &path)
{
    const std::string text = detail::read_text_file(path);
    try {
        return pulse_document_from_json(text);
    } catch (const ValidationError &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

} // namespace qsl
