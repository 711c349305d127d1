#include "msnv/protocol.hpp"

#include <json.hpp>

namespace msnv::wire {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json parse_object(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed message: ") + e.what());
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw ProtocolError("message must be an object with a string 'type'");
    return j;
}

template <typename T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ProtocolError(std::string("field '") + key + "' has the wrong type");
    }
}

bool flag(const json& j, const char* key) {
    if (!j.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) return v.get<int>() == 1;
    throw ProtocolError(std::string("field '") + key + "' must be a boolean");
}

}  // namespace

std::string_view type_name(const Inbound& m) {
    return std::visit(overloaded{[](const Hello&) { return "HELLO"; }, [](const Gaze&) { return "GAZE"; },
                                 [](const DocReady&) { return "DOC_READY"; }, [](const Next&) { return "NEXT"; },
                                 [](const Answers&) { return "ANSWERS"; }, [](const Ratings&) { return "RATINGS"; }},
                      m);
}

std::string_view type_name(const Outbound& m) {
    return std::visit(
        overloaded{[](const ShowDoc&) { return "SHOW_DOC"; }, [](const Highlight&) { return "HIGHLIGHT"; },
                   [](const Desaturate&) { return "DESATURATE"; }, [](const Remove&) { return "REMOVE"; },
                   [](const Questions&) { return "QUESTIONS"; }, [](const End&) { return "END"; },
                   [](const Error&) { return "ERROR"; }},
        m);
}

std::string encode(const Inbound& m) {
    json j = std::visit(
        overloaded{
            [](const Hello& h) { return json{{"participantId", h.participant_id}}; },
            [](const Gaze& g) { return json{{"t_ms", g.t_ms}, {"x", g.x}, {"y", g.y}, {"lv", g.lv}, {"rv", g.rv}}; },
            [](const DocReady& d) { return json{{"docId", d.doc_id}}; },
            [](const Next& n) { return json{{"docId", n.doc_id}}; },
            [](const Answers& a) { return json{{"docId", a.doc_id}, {"choices", a.choices}, {"ratings", a.ratings}}; },
            [](const Ratings& r) { return json{{"items", r.items}}; }},
        m);
    j["type"] = type_name(m);
    return j.dump();
}

std::string encode(const Outbound& m) {
    json j = std::visit(
        overloaded{
            [](const ShowDoc& s) { return json{{"doc", json::parse(serialize_document(s.doc))}}; },
            [](const Highlight& h) {
                return json{{"refId", h.ref_id}, {"barIds", h.bar_ids}, {"outline", h.outline}, {"width", h.width}};
            },
            [](const Desaturate& d) { return json{{"refId", d.ref_id}, {"outline", d.outline}}; },
            [](const Remove& r) { return json{{"refId", r.ref_id}}; },
            [](const Questions& q) {
                json items = json::array();
                for (const auto& it : q.items) {
                    json ij{{"kind", it.kind}, {"prompt", it.prompt}};
                    if (it.kind == "stars")
                        ij["scale"] = it.scale;
                    else
                        ij["choices"] = it.choices;
                    items.push_back(std::move(ij));
                }
                return json{{"docId", q.doc_id}, {"items", items}};
            },
            [](const End&) { return json::object(); },
            [](const Error& e) { return json{{"message", e.message}, {"fatal", e.fatal}}; }},
        m);
    j["type"] = type_name(m);
    return j.dump();
}

Inbound decode_inbound(std::string_view line) {
    const json j = parse_object(line);
    const auto type = j["type"].get<std::string>();
    if (type == "HELLO") return Hello{field<std::string>(j, "participantId")};
    if (type == "GAZE")
        return Gaze{field<double>(j, "t_ms"), field<double>(j, "x"), field<double>(j, "y"), flag(j, "lv"),
                    flag(j, "rv")};
    if (type == "DOC_READY") return DocReady{field<std::string>(j, "docId")};
    if (type == "NEXT") return Next{field<std::string>(j, "docId")};
    if (type == "ANSWERS") {
        Answers a{field<std::string>(j, "docId"), field<std::vector<int>>(j, "choices"), {}};
        if (j.contains("ratings")) a.ratings = field<std::vector<int>>(j, "ratings");
        return a;
    }
    if (type == "RATINGS") return Ratings{field<std::vector<int>>(j, "items")};
    throw ProtocolError("unknown inbound message type '" + type + "'");
}

Outbound decode_outbound(std::string_view line) {
    const json j = parse_object(line);
    const auto type = j["type"].get<std::string>();
    if (type == "SHOW_DOC") {
        if (!j.contains("doc")) throw ProtocolError("missing field 'doc'");
        try {
            return ShowDoc{parse_document(j["doc"].dump())};
        } catch (const DocumentError& e) {
            throw ProtocolError(e.what());
        }
    }
    if (type == "HIGHLIGHT")
        return Highlight{field<std::string>(j, "refId"), field<std::vector<std::string>>(j, "barIds"),
                         field<std::string>(j, "outline"), field<double>(j, "width")};
    if (type == "DESATURATE") return Desaturate{field<std::string>(j, "refId"), field<std::string>(j, "outline")};
    if (type == "REMOVE") return Remove{field<std::string>(j, "refId")};
    if (type == "QUESTIONS") {
        Questions q{field<std::string>(j, "docId"), {}};
        for (const auto& ij : field<json>(j, "items")) {
            QuestionPrompt p;
            p.kind = field<std::string>(ij, "kind");
            p.prompt = field<std::string>(ij, "prompt");
            if (p.kind == "stars")
                p.scale = field<int>(ij, "scale");
            else
                p.choices = field<std::vector<std::string>>(ij, "choices");
            q.items.push_back(std::move(p));
        }
        return q;
    }
    if (type == "END") return End{};
    if (type == "ERROR") return Error{field<std::string>(j, "message"), j.value("fatal", false)};
    throw ProtocolError("unknown outbound message type '" + type + "'");
}

Outbound from_command(const InterventionCommand& c) {
    switch (c.kind) {
        case CommandKind::Highlight: return Highlight{c.reference_id, c.bar_ids, c.style.color.hex(), c.style.width_px};
        case CommandKind::Desaturate: return Desaturate{c.reference_id, c.style.color.hex()};
        case CommandKind::Remove: return Remove{c.reference_id};
    }
    return Remove{c.reference_id};
}

}  // namespace msnv::wire
