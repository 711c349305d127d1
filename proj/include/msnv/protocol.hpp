#pragma once

// Newline-delimited JSON messages exchanged between the session service and
// the reading client. Each message is one JSON object whose "type" field
// names it; the remaining field names are fixed by the wire contract.

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msnv/document.hpp"
#include "msnv/engine.hpp"

namespace msnv::wire {

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inbound (client -> server)
struct Hello {
    std::string participant_id;
    bool operator==(const Hello&) const = default;
};
struct Gaze {
    double t_ms = 0;
    double x = 0, y = 0;
    bool lv = false, rv = false;
    bool operator==(const Gaze&) const = default;
};
struct DocReady {
    std::string doc_id;
    bool operator==(const DocReady&) const = default;
};
struct Next {
    std::string doc_id;
    bool operator==(const Next&) const = default;
};
/// choices: one index per comprehension item. ratings: ease of
/// understanding and interest, 1-5 stars each.
struct Answers {
    std::string doc_id;
    std::vector<int> choices;
    std::vector<int> ratings;
    bool operator==(const Answers&) const = default;
};
/// The ten 7-point perception items, asked once after the last document.
struct Ratings {
    std::vector<int> items;
    bool operator==(const Ratings&) const = default;
};

using Inbound = std::variant<Hello, Gaze, DocReady, Next, Answers, Ratings>;

// Outbound (server -> client)
struct ShowDoc {
    Document doc;
    bool operator==(const ShowDoc&) const = default;
};
struct Highlight {
    std::string ref_id;
    std::vector<std::string> bar_ids;
    std::string outline;  // "#RRGGBB"
    double width = 0;
    bool operator==(const Highlight&) const = default;
};
struct Desaturate {
    std::string ref_id;
    std::string outline;
    bool operator==(const Desaturate&) const = default;
};
struct Remove {
    std::string ref_id;
    bool operator==(const Remove&) const = default;
};
struct QuestionPrompt {
    std::string kind;  // "stars" or "choice"
    std::string prompt;
    std::vector<std::string> choices;
    int scale = 0;  // number of stars for "stars" items
    bool operator==(const QuestionPrompt&) const = default;
};
struct Questions {
    std::string doc_id;
    std::vector<QuestionPrompt> items;
    bool operator==(const Questions&) const = default;
};
struct End {
    bool operator==(const End&) const = default;
};
struct Error {
    std::string message;
    bool fatal = false;
    bool operator==(const Error&) const = default;
};

using Outbound = std::variant<ShowDoc, Highlight, Desaturate, Remove, Questions, End, Error>;

/// Encodes without the trailing newline.
std::string encode(const Inbound& m);
std::string encode(const Outbound& m);

/// Throws ProtocolError on malformed JSON, unknown types or bad fields.
Inbound decode_inbound(std::string_view line);
Outbound decode_outbound(std::string_view line);

std::string_view type_name(const Inbound& m);
std::string_view type_name(const Outbound& m);

Outbound from_command(const InterventionCommand& c);

}  // namespace msnv::wire
