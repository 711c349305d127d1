#include "msnv/document.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace msnv {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

Rgb Rgb::from_hex(std::string_view hex) {
    if (hex.size() != 7 || hex[0] != '#') throw std::invalid_argument("color must be #RRGGBB");
    std::uint8_t ch[3];
    for (int i = 0; i < 3; ++i) {
        const int hi = hex_digit(hex[1 + 2 * i]);
        const int lo = hex_digit(hex[2 + 2 * i]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("color must be #RRGGBB");
        ch[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return {ch[0], ch[1], ch[2]};
}

std::string Rgb::hex() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
    return buf;
}

std::string_view to_string(ChartKind k) {
    switch (k) {
        case ChartKind::Simple: return "simple";
        case ChartKind::Stacked: return "stacked";
        case ChartKind::Grouped: return "grouped";
    }
    return "simple";
}

ChartKind chart_kind_from_string(std::string_view s) {
    if (s == "simple") return ChartKind::Simple;
    if (s == "stacked") return ChartKind::Stacked;
    if (s == "grouped") return ChartKind::Grouped;
    throw std::invalid_argument("unknown chart kind '" + std::string(s) + "'");
}

const Bar* BarChart::find(std::string_view id) const {
    for (const auto& b : bars)
        if (b.id == id) return &b;
    return nullptr;
}

const Reference* Document::find_reference(std::string_view id) const {
    for (const auto& r : references)
        if (r.id == id) return &r;
    return nullptr;
}

DocumentError::DocumentError(std::vector<std::string> violations)
    : std::runtime_error("invalid document: " + join(violations, "; ")), violations_(std::move(violations)) {}

namespace {

// Reads typed fields, recording problems instead of stopping at the first.
struct Reader {
    std::vector<std::string>& errors;

    template <typename T>
    bool get(const json& obj, const char* key, T& out, const std::string& where, bool required = true) {
        if (!obj.is_object() || !obj.contains(key)) {
            if (required) errors.push_back(where + ": missing '" + key + "'");
            return false;
        }
        try {
            out = obj.at(key).get<T>();
            return true;
        } catch (const json::exception&) {
            errors.push_back(where + ": '" + key + "' has the wrong type");
            return false;
        }
    }

    Rect rect(const json& j, const std::string& where) {
        Rect r;
        get(j, "x", r.x, where);
        get(j, "y", r.y, where);
        get(j, "w", r.w, where);
        get(j, "h", r.h, where);
        if (r.w < 0 || r.h < 0) errors.push_back(where + ": negative rect size");
        return r;
    }
};

json rect_json(const Rect& r) { return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

void check_semantics(const Document& doc, std::vector<std::string>& errors) {
    if (doc.sentences.empty()) errors.push_back("document has no sentences");
    if (doc.references.empty()) errors.push_back("document has no references");

    std::set<std::string> bar_ids;
    for (const auto& b : doc.chart.bars) {
        if (!bar_ids.insert(b.id).second) errors.push_back("duplicate bar id '" + b.id + "'");
        if (!std::isfinite(b.value)) errors.push_back("bar '" + b.id + "' has a non-finite value");
        if (doc.chart.kind != ChartKind::Simple && !b.series)
            errors.push_back("bar '" + b.id + "' needs a series label in a " +
                             std::string(to_string(doc.chart.kind)) + " chart");
    }

    std::set<std::string> ref_ids;
    for (const auto& r : doc.references) {
        if (!ref_ids.insert(r.id).second) errors.push_back("duplicate reference id '" + r.id + "'");
        if (r.sentence_indices.empty()) errors.push_back("reference '" + r.id + "' cites no sentences");
        if (r.data_point_ids.empty()) errors.push_back("reference '" + r.id + "' cites no data points");
        if (!(r.mean_fixations > 0) || !std::isfinite(r.mean_fixations))
            errors.push_back("reference '" + r.id + "' needs meanFixations > 0");
        for (auto s : r.sentence_indices)
            if (s >= doc.sentences.size())
                errors.push_back("reference '" + r.id + "' cites unknown sentence " + std::to_string(s));
        for (const auto& d : r.data_point_ids)
            if (!bar_ids.count(d))
                errors.push_back("reference '" + r.id + "' cites unknown bar id '" + d + "'");
    }

    for (const auto& [ref, rects] : doc.layout.aois)
        if (!ref_ids.count(ref)) errors.push_back("layout AOI for unknown reference '" + ref + "'");
    for (const auto& [bar, rect] : doc.layout.bars)
        if (!bar_ids.count(bar)) errors.push_back("layout box for unknown bar '" + bar + "'");
    if (!doc.layout.sentences.empty() && doc.layout.sentences.size() != doc.sentences.size())
        errors.push_back("layout.sentences must have one entry per sentence");

    for (std::size_t i = 0; i < doc.items.size(); ++i) {
        const auto& it = doc.items[i];
        if (it.choices.empty() || it.answer >= it.choices.size())
            errors.push_back("item " + std::to_string(i) + " has no valid answer");
    }

    auto within = [&](const Rect& r) {
        return r.x >= 0 && r.y >= 0 && r.x + r.w <= doc.layout.display.width &&
               r.y + r.h <= doc.layout.display.height;
    };
    for (const auto& [ref, rects] : doc.layout.aois)
        for (const auto& r : rects)
            if (!within(r)) errors.push_back("AOI of reference '" + ref + "' leaves the display");
    for (const auto& [bar, r] : doc.layout.bars)
        if (!within(r)) errors.push_back("box of bar '" + bar + "' leaves the display");

    if (errors.empty()) {
        try {
            (void)reference_aois(doc);
        } catch (const DocumentError& e) {
            errors.insert(errors.end(), e.violations().begin(), e.violations().end());
        }
    }
}

}  // namespace

Document parse_document(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DocumentError({std::string("malformed JSON: ") + e.what()});
    }
    if (!j.is_object()) throw DocumentError({"document must be a JSON object"});

    std::vector<std::string> errors;
    Reader rd{errors};
    Document doc;

    std::string format;
    if (rd.get(j, "format", format, "document") && format != kDocumentFormat)
        errors.push_back("unsupported format '" + format + "'");
    rd.get(j, "id", doc.id, "document");
    rd.get(j, "title", doc.title, "document");
    rd.get(j, "sentences", doc.sentences, "document");
    rd.get(j, "source", doc.source, "document");

    if (j.contains("references") && j["references"].is_array()) {
        for (std::size_t i = 0; i < j["references"].size(); ++i) {
            const auto& rj = j["references"][i];
            const std::string where = "references[" + std::to_string(i) + "]";
            Reference r;
            rd.get(rj, "id", r.id, where);
            rd.get(rj, "sentences", r.sentence_indices, where);
            rd.get(rj, "dataPoints", r.data_point_ids, where);
            rd.get(rj, "meanFixations", r.mean_fixations, where);
            doc.references.push_back(std::move(r));
        }
    } else {
        errors.push_back("document: missing 'references' array");
    }

    if (j.contains("chart") && j["chart"].is_object()) {
        const auto& cj = j["chart"];
        std::string kind;
        if (rd.get(cj, "kind", kind, "chart")) {
            try {
                doc.chart.kind = chart_kind_from_string(kind);
            } catch (const std::invalid_argument& e) {
                errors.push_back(std::string("chart: ") + e.what());
            }
        }
        rd.get(cj, "xLabel", doc.chart.x_label, "chart", false);
        rd.get(cj, "yLabel", doc.chart.y_label, "chart", false);
        if (cj.contains("bars") && cj["bars"].is_array()) {
            for (std::size_t i = 0; i < cj["bars"].size(); ++i) {
                const auto& bj = cj["bars"][i];
                const std::string where = "chart.bars[" + std::to_string(i) + "]";
                Bar b;
                rd.get(bj, "id", b.id, where);
                rd.get(bj, "label", b.label, where);
                std::string series;
                if (rd.get(bj, "series", series, where, false)) b.series = series;
                rd.get(bj, "value", b.value, where);
                std::string color;
                if (rd.get(bj, "color", color, where)) {
                    try {
                        b.color = Rgb::from_hex(color);
                    } catch (const std::invalid_argument&) {
                        errors.push_back(where + ": color '" + color + "' is not #RRGGBB");
                    }
                }
                doc.chart.bars.push_back(std::move(b));
            }
        } else {
            errors.push_back("chart: missing 'bars' array");
        }
    } else {
        errors.push_back("document: missing 'chart' object");
    }

    if (j.contains("layout") && j["layout"].is_object()) {
        const auto& lj = j["layout"];
        if (lj.contains("display")) {
            rd.get(lj["display"], "width", doc.layout.display.width, "layout.display");
            rd.get(lj["display"], "height", doc.layout.display.height, "layout.display");
        }
        if (lj.contains("aois") && lj["aois"].is_object()) {
            for (const auto& [ref, rects] : lj["aois"].items()) {
                auto& dst = doc.layout.aois[ref];
                for (const auto& rj : rects) dst.push_back(rd.rect(rj, "layout.aois." + ref));
            }
        }
        if (lj.contains("bars") && lj["bars"].is_object()) {
            for (const auto& [bar, rj] : lj["bars"].items())
                doc.layout.bars[bar] = rd.rect(rj, "layout.bars." + bar);
        }
        if (lj.contains("sentences") && lj["sentences"].is_array()) {
            for (std::size_t i = 0; i < lj["sentences"].size(); ++i) {
                std::vector<Rect> lines;
                for (const auto& rj : lj["sentences"][i])
                    lines.push_back(rd.rect(rj, "layout.sentences[" + std::to_string(i) + "]"));
                doc.layout.sentences.push_back(std::move(lines));
            }
        }
    } else {
        errors.push_back("document: missing 'layout' object");
    }

    if (j.contains("items") && j["items"].is_array()) {
        for (std::size_t i = 0; i < j["items"].size(); ++i) {
            const auto& ij = j["items"][i];
            const std::string where = "items[" + std::to_string(i) + "]";
            QuestionItem q;
            rd.get(ij, "prompt", q.prompt, where);
            rd.get(ij, "choices", q.choices, where);
            rd.get(ij, "answer", q.answer, where);
            doc.items.push_back(std::move(q));
        }
    }

    if (errors.empty()) check_semantics(doc, errors);
    if (!errors.empty()) throw DocumentError(std::move(errors));
    return doc;
}

std::string serialize_document(const Document& doc) {
    json j;
    j["format"] = kDocumentFormat;
    j["id"] = doc.id;
    j["title"] = doc.title;
    j["sentences"] = doc.sentences;
    j["source"] = doc.source;
    j["references"] = json::array();
    for (const auto& r : doc.references) {
        j["references"].push_back({{"id", r.id},
                                   {"sentences", r.sentence_indices},
                                   {"dataPoints", r.data_point_ids},
                                   {"meanFixations", r.mean_fixations}});
    }
    json bars = json::array();
    for (const auto& b : doc.chart.bars) {
        json bj{{"id", b.id}, {"label", b.label}, {"value", b.value}, {"color", b.color.hex()}};
        if (b.series) bj["series"] = *b.series;
        bars.push_back(std::move(bj));
    }
    j["chart"] = {{"kind", to_string(doc.chart.kind)}, {"bars", bars}};
    if (!doc.chart.x_label.empty()) j["chart"]["xLabel"] = doc.chart.x_label;
    if (!doc.chart.y_label.empty()) j["chart"]["yLabel"] = doc.chart.y_label;

    json layout;
    layout["display"] = {{"width", doc.layout.display.width}, {"height", doc.layout.display.height}};
    layout["aois"] = json::object();
    for (const auto& [ref, rects] : doc.layout.aois) {
        json arr = json::array();
        for (const auto& r : rects) arr.push_back(rect_json(r));
        layout["aois"][ref] = std::move(arr);
    }
    layout["bars"] = json::object();
    for (const auto& [bar, r] : doc.layout.bars) layout["bars"][bar] = rect_json(r);
    if (!doc.layout.sentences.empty()) {
        layout["sentences"] = json::array();
        for (const auto& lines : doc.layout.sentences) {
            json arr = json::array();
            for (const auto& r : lines) arr.push_back(rect_json(r));
            layout["sentences"].push_back(std::move(arr));
        }
    }
    j["layout"] = std::move(layout);

    if (!doc.items.empty()) {
        j["items"] = json::array();
        for (const auto& q : doc.items)
            j["items"].push_back({{"prompt", q.prompt}, {"choices", q.choices}, {"answer", q.answer}});
    }
    return j.dump(2);
}

Document load_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open document " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_document(ss.str());
    } catch (const DocumentError& e) {
        auto v = e.violations();
        for (auto& s : v) s = path + ": " + s;
        throw DocumentError(std::move(v));
    }
}

std::vector<Document> load_documents(const std::string& dir) {
    std::vector<Document> docs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            docs.push_back(load_document(entry.path().string()));
    }
    std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) { return a.id < b.id; });
    return docs;
}

std::vector<AOI> reference_aois(const Document& doc) {
    std::vector<AOI> aois;
    for (const auto& r : doc.references) {
        AOI a{r.id, r.id, {}};
        if (auto it = doc.layout.aois.find(r.id); it != doc.layout.aois.end()) {
            a.rects = it->second;
        } else {
            for (auto s : r.sentence_indices)
                if (s < doc.layout.sentences.size())
                    a.rects.insert(a.rects.end(), doc.layout.sentences[s].begin(), doc.layout.sentences[s].end());
        }
        aois.push_back(std::move(a));
    }
    std::vector<std::string> errors;
    for (std::size_t i = 0; i < aois.size(); ++i) {
        for (std::size_t k = i + 1; k < aois.size(); ++k) {
            bool overlap = false;
            for (const auto& ra : aois[i].rects)
                for (const auto& rb : aois[k].rects) overlap = overlap || ra.intersects(rb);
            if (overlap)
                errors.push_back("AOIs of references '" + aois[i].owner + "' and '" + aois[k].owner + "' overlap");
        }
    }
    if (!errors.empty()) throw DocumentError(std::move(errors));
    return aois;
}

namespace {

struct Range {
    const char* name;
    std::size_t lo, hi;
};

// Min/max over the 14 reference documents.
constexpr Range kWords{"words", 43, 228};
constexpr Range kSentences{"sentences", 2, 14};
constexpr Range kReferences{"references", 1, 7};
constexpr Range kDataPoints{"data points", 4, 63};
constexpr Range kReferencedPoints{"referenced data points", 2, 24};

std::size_t count_words(const std::string& s) {
    std::istringstream is(s);
    std::size_t n = 0;
    std::string w;
    while (is >> w) ++n;
    return n;
}

}  // namespace

CorpusValidation validate_corpus(std::span<const Document> docs) {
    CorpusValidation out;
    for (const auto& d : docs) {
        CorpusProfile p;
        p.document_id = d.id;
        for (const auto& s : d.sentences) p.word_count += count_words(s);
        p.sentence_count = d.sentences.size();
        p.reference_count = d.references.size();
        p.data_point_count = d.chart.bars.size();
        std::set<std::string> referenced;
        for (const auto& r : d.references) referenced.insert(r.data_point_ids.begin(), r.data_point_ids.end());
        p.referenced_data_point_count = referenced.size();

        auto check = [&](const Range& range, std::size_t v) {
            if (v < range.lo || v > range.hi)
                out.warnings.push_back(d.id + ": " + std::to_string(v) + " " + range.name + " outside [" +
                                       std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]");
        };
        check(kWords, p.word_count);
        check(kSentences, p.sentence_count);
        check(kReferences, p.reference_count);
        check(kDataPoints, p.data_point_count);
        check(kReferencedPoints, p.referenced_data_point_count);
        out.profiles.push_back(std::move(p));
    }
    return out;
}

namespace {

double linearize(std::uint8_t channel) {
    const double c = channel / 255.0;
    return c <= 0.03928 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

struct Hsl {
    double h, s, l;
};

Hsl to_hsl(const Rgb& c) {
    const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    const double l = (mx + mn) / 2;
    if (mx == mn) return {0, 0, l};
    const double d = mx - mn;
    const double s = l > 0.5 ? d / (2 - mx - mn) : d / (mx + mn);
    double h;
    if (mx == r)
        h = (g - b) / d + (g < b ? 6 : 0);
    else if (mx == g)
        h = (b - r) / d + 2;
    else
        h = (r - g) / d + 4;
    return {h / 6, s, l};
}

double hue_channel(double p, double q, double t) {
    if (t < 0) t += 1;
    if (t > 1) t -= 1;
    if (t < 1.0 / 6) return p + (q - p) * 6 * t;
    if (t < 1.0 / 2) return q;
    if (t < 2.0 / 3) return p + (q - p) * (2.0 / 3 - t) * 6;
    return p;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255)); }

Rgb from_hsl(const Hsl& c) {
    if (c.s == 0) return {to_byte(c.l), to_byte(c.l), to_byte(c.l)};
    const double q = c.l < 0.5 ? c.l * (1 + c.s) : c.l + c.s - c.l * c.s;
    const double p = 2 * c.l - q;
    return {to_byte(hue_channel(p, q, c.h + 1.0 / 3)), to_byte(hue_channel(p, q, c.h)),
            to_byte(hue_channel(p, q, c.h - 1.0 / 3))};
}

}  // namespace

double relative_luminance(const Rgb& c) {
    return 0.2126 * linearize(c.r) + 0.7152 * linearize(c.g) + 0.0722 * linearize(c.b);
}

double contrast_ratio(const Rgb& a, const Rgb& b) {
    const double la = relative_luminance(a), lb = relative_luminance(b);
    return (std::max(la, lb) + 0.05) / (std::min(la, lb) + 0.05);
}

Rgb adjust_color(const Rgb& c, double min_contrast) {
    constexpr Rgb black{0, 0, 0};
    if (contrast_ratio(c, black) >= min_contrast) return c;
    const Hsl hsl = to_hsl(c);
    double lo = hsl.l, hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = (lo + hi) / 2;
        if (contrast_ratio(from_hsl({hsl.h, hsl.s, mid}), black) >= min_contrast)
            hi = mid;
        else
            lo = mid;
    }
    return from_hsl({hsl.h, hsl.s, hi});
}

Document adjust_bar_colors(const Document& doc, double min_contrast) {
    if (!(min_contrast >= 1.0 && min_contrast <= 21.0))
        throw std::invalid_argument("min_contrast must lie in [1, 21]");
    Document out = doc;
    for (auto& b : out.chart.bars) b.color = adjust_color(b.color, min_contrast);
    return out;
}

}  // namespace msnv
