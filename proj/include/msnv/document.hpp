#pragma once

// MSNV documents: narrative text, references into a bar chart, the screen
// layout the client must render to, and per-reference reading statistics.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msnv/gaze.hpp"

namespace msnv {

inline constexpr std::string_view kDocumentFormat = "msnv/1";

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    static Rgb from_hex(std::string_view hex);  // "#RRGGBB"
    std::string hex() const;
    bool operator==(const Rgb&) const = default;
};

enum class ChartKind { Simple, Stacked, Grouped };

std::string_view to_string(ChartKind k);
ChartKind chart_kind_from_string(std::string_view s);

struct Bar {
    std::string id;
    std::string label;
    std::optional<std::string> series;
    double value = 0;
    Rgb color;
    bool operator==(const Bar&) const = default;
};

struct BarChart {
    ChartKind kind = ChartKind::Simple;
    std::vector<Bar> bars;
    std::string x_label;
    std::string y_label;

    const Bar* find(std::string_view id) const;
    bool operator==(const BarChart&) const = default;
};

struct Reference {
    std::string id;
    std::vector<std::size_t> sentence_indices;
    std::vector<std::string> data_point_ids;
    double mean_fixations = 0;
    bool operator==(const Reference&) const = default;
};

/// A comprehension item shown after reading (recognition or title choice).
struct QuestionItem {
    std::string prompt;
    std::vector<std::string> choices;
    std::size_t answer = 0;
    bool operator==(const QuestionItem&) const = default;
};

struct Layout {
    DisplayBounds display;
    /// Explicit AOI rects per reference id. References without an entry
    /// fall back to the line boxes of their sentences.
    std::map<std::string, std::vector<Rect>> aois;
    std::map<std::string, Rect> bars;
    /// Line boxes per sentence, parallel to Document::sentences (may be empty).
    std::vector<std::vector<Rect>> sentences;
    bool operator==(const Layout&) const = default;
};

struct Document {
    std::string id;
    std::string title;
    std::vector<std::string> sentences;
    std::vector<Reference> references;
    BarChart chart;
    Layout layout;
    std::string source;
    std::vector<QuestionItem> items;

    const Reference* find_reference(std::string_view id) const;
    bool operator==(const Document&) const = default;
};

/// Every violation found while parsing or validating, not just the first.
class DocumentError : public std::runtime_error {
public:
    explicit DocumentError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

Document parse_document(std::string_view text);
std::string serialize_document(const Document& doc);
Document load_document(const std::string& path);
/// Loads every *.json document in a directory, sorted by id.
std::vector<Document> load_documents(const std::string& dir);

/// One AOI per reference. Throws DocumentError naming both references when
/// two reference AOIs overlap.
std::vector<AOI> reference_aois(const Document& doc);

struct CorpusProfile {
    std::string document_id;
    std::size_t word_count = 0;
    std::size_t sentence_count = 0;
    std::size_t reference_count = 0;
    std::size_t data_point_count = 0;
    std::size_t referenced_data_point_count = 0;
};

struct CorpusValidation {
    std::vector<CorpusProfile> profiles;
    std::vector<std::string> warnings;
};

/// Profiles each document and warns when a property falls outside the range
/// of the 14-document reference corpus.
CorpusValidation validate_corpus(std::span<const Document> docs);

double relative_luminance(const Rgb& c);
double contrast_ratio(const Rgb& a, const Rgb& b);

inline constexpr double kDefaultMinContrast = 4.5;

/// Raises the HSL lightness of every bar whose contrast with a black outline
/// is below min_contrast, keeping hue and saturation. Compliant bars are left
/// untouched.
Document adjust_bar_colors(const Document& doc, double min_contrast = kDefaultMinContrast);
Rgb adjust_color(const Rgb& c, double min_contrast);

}  // namespace msnv
