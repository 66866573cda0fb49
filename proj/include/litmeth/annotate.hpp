#pragma once

#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "litmeth/corpus.hpp"
#include "litmeth/error.hpp"
#include "litmeth/ontology.hpp"
#include "litmeth/text.hpp"

namespace litmeth {

// One lexicon hit in a document. Spans are byte offsets into the
// normalized text (lowercased, whitespace-collapsed).
struct Annotation {
    std::string term_id;
    std::size_t label_id = 0;
    FormKind form_kind = FormKind::PREF;
    std::size_t span_begin = 0;
    std::size_t span_end = 0;
    std::size_t annotated_words = 0;

    bool operator==(const Annotation&) const = default;
};

inline int annotation_type_score(const Annotation& a) {
    return a.form_kind == FormKind::PREF ? 10 : 5;
}

inline int multi_word_score(const Annotation& a) { return a.annotated_words > 1 ? 3 : 0; }

inline int annotation_score2(const Annotation& a) {
    return (annotation_type_score(a) + multi_word_score(a)) * static_cast<int>(a.annotated_words);
}

namespace detail {

struct WordSpan {
    std::size_t begin = 0;  // byte offset of the word core (punctuation trimmed)
    std::size_t end = 0;
};

// Words of a normalized text with leading/trailing punctuation removed.
// Tokens that are pure punctuation disappear.
inline std::vector<WordSpan> word_spans(std::string_view normalized) {
    std::vector<WordSpan> spans;
    std::size_t i = 0;
    while (i < normalized.size()) {
        if (normalized[i] == ' ') {
            ++i;
            continue;
        }
        std::size_t token_begin = i;
        while (i < normalized.size() && normalized[i] != ' ') ++i;
        std::size_t token_end = i;

        // code point boundaries within the token
        std::vector<std::size_t> starts;
        std::vector<char32_t> cps;
        std::size_t k = token_begin;
        while (k < token_end) {
            starts.push_back(k);
            cps.push_back(utf8::decode(normalized, k));
        }
        starts.push_back(token_end);

        std::size_t lo = 0, hi = cps.size();
        while (lo < hi && text::is_punct(cps[lo])) ++lo;
        while (hi > lo && text::is_punct(cps[hi - 1])) --hi;
        if (lo < hi) spans.push_back(WordSpan{starts[lo], starts[hi]});
    }
    return spans;
}

}  // namespace detail

// Dictionary matcher over a lexicon, resolving each hit to a label.
// Matching is greedy longest-match-first: at each word the longest
// in-lexicon surface wins and the scan continues past it, suppressing
// any shorter match nested inside.
class TermMatcher {
public:
    TermMatcher(const TermLexicon& lexicon, const LabelSpace& labels) {
        std::unordered_map<std::string, std::size_t> label_by_surface;
        std::unordered_map<std::string, std::size_t> label_by_term;
        for (const auto& label : labels.labels) {
            label_by_surface.emplace(label.surface, label.id);
            label_by_term.emplace(label.term_id, label.id);
        }
        for (const auto& [surface, entry] : lexicon.surface_index) {
            SurfaceInfo info;
            info.term_id = entry.term_id;
            info.kind = entry.kind;
            info.words = text::count_words(surface);
            if (auto it = label_by_surface.find(surface); it != label_by_surface.end()) {
                info.label_id = it->second;
            } else if (auto it2 = label_by_term.find(entry.term_id); it2 != label_by_term.end()) {
                info.label_id = it2->second;  // synonym mapping to its term's label
            } else {
                continue;  // surface unreachable in this label space
            }
            max_words_ = std::max(max_words_, info.words);
            surfaces_.emplace(surface, std::move(info));
        }
    }

    std::vector<Annotation> match(std::string_view raw_text) const {
        std::vector<Annotation> out;
        if (surfaces_.empty()) return out;
        std::string normalized = text::normalize_surface(raw_text);
        auto words = detail::word_spans(normalized);

        std::size_t i = 0;
        while (i < words.size()) {
            std::size_t taken = 0;
            std::size_t longest = std::min(max_words_, words.size() - i);
            for (std::size_t len = longest; len >= 1; --len) {
                std::size_t begin = words[i].begin;
                std::size_t end = words[i + len - 1].end;
                // the slice check also enforces contiguity: intervening
                // punctuation makes the slice miss the index
                std::string_view candidate = std::string_view(normalized).substr(begin, end - begin);
                auto it = surfaces_.find(std::string(candidate));
                if (it == surfaces_.end()) continue;
                Annotation a;
                a.term_id = it->second.term_id;
                a.label_id = it->second.label_id;
                a.form_kind = it->second.kind;
                a.span_begin = begin;
                a.span_end = end;
                a.annotated_words = it->second.words;
                out.push_back(std::move(a));
                taken = len;
                break;
            }
            i += taken ? taken : 1;
        }
        return out;
    }

private:
    struct SurfaceInfo {
        std::string term_id;
        FormKind kind;
        std::size_t label_id = 0;
        std::size_t words = 0;
    };

    std::unordered_map<std::string, SurfaceInfo> surfaces_;
    std::size_t max_words_ = 0;
};

inline std::vector<Annotation> match_terms(std::string_view txt, const TermLexicon& lexicon,
                                           const LabelSpace& labels) {
    return TermMatcher(lexicon, labels).match(txt);
}

// Label ids whose best-scoring annotation reaches min_score.
inline std::set<std::size_t> label_text(std::string_view txt, const TermMatcher& matcher,
                                        int min_score) {
    if (min_score < 0) throw InvalidInputError("label_text: min_score must be nonnegative");
    std::set<std::size_t> labels;
    for (const auto& a : matcher.match(txt))
        if (annotation_score2(a) >= min_score) labels.insert(a.label_id);
    return labels;
}

inline std::set<std::size_t> label_document(const Document& doc, const TermLexicon& lexicon,
                                            const LabelSpace& labels, int min_score,
                                            bool include_fulltext = false) {
    TermMatcher matcher(lexicon, labels);
    return label_text(training_text(doc, include_fulltext), matcher, min_score);
}

// Sparse binary matrix: rows are documents (by pmid), columns labels.
struct LabelMatrix {
    std::vector<std::string> row_ids;
    std::size_t num_labels = 0;
    std::set<std::pair<std::size_t, std::size_t>> cells;  // (row, label), value 1

    bool contains(std::size_t row, std::size_t label) const {
        return cells.count({row, label}) > 0;
    }

    std::size_t row_sum(std::size_t row) const {
        std::size_t n = 0;
        for (auto it = cells.lower_bound({row, 0}); it != cells.end() && it->first == row; ++it)
            ++n;
        return n;
    }

    std::vector<std::vector<double>> dense_rows() const {
        std::vector<std::vector<double>> rows(row_ids.size(),
                                              std::vector<double>(num_labels, 0.0));
        for (const auto& [r, c] : cells) rows[r][c] = 1.0;
        return rows;
    }
};

inline LabelMatrix build_label_matrix(const std::vector<Document>& docs,
                                      const std::vector<std::set<std::size_t>>& label_sets,
                                      const LabelSpace& labels) {
    if (docs.size() != label_sets.size())
        throw InvalidInputError("build_label_matrix: " + std::to_string(docs.size()) +
                                " documents vs " + std::to_string(label_sets.size()) +
                                " label sets");
    LabelMatrix matrix;
    matrix.num_labels = labels.size();
    matrix.row_ids.reserve(docs.size());
    for (std::size_t row = 0; row < docs.size(); ++row) {
        matrix.row_ids.push_back(docs[row].pmid);
        for (std::size_t label : label_sets[row]) {
            if (label >= labels.size())
                throw InvalidInputError("build_label_matrix: label id " + std::to_string(label) +
                                        " out of range for " + std::to_string(labels.size()) +
                                        " labels");
            matrix.cells.insert({row, label});
        }
    }
    return matrix;
}

namespace detail {

inline std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

inline std::vector<std::string> csv_split(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quote", line_no);
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace detail

// CSV layout: first column pmid, one column per label surface, 0/1 cells.
inline void write_label_matrix_csv(const LabelMatrix& matrix, const LabelSpace& labels,
                                   std::ostream& out) {
    if (labels.size() != matrix.num_labels)
        throw InvalidInputError("write_label_matrix_csv: label space size mismatch");
    out << "pmid";
    for (const auto& label : labels.labels) out << ',' << detail::csv_escape(label.surface);
    out << '\n';
    for (std::size_t row = 0; row < matrix.row_ids.size(); ++row) {
        out << detail::csv_escape(matrix.row_ids[row]);
        for (std::size_t c = 0; c < matrix.num_labels; ++c)
            out << ',' << (matrix.contains(row, c) ? '1' : '0');
        out << '\n';
    }
}

struct LabelMatrixCsv {
    LabelMatrix matrix;
    std::vector<std::string> surfaces;  // column headers after "pmid"
};

inline LabelMatrixCsv read_label_matrix_csv(std::istream& in) {
    LabelMatrixCsv out;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("label matrix CSV: missing header", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::csv_split(line, 1);
    if (header.empty() || header[0] != "pmid")
        throw ParseError("label matrix CSV: header must start with 'pmid'", 1);
    out.surfaces.assign(header.begin() + 1, header.end());
    out.matrix.num_labels = out.surfaces.size();

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::csv_split(line, line_no);
        if (fields.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        std::size_t row = out.matrix.row_ids.size();
        out.matrix.row_ids.push_back(fields[0]);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c] == "1") out.matrix.cells.insert({row, c - 1});
            else if (fields[c] != "0")
                throw ParseError("line " + std::to_string(line_no) + ": cell must be 0 or 1",
                                 line_no);
        }
    }
    return out;
}

inline void write_label_matrix_csv(const LabelMatrix& matrix, const LabelSpace& labels,
                                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open matrix CSV for writing: " + path);
    write_label_matrix_csv(matrix, labels, out);
}

inline LabelMatrixCsv read_label_matrix_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open matrix CSV: " + path);
    return read_label_matrix_csv(in);
}

// One annotation per line, tagged with the owning document.
inline void write_annotations_jsonl(const std::string& pmid,
                                    const std::vector<Annotation>& annotations,
                                    std::ostream& out) {
    for (const auto& a : annotations) {
        nlohmann::ordered_json j;
        j["pmid"] = pmid;
        j["term_id"] = a.term_id;
        j["label_id"] = a.label_id;
        j["form_kind"] = to_string(a.form_kind);
        j["span"] = {a.span_begin, a.span_end};
        j["words"] = a.annotated_words;
        j["score"] = annotation_score2(a);
        out << j.dump() << '\n';
    }
}

}  // namespace litmeth
