#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "litmeth/error.hpp"
#include "litmeth/text.hpp"

namespace litmeth {

// Whether a surface form is a term's preferred name or one of its synonyms.
enum class FormKind { PREF, SYN };

inline const char* to_string(FormKind k) { return k == FormKind::PREF ? "PREF" : "SYN"; }

struct OntologyTerm {
    std::string id;
    std::string preferred_name;
    std::vector<std::string> synonyms;
    std::vector<std::string> parent_ids;
    bool obsolete = false;

    bool operator==(const OntologyTerm&) const = default;
};

struct SurfaceEntry {
    std::string term_id;
    FormKind kind;
};

// Terms of the extracted subtrees plus an index from normalized surface
// form to owning term. PREF entries win collisions with SYN entries.
struct TermLexicon {
    std::vector<OntologyTerm> terms;                  // sorted by id
    std::map<std::string, SurfaceEntry> surface_index;  // normalized surface -> entry

    bool empty() const { return terms.empty(); }
};

struct Label {
    std::size_t id = 0;  // equals position in LabelSpace::labels
    std::string surface;  // normalized
    std::string term_id;

    bool operator==(const Label&) const = default;
};

// Ordered label inventory; lexicographic on surface so two runs over the
// same lexicon serialize identically.
struct LabelSpace {
    std::vector<Label> labels;

    std::size_t size() const { return labels.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Value of a `synonym:` line: the quoted surface form. Scope keywords
// (EXACT, BROAD, ...) and xref lists after the closing quote are ignored;
// the scoring model only distinguishes PREF from SYN.
inline std::string parse_synonym_value(std::string_view value, std::size_t line_no) {
    std::size_t open = value.find('"');
    if (open == std::string_view::npos)
        throw ParseError("synonym line missing quoted surface (line " + std::to_string(line_no) + ")",
                         line_no);
    std::string surface;
    bool closed = false;
    for (std::size_t i = open + 1; i < value.size(); ++i) {
        char c = value[i];
        if (c == '\\' && i + 1 < value.size()) {
            surface.push_back(value[++i]);
        } else if (c == '"') {
            closed = true;
            break;
        } else {
            surface.push_back(c);
        }
    }
    if (!closed)
        throw ParseError("unterminated synonym quote (line " + std::to_string(line_no) + ")", line_no);
    return surface;
}

// Value of an `is_a:` line up to the `!` comment.
inline std::string parse_isa_value(std::string_view value) {
    std::size_t bang = value.find('!');
    if (bang != std::string_view::npos) value = value.substr(0, bang);
    return std::string(trim(value));
}

}  // namespace detail

// Parses OBO flat-file text. One term per non-obsolete [Term] stanza;
// obsolete stanzas are dropped. A non-obsolete stanza missing its id or
// name line is a parse error carrying the stanza's first line number.
inline std::vector<OntologyTerm> parse_obo(std::string_view raw) {
    std::vector<OntologyTerm> terms;
    std::unordered_set<std::string> seen_ids;

    bool in_term = false;
    std::size_t stanza_line = 0;
    OntologyTerm cur;
    std::set<std::string> syn_norms;  // dedupe synonyms after normalization
    bool has_id = false, has_name = false;

    auto flush = [&]() {
        if (!in_term) return;
        if (!cur.obsolete) {
            if (!has_id)
                throw ParseError("[Term] stanza missing id (line " + std::to_string(stanza_line) + ")",
                                 stanza_line);
            if (!has_name)
                throw ParseError("[Term] stanza missing name (line " + std::to_string(stanza_line) + ")",
                                 stanza_line);
            if (!seen_ids.insert(cur.id).second)
                throw ParseError("duplicate term id '" + cur.id + "' (line " +
                                     std::to_string(stanza_line) + ")",
                                 stanza_line);
            terms.push_back(std::move(cur));
        }
        cur = OntologyTerm{};
        syn_norms.clear();
        has_id = has_name = false;
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        std::size_t nl = raw.find('\n', pos);
        std::string_view line = raw.substr(pos, (nl == std::string_view::npos ? raw.size() : nl) - pos);
        pos = (nl == std::string_view::npos) ? raw.size() + 1 : nl + 1;
        ++line_no;

        std::string_view t = detail::trim(line);
        if (t.empty() || t.front() == '!') continue;
        if (t.front() == '[') {
            flush();
            in_term = (t == "[Term]");
            stanza_line = line_no;
            continue;
        }
        if (!in_term) continue;

        std::size_t colon = t.find(':');
        if (colon == std::string_view::npos) continue;
        std::string_view key = detail::trim(t.substr(0, colon));
        std::string_view value = detail::trim(t.substr(colon + 1));

        if (key == "id") {
            cur.id = std::string(value);
            has_id = !cur.id.empty();
        } else if (key == "name") {
            cur.preferred_name = std::string(value);
            has_name = !cur.preferred_name.empty();
        } else if (key == "synonym") {
            std::string surface = detail::parse_synonym_value(value, line_no);
            if (syn_norms.insert(text::normalize_surface(surface)).second)
                cur.synonyms.push_back(std::move(surface));
        } else if (key == "is_a") {
            std::string parent = detail::parse_isa_value(value);
            if (!parent.empty()) cur.parent_ids.push_back(std::move(parent));
        } else if (key == "is_obsolete") {
            cur.obsolete = (value == "true");
        }
        // other tag lines (def, xref, namespace, ...) are ignored
    }
    flush();
    return terms;
}

// Renders terms back to OBO text; parse_obo(serialize_obo(t)) == t for
// non-obsolete inputs.
inline std::string serialize_obo(const std::vector<OntologyTerm>& terms) {
    std::string out = "format-version: 1.2\n";
    for (const auto& term : terms) {
        out += "\n[Term]\nid: " + term.id + "\nname: " + term.preferred_name + "\n";
        for (const auto& syn : term.synonyms) {
            std::string escaped;
            for (char c : syn) {
                if (c == '"' || c == '\\') escaped.push_back('\\');
                escaped.push_back(c);
            }
            out += "synonym: \"" + escaped + "\" EXACT []\n";
        }
        for (const auto& parent : term.parent_ids) out += "is_a: " + parent + "\n";
        if (term.obsolete) out += "is_obsolete: true\n";
    }
    return out;
}

// Builds the surface index over lexicon.terms (assumed sorted by id).
inline void build_surface_index(TermLexicon& lexicon) {
    lexicon.surface_index.clear();
    auto insert = [&](const std::string& surface, const std::string& term_id, FormKind kind) {
        std::string norm = text::normalize_surface(surface);
        if (norm.empty()) return;
        auto it = lexicon.surface_index.find(norm);
        if (it == lexicon.surface_index.end()) {
            lexicon.surface_index.emplace(std::move(norm), SurfaceEntry{term_id, kind});
        } else if (kind == FormKind::PREF && it->second.kind == FormKind::SYN) {
            it->second = SurfaceEntry{term_id, kind};  // PREF wins over SYN
        }
    };
    for (const auto& term : lexicon.terms) insert(term.preferred_name, term.id, FormKind::PREF);
    for (const auto& term : lexicon.terms)
        for (const auto& syn : term.synonyms) insert(syn, term.id, FormKind::SYN);
}

// Extracts the terms reachable from any root by following child edges
// (inverse of is_a), roots included. Term order in the result is sorted
// by id, so the output does not depend on input order.
inline TermLexicon extract_subtrees(const std::vector<OntologyTerm>& terms,
                                    const std::vector<std::string>& root_ids) {
    std::unordered_map<std::string, const OntologyTerm*> by_id;
    for (const auto& term : terms) by_id.emplace(term.id, &term);

    std::unordered_map<std::string, std::vector<std::string>> children;
    for (const auto& term : terms)
        for (const auto& parent : term.parent_ids) children[parent].push_back(term.id);

    std::unordered_set<std::string> reached;
    std::vector<std::string> stack;
    for (const auto& root : root_ids) {
        if (!by_id.count(root)) throw NotFoundError("root term id not found: " + root);
        if (reached.insert(root).second) stack.push_back(root);
    }
    while (!stack.empty()) {
        std::string id = std::move(stack.back());
        stack.pop_back();
        auto it = children.find(id);
        if (it == children.end()) continue;
        for (const auto& child : it->second)
            if (reached.insert(child).second) stack.push_back(child);
    }

    TermLexicon lexicon;
    lexicon.terms.reserve(reached.size());
    for (const auto& id : reached) lexicon.terms.push_back(*by_id.at(id));
    std::sort(lexicon.terms.begin(), lexicon.terms.end(),
              [](const OntologyTerm& a, const OntologyTerm& b) { return a.id < b.id; });
    build_surface_index(lexicon);
    return lexicon;
}

// One label per term (preferred names) or per distinct surface form when
// include_synonyms is set. Deterministic: lexicographic on surface.
inline LabelSpace build_label_space(const TermLexicon& lexicon, bool include_synonyms) {
    if (lexicon.empty()) throw InvalidInputError("build_label_space: empty lexicon");
    LabelSpace space;
    for (const auto& [surface, entry] : lexicon.surface_index) {
        if (!include_synonyms && entry.kind != FormKind::PREF) continue;
        space.labels.push_back(Label{space.labels.size(), surface, entry.term_id});
    }
    return space;  // map iteration is already lexicographic
}

inline nlohmann::ordered_json lexicon_to_json(const TermLexicon& lexicon) {
    nlohmann::ordered_json doc;
    doc["terms"] = nlohmann::ordered_json::array();
    for (const auto& term : lexicon.terms) {
        nlohmann::ordered_json t;
        t["id"] = term.id;
        t["preferred_name"] = term.preferred_name;
        t["synonyms"] = term.synonyms;
        t["parents"] = term.parent_ids;
        doc["terms"].push_back(std::move(t));
    }
    return doc;
}

inline TermLexicon lexicon_from_json(const nlohmann::json& doc) {
    TermLexicon lexicon;
    if (!doc.contains("terms") || !doc["terms"].is_array())
        throw ParseError("lexicon JSON missing 'terms' array", 0);
    for (const auto& t : doc["terms"]) {
        OntologyTerm term;
        term.id = t.at("id").get<std::string>();
        term.preferred_name = t.at("preferred_name").get<std::string>();
        term.synonyms = t.value("synonyms", std::vector<std::string>{});
        term.parent_ids = t.value("parents", std::vector<std::string>{});
        lexicon.terms.push_back(std::move(term));
    }
    std::sort(lexicon.terms.begin(), lexicon.terms.end(),
              [](const OntologyTerm& a, const OntologyTerm& b) { return a.id < b.id; });
    build_surface_index(lexicon);
    return lexicon;
}

inline nlohmann::ordered_json label_space_to_json(const LabelSpace& space) {
    nlohmann::ordered_json doc;
    doc["labels"] = nlohmann::ordered_json::array();
    for (const auto& label : space.labels) {
        nlohmann::ordered_json l;
        l["id"] = label.id;
        l["surface"] = label.surface;
        l["term_id"] = label.term_id;
        doc["labels"].push_back(std::move(l));
    }
    return doc;
}

inline LabelSpace label_space_from_json(const nlohmann::json& doc) {
    LabelSpace space;
    if (!doc.contains("labels") || !doc["labels"].is_array())
        throw ParseError("label-space JSON missing 'labels' array", 0);
    for (const auto& l : doc["labels"]) {
        Label label;
        label.id = l.at("id").get<std::size_t>();
        label.surface = l.at("surface").get<std::string>();
        label.term_id = l.at("term_id").get<std::string>();
        if (label.id != space.labels.size())
            throw ParseError("label ids must equal their positions", 0);
        space.labels.push_back(std::move(label));
    }
    return space;
}

}  // namespace litmeth
