#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "litmeth/error.hpp"
#include "litmeth/text.hpp"
#include "litmeth/xml.hpp"

namespace litmeth {

enum class DocumentSource { ABSTRACT_XML, FULLTEXT_BIOC };

inline const char* to_string(DocumentSource s) {
    return s == DocumentSource::ABSTRACT_XML ? "ABSTRACT_XML" : "FULLTEXT_BIOC";
}

inline DocumentSource document_source_from_string(std::string_view s) {
    if (s == "ABSTRACT_XML") return DocumentSource::ABSTRACT_XML;
    if (s == "FULLTEXT_BIOC") return DocumentSource::FULLTEXT_BIOC;
    throw ParseError("unknown document source '" + std::string(s) + "'", 0);
}

struct Document {
    std::string pmid;
    std::string title;
    std::string abstract_text;
    std::string methods;
    std::string results;
    DocumentSource source = DocumentSource::ABSTRACT_XML;

    bool operator==(const Document&) const = default;
};

// Text a document contributes to training: the abstract, optionally
// followed by the methods and results sections.
inline std::string training_text(const Document& doc, bool include_fulltext) {
    std::string out = doc.abstract_text;
    if (include_fulltext) {
        if (!doc.methods.empty()) {
            if (!out.empty()) out += ' ';
            out += doc.methods;
        }
        if (!doc.results.empty()) {
            if (!out.empty()) out += ' ';
            out += doc.results;
        }
    }
    return out;
}

struct PubmedParseResult {
    std::vector<Document> documents;
    std::size_t skipped_without_pmid = 0;  // warnings tally
};

// Parses PubMed efetch XML. One Document per PubmedArticle element;
// AbstractText sections are concatenated with single spaces in document
// order; a missing abstract yields an empty abstract (discarded later by
// filter_corpus). Articles without a PMID are skipped and counted.
inline PubmedParseResult parse_pubmed_xml(std::string_view raw) {
    xml::Node root = xml::parse(raw);
    std::vector<const xml::Node*> articles;
    if (root.name == "PubmedArticle") {
        articles.push_back(&root);
    } else {
        articles = xml::find_all(root, "PubmedArticle");
    }

    PubmedParseResult result;
    for (const xml::Node* article : articles) {
        const xml::Node* citation = xml::child(*article, "MedlineCitation");
        const xml::Node* pmid_node = citation ? xml::child(*citation, "PMID") : nullptr;
        if (!pmid_node) {
            ++result.skipped_without_pmid;
            continue;
        }
        Document doc;
        doc.pmid = xml::text_content(*pmid_node);
        if (doc.pmid.empty()) {
            ++result.skipped_without_pmid;
            continue;
        }
        auto titles = xml::find_all(*article, "ArticleTitle");
        if (!titles.empty()) doc.title = xml::text_content(*titles.front());

        auto abstracts = xml::find_all(*article, "Abstract");
        if (!abstracts.empty()) {
            std::string joined;
            for (const xml::Node* section : xml::find_all(*abstracts.front(), "AbstractText")) {
                std::string part = xml::text_content(*section);
                if (part.empty()) continue;
                if (!joined.empty()) joined += ' ';
                joined += part;
            }
            doc.abstract_text = std::move(joined);
        }
        doc.source = DocumentSource::ABSTRACT_XML;
        result.documents.push_back(std::move(doc));
    }
    return result;
}

namespace detail {

inline bool is_methods_section(std::string_view normalized) {
    return normalized == "methods" || normalized == "method" ||
           normalized == "materials and methods" || normalized == "materials|methods" ||
           normalized == "materials & methods";
}

inline bool is_results_section(std::string_view normalized) {
    return normalized == "results" || normalized == "result";
}

}  // namespace detail

// Parses a BioC collection and keeps only METHODS / RESULTS passages,
// matched case-insensitively on the section-type infon with a small alias
// list. Returns partial Documents (pmid, methods, results); collections
// without recognizable passages yield documents with empty sections.
inline std::vector<Document> parse_bioc_fulltext(std::string_view raw) {
    xml::Node root = xml::parse(raw);
    std::vector<const xml::Node*> doc_nodes;
    if (root.name == "document") doc_nodes.push_back(&root);
    else doc_nodes = xml::find_all(root, "document");

    std::vector<Document> docs;
    for (const xml::Node* doc_node : doc_nodes) {
        Document doc;
        doc.source = DocumentSource::FULLTEXT_BIOC;
        if (const xml::Node* id_node = xml::child(*doc_node, "id"))
            doc.pmid = xml::text_content(*id_node);

        for (const xml::Node* passage : xml::find_all(*doc_node, "passage")) {
            std::string section;
            for (const xml::Node* infon : xml::find_all(*passage, "infon")) {
                const std::string* key = infon->attribute("key");
                if (key && (*key == "section_type" || *key == "type")) {
                    section = text::normalize_surface(xml::text_content(*infon));
                    if (detail::is_methods_section(section) || detail::is_results_section(section))
                        break;
                }
            }
            if (section.empty()) continue;
            const xml::Node* text_node = xml::child(*passage, "text");
            if (!text_node) continue;
            std::string body = xml::text_content(*text_node);
            if (body.empty()) continue;

            std::string* target = nullptr;
            if (detail::is_methods_section(section)) target = &doc.methods;
            else if (detail::is_results_section(section)) target = &doc.results;
            if (!target) continue;
            if (!target->empty()) *target += ' ';
            *target += body;
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

// Keeps documents with nonempty abstracts, preserving order; duplicate
// pmids keep their first occurrence. Idempotent.
inline std::vector<Document> filter_corpus(const std::vector<Document>& docs) {
    std::vector<Document> kept;
    std::unordered_set<std::string> seen;
    for (const auto& doc : docs) {
        if (doc.abstract_text.empty()) continue;
        if (!seen.insert(doc.pmid).second) continue;
        kept.push_back(doc);
    }
    return kept;
}

// Hallmark -> representative search terms used to assemble per-method
// queries. Defaults reproduce the published expansion table.
using SearchTermTable = std::map<std::string, std::vector<std::string>>;

inline const SearchTermTable& default_search_terms() {
    static const SearchTermTable table = {
        {"Tomography", {"CT", "PET", "Computed tomography", "TDM"}},
        {"Imaging",
         {"Microscopy imaging", "Diffraction experiment", "Optical super-resolution microscopy",
          "Photonic microscopy"}},
        {"RNA immunoprecipitation", {"RIP", "PAR-CLIP", "CLIP", "CLIP-seq", "HITS-CLIP", "iCLIP"}},
        {"NMR",
         {"Rotational Frame Nuclear Overhauser Effect Spectroscopy",
          "Nuclear magnetic resonance spectroscopy"}},
        {"Neutron diffraction",
         {"Neutron diffraction experiment", "Neutron microscopy", "Elastic neutron scattering"}},
        {"X-ray diffraction", {"Crystallography", "X-ray crystallography", "X-ray microscopy"}},
    };
    return table;
}

inline std::vector<std::string> expand_search_terms(const std::string& hallmark,
                                                    const SearchTermTable& table) {
    auto it = table.find(hallmark);
    if (it == table.end()) throw NotFoundError("unknown hallmark: " + hallmark);
    return it->second;
}

inline std::vector<std::string> expand_search_terms(const std::string& hallmark) {
    return expand_search_terms(hallmark, default_search_terms());
}

// --- corpus store: one JSON object per line ---

inline nlohmann::ordered_json document_to_json(const Document& doc) {
    nlohmann::ordered_json j;
    j["pmid"] = doc.pmid;
    j["title"] = doc.title;
    j["abstract"] = doc.abstract_text;
    j["methods"] = doc.methods;
    j["results"] = doc.results;
    j["source"] = to_string(doc.source);
    return j;
}

inline Document document_from_json(const nlohmann::json& j) {
    Document doc;
    doc.pmid = j.at("pmid").get<std::string>();
    doc.title = j.value("title", "");
    doc.abstract_text = j.value("abstract", "");
    doc.methods = j.value("methods", "");
    doc.results = j.value("results", "");
    doc.source = document_source_from_string(j.value("source", "ABSTRACT_XML"));
    return doc;
}

inline void store_corpus(const std::vector<Document>& docs, std::ostream& out) {
    for (const auto& doc : docs) out << document_to_json(doc).dump() << '\n';
}

inline void store_corpus(const std::vector<Document>& docs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open corpus file for writing: " + path);
    store_corpus(docs, out);
    if (!out.good()) throw IoError("write failure on corpus file: " + path);
}

inline std::vector<Document> load_corpus(std::istream& in) {
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ParseError("corpus line " + std::to_string(line_no) + ": malformed JSON", line_no);
        try {
            docs.push_back(document_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    return docs;
}

inline std::vector<Document> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file: " + path);
    return load_corpus(in);
}

}  // namespace litmeth
