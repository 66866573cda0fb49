#include "catch_amalgamated.hpp"

#include <sstream>

#include "litmeth/annotate.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

using namespace litmeth;

namespace {

TermLexicon tomography_lexicon() {
    TermLexicon lexicon;
    OntologyTerm ct;
    ct.id = "T:1";
    ct.preferred_name = "computed tomography";
    ct.synonyms = {"CT", "TDM"};
    OntologyTerm tomo;
    tomo.id = "T:2";
    tomo.preferred_name = "tomography";
    OntologyTerm pet;
    pet.id = "T:3";
    pet.preferred_name = "positron emission tomography";
    pet.synonyms = {"PET"};
    lexicon.terms = {ct, tomo, pet};
    build_surface_index(lexicon);
    return lexicon;
}

Annotation make_annotation(FormKind kind, std::size_t words) {
    Annotation a;
    a.form_kind = kind;
    a.annotated_words = words;
    a.span_end = 1;
    return a;
}

}  // namespace

TEST_CASE("match_terms: no lexicon surface present") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, true);
    CHECK(match_terms("nothing relevant here", lexicon, labels).empty());
    CHECK(match_terms("", lexicon, labels).empty());
}

TEST_CASE("match_terms: longest match suppresses the nested one") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, true);
    auto annotations = match_terms("computed tomography scan", lexicon, labels);
    REQUIRE(annotations.size() == 1);
    CHECK(annotations[0].term_id == "T:1");
    CHECK(annotations[0].annotated_words == 2);
    CHECK(annotations[0].form_kind == FormKind::PREF);
    CHECK(annotations[0].span_begin == 0);
    CHECK(annotations[0].span_end == std::string("computed tomography").size());
}

TEST_CASE("match_terms: two single-word synonym matches") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, true);
    auto annotations = match_terms("ct and pet", lexicon, labels);
    REQUIRE(annotations.size() == 2);
    CHECK(annotations[0].term_id == "T:1");
    CHECK(annotations[0].form_kind == FormKind::SYN);
    CHECK(annotations[0].annotated_words == 1);
    CHECK(annotations[1].term_id == "T:3");
    CHECK(annotations[1].form_kind == FormKind::SYN);
}

TEST_CASE("match_terms: spans index the normalized text and equal the surface") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, true);
    std::string raw = "Scans:  Computed   Tomography, then PET.";
    std::string normalized = text::normalize_surface(raw);
    auto annotations = match_terms(raw, lexicon, labels);
    REQUIRE(annotations.size() == 2);
    for (const auto& a : annotations) {
        CHECK(a.span_end > a.span_begin);
        std::string slice = normalized.substr(a.span_begin, a.span_end - a.span_begin);
        CHECK(lexicon.surface_index.count(slice) == 1);
    }
}

TEST_CASE("match_terms: punctuation between words breaks a multi-word surface") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, true);
    auto annotations = match_terms("computed, tomography", lexicon, labels);
    REQUIRE(annotations.size() == 1);  // only the nested single word matches
    CHECK(annotations[0].term_id == "T:2");
}

TEST_CASE("match_terms agrees with the all-window reference matcher") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, true);
    const char* words[] = {"ct",  "pet",   "computed", "tomography", "positron",
                           "and", "scan",  "emission", "tdm",        "of",
                           "the", "chest", ",",        "."};
    Rng rng(20250809);
    for (int trial = 0; trial < 300; ++trial) {
        std::string txt;
        std::size_t len = 1 + rng.next_below(18);
        for (std::size_t w = 0; w < len && txt.size() < 200; ++w) {
            if (!txt.empty()) txt += ' ';
            txt += words[rng.next_below(std::size(words))];
        }
        auto got = match_terms(txt, lexicon, labels);
        auto expected = oracle::naive_match(txt, lexicon, labels);
        REQUIRE(got == expected);
    }
}

TEST_CASE("annotation_type_score: PREF 10, SYN 5") {
    CHECK(annotation_type_score(make_annotation(FormKind::PREF, 1)) == 10);
    CHECK(annotation_type_score(make_annotation(FormKind::SYN, 1)) == 5);
}

TEST_CASE("multi_word_score: threshold at two words") {
    CHECK(multi_word_score(make_annotation(FormKind::PREF, 1)) == 0);
    CHECK(multi_word_score(make_annotation(FormKind::PREF, 2)) == 3);
    CHECK(multi_word_score(make_annotation(FormKind::SYN, 5)) == 3);
}

TEST_CASE("annotation_score2: hand-evaluated values") {
    CHECK(annotation_score2(make_annotation(FormKind::PREF, 2)) == 26);
    CHECK(annotation_score2(make_annotation(FormKind::SYN, 1)) == 5);
    CHECK(annotation_score2(make_annotation(FormKind::SYN, 3)) == 24);
}

TEST_CASE("annotation_score2: codomain by enumeration") {
    for (FormKind kind : {FormKind::PREF, FormKind::SYN}) {
        for (std::size_t words = 1; words <= 6; ++words) {
            int score = annotation_score2(make_annotation(kind, words));
            int type = kind == FormKind::PREF ? 10 : 5;
            int bonus = words > 1 ? 3 : 0;
            CHECK(score == (type + bonus) * static_cast<int>(words));
            CHECK((annotation_type_score(make_annotation(kind, words)) == 5 ||
                   annotation_type_score(make_annotation(kind, words)) == 10));
        }
    }
}

TEST_CASE("label_text: thresholding on the annotation score") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, true);
    TermMatcher matcher(lexicon, labels);

    CHECK(label_text("nothing here", matcher, 5).empty());

    // PREF two-word match scores 26
    auto assigned = label_text("computed tomography", matcher, 5);
    REQUIRE(assigned.size() == 1);

    // SYN one-word match scores 5: excluded at min_score 6
    CHECK(label_text("ct", matcher, 5).size() == 1);
    CHECK(label_text("ct", matcher, 6).empty());
}

TEST_CASE("label_document uses the document training text") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, false);
    Document doc;
    doc.pmid = "1";
    doc.abstract_text = "plain text";
    doc.methods = "we used computed tomography";
    CHECK(label_document(doc, lexicon, labels, 5, false).empty());
    CHECK(label_document(doc, lexicon, labels, 5, true).size() == 1);
}

TEST_CASE("synonym maps to its term's label in preferred-name mode") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, false);  // 3 labels, one per term
    TermMatcher matcher(lexicon, labels);
    auto assigned = label_text("a tdm image", matcher, 5);
    REQUIRE(assigned.size() == 1);
    CHECK(labels.labels[*assigned.begin()].term_id == "T:1");
}

TEST_CASE("build_label_matrix: empty, hand-enumerated, and unlabeled") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, false);

    CHECK(build_label_matrix({}, {}, labels).row_ids.empty());

    std::vector<Document> docs(2);
    docs[0].pmid = "a";
    docs[1].pmid = "b";
    std::vector<std::set<std::size_t>> sets = {{0}, {0, 2}};
    auto matrix = build_label_matrix(docs, sets, labels);
    CHECK(matrix.cells ==
          std::set<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 0}, {1, 2}});
    CHECK(matrix.row_sum(0) == 1);
    CHECK(matrix.row_sum(1) == 2);

    std::vector<std::set<std::size_t>> empty_sets = {{}, {}};
    auto zero = build_label_matrix(docs, empty_sets, labels);
    CHECK(zero.cells.empty());
    CHECK(zero.row_ids.size() == 2);
    CHECK(zero.num_labels == labels.size());
}

TEST_CASE("build_label_matrix: errors") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, false);
    std::vector<Document> docs(1);
    docs[0].pmid = "a";
    CHECK_THROWS_AS(build_label_matrix(docs, {}, labels), InvalidInputError);
    std::vector<std::set<std::size_t>> bad = {{99}};
    CHECK_THROWS_AS(build_label_matrix(docs, bad, labels), InvalidInputError);
}

TEST_CASE("build_label_matrix: row sums equal the label set sizes") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, true);
    Rng rng(7);
    std::vector<Document> docs(20);
    std::vector<std::set<std::size_t>> sets(20);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        docs[i].pmid = std::to_string(i);
        for (std::size_t l = 0; l < labels.size(); ++l)
            if (rng.next_double() < 0.3) sets[i].insert(l);
    }
    auto matrix = build_label_matrix(docs, sets, labels);
    for (std::size_t i = 0; i < docs.size(); ++i) CHECK(matrix.row_sum(i) == sets[i].size());
}

TEST_CASE("label matrix CSV round-trip with quoting") {
    TermLexicon lexicon;
    OntologyTerm odd;
    odd.id = "T:9";
    odd.preferred_name = "assay, with comma";
    lexicon.terms = {odd};
    build_surface_index(lexicon);
    auto labels = build_label_space(lexicon, false);

    std::vector<Document> docs(2);
    docs[0].pmid = "p1";
    docs[1].pmid = "p2";
    std::vector<std::set<std::size_t>> sets = {{0}, {}};
    auto matrix = build_label_matrix(docs, sets, labels);

    std::ostringstream out;
    write_label_matrix_csv(matrix, labels, out);
    std::istringstream in(out.str());
    auto loaded = read_label_matrix_csv(in);
    CHECK(loaded.matrix.row_ids == matrix.row_ids);
    CHECK(loaded.matrix.cells == matrix.cells);
    CHECK(loaded.surfaces == std::vector<std::string>{"assay, with comma"});
}

TEST_CASE("label matrix CSV: malformed rows carry line numbers") {
    std::istringstream missing_header("nope\n");
    CHECK_THROWS_AS(read_label_matrix_csv(missing_header), ParseError);

    std::istringstream bad_cell("pmid,l1\nrow,2\n");
    try {
        read_label_matrix_csv(bad_cell);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 2);
    }

    std::istringstream short_row("pmid,l1,l2\nrow,1\n");
    CHECK_THROWS_AS(read_label_matrix_csv(short_row), ParseError);
}

TEST_CASE("annotations export is one JSON object per line") {
    auto lexicon = tomography_lexicon();
    auto labels = build_label_space(lexicon, true);
    auto annotations = match_terms("computed tomography and pet", lexicon, labels);
    REQUIRE(annotations.size() == 2);
    std::ostringstream out;
    write_annotations_jsonl("555", annotations, out);
    std::istringstream lines(out.str());
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j.at("pmid") == "555");
        CHECK(j.contains("score"));
        ++count;
    }
    CHECK(count == 2);
}
