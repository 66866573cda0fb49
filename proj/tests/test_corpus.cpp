#include "catch_amalgamated.hpp"

#include <sstream>

#include "litmeth/corpus.hpp"
#include "litmeth/fetch.hpp"
#include "litmeth/xml.hpp"
#include "support/tmpdir.hpp"

using namespace litmeth;

TEST_CASE("xml parser: entities, attributes and CDATA") {
    auto root = xml::parse(
        "<?xml version=\"1.0\"?><a x=\"1 &amp; 2\"><b>alpha &lt;beta&gt;</b>"
        "<!-- skip --><c><![CDATA[raw <text>]]></c></a>");
    CHECK(root.name == "a");
    CHECK(*root.attribute("x") == "1 & 2");
    CHECK(xml::text_content(*xml::child(root, "b")) == "alpha <beta>");
    CHECK(xml::text_content(*xml::child(root, "c")) == "raw <text>");
}

TEST_CASE("xml parser: malformed input carries a byte offset") {
    try {
        xml::parse("<a><b></a>");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
        CHECK(e.position() > 0);
    }
}

TEST_CASE("parse_pubmed_xml: single article with one abstract node") {
    auto result = parse_pubmed_xml(
        "<PubmedArticleSet><PubmedArticle><MedlineCitation><PMID>42</PMID>"
        "<Article><ArticleTitle>T</ArticleTitle>"
        "<Abstract><AbstractText>Body.</AbstractText></Abstract>"
        "</Article></MedlineCitation></PubmedArticle></PubmedArticleSet>");
    REQUIRE(result.documents.size() == 1);
    CHECK(result.documents[0].pmid == "42");
    CHECK(result.documents[0].title == "T");
    CHECK(result.documents[0].abstract_text == "Body.");
    CHECK(result.documents[0].source == DocumentSource::ABSTRACT_XML);
    CHECK(result.skipped_without_pmid == 0);
}

TEST_CASE("parse_pubmed_xml: fixture set with sections, missing abstract, missing pmid") {
    auto result = parse_pubmed_xml(testsupport::read_file(testsupport::fixture("pubmed_set.xml")));
    REQUIRE(result.documents.size() == 2);
    CHECK(result.documents[0].pmid == "100001");
    CHECK(result.documents[0].abstract_text == "Part one. Part two. Part three.");
    CHECK(result.documents[1].pmid == "100002");
    CHECK(result.documents[1].abstract_text.empty());
    CHECK(result.skipped_without_pmid == 1);
}

TEST_CASE("parse_pubmed_xml: malformed XML raises") {
    CHECK_THROWS_AS(parse_pubmed_xml("<PubmedArticleSet><PubmedArticle>"), ParseError);
}

TEST_CASE("parse_bioc_fulltext: methods and results populated, others dropped") {
    auto docs =
        parse_bioc_fulltext(testsupport::read_file(testsupport::fixture("bioc_fulltext.xml")));
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].pmid == "100001");
    CHECK(docs[0].methods == "We used contrast-enhanced CT on all participants.");
    CHECK(docs[0].results ==
          "Lesions were detected in most scans. Follow-up imaging confirmed the findings.");
    CHECK(docs[0].source == DocumentSource::FULLTEXT_BIOC);
}

TEST_CASE("parse_bioc_fulltext: introduction-only document yields empty partials") {
    auto docs =
        parse_bioc_fulltext(testsupport::read_file(testsupport::fixture("bioc_intro_only.xml")));
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].methods.empty());
    CHECK(docs[0].results.empty());
}

TEST_CASE("parse_bioc_fulltext: materials and methods alias") {
    auto docs = parse_bioc_fulltext(
        "<collection><document><id>7</id><passage>"
        "<infon key=\"section_type\">Materials and Methods</infon>"
        "<text>Alias text.</text></passage></document></collection>");
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].methods == "Alias text.");
}

TEST_CASE("filter_corpus: keeps nonempty abstracts in order, dedupes pmids") {
    std::vector<Document> docs(5);
    docs[0].pmid = "1";
    docs[0].abstract_text = "a";
    docs[1].pmid = "2";
    docs[2].pmid = "3";
    docs[2].abstract_text = "c";
    docs[3].pmid = "4";
    docs[4].pmid = "1";
    docs[4].abstract_text = "a-again";

    auto kept = filter_corpus(docs);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].pmid == "1");
    CHECK(kept[0].abstract_text == "a");
    CHECK(kept[1].pmid == "3");

    CHECK(filter_corpus(kept) == kept);  // idempotent
}

TEST_CASE("filter_corpus: identity when all have abstracts") {
    std::vector<Document> docs(3);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        docs[i].pmid = std::to_string(i);
        docs[i].abstract_text = "text";
    }
    CHECK(filter_corpus(docs) == docs);
}

TEST_CASE("expand_search_terms: published table entries") {
    CHECK(expand_search_terms("Tomography") ==
          std::vector<std::string>{"CT", "PET", "Computed tomography", "TDM"});
    CHECK(expand_search_terms("X-ray diffraction") ==
          std::vector<std::string>{"Crystallography", "X-ray crystallography",
                                   "X-ray microscopy"});
}

TEST_CASE("expand_search_terms: singleton entry and unknown hallmark") {
    SearchTermTable table{{"Solo", {"only term"}}};
    CHECK(expand_search_terms("Solo", table) == std::vector<std::string>{"only term"});
    CHECK_THROWS_AS(expand_search_terms("Nope", table), NotFoundError);
}

TEST_CASE("corpus store: empty corpus, round-trip, corrupt line") {
    std::ostringstream empty_out;
    store_corpus({}, empty_out);
    CHECK(empty_out.str().empty());

    std::vector<Document> docs(2);
    docs[0].pmid = "10";
    docs[0].title = "first";
    docs[0].abstract_text = "alpha, with \"quotes\"";
    docs[1].pmid = "11";
    docs[1].methods = "methods text";
    docs[1].results = "results text";
    docs[1].source = DocumentSource::FULLTEXT_BIOC;

    std::ostringstream out;
    store_corpus(docs, out);
    std::istringstream in(out.str());
    CHECK(load_corpus(in) == docs);

    try {
        std::ifstream corrupt(testsupport::fixture("corrupt.jsonl"));
        load_corpus(corrupt);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 1);
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}

TEST_CASE("training_text composes abstract with optional sections") {
    Document doc;
    doc.abstract_text = "abs";
    doc.methods = "m";
    doc.results = "r";
    CHECK(training_text(doc, false) == "abs");
    CHECK(training_text(doc, true) == "abs m r");
}

TEST_CASE("fetch_batch: empty request and fixture ordering") {
    FixtureFetchClient client(testsupport::fixture("pmids"));
    CHECK(fetch_batch(FetchRequest{}, client).empty());

    FetchRequest request;
    request.pmids = {"750003", "750001", "750002"};
    auto docs = fetch_batch(request, client);
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].pmid == "750003");
    CHECK(docs[1].pmid == "750001");
    CHECK(docs[2].pmid == "750002");

    auto again = fetch_batch(request, client);
    CHECK(docs == again);  // deterministic
}

TEST_CASE("fetch_batch: missing fixtures are absent, cap respected") {
    FixtureFetchClient client(testsupport::fixture("pmids"));
    FetchRequest request;
    request.pmids = {"750001", "999999", "750002"};
    auto docs = fetch_batch(request, client);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].pmid == "750001");
    CHECK(docs[1].pmid == "750002");

    request.max_results = 1;
    CHECK(fetch_batch(request, client).size() == 1);
}

TEST_CASE("fetch_batch: the 10000 cap is enforced") {
    FixtureFetchClient client(testsupport::fixture("pmids"));
    FetchRequest request;
    request.pmids = {"750001"};
    request.max_results = 10001;
    CHECK_THROWS_AS(fetch_batch(request, client), InvalidInputError);
}

namespace {

// Client that fails a fixed number of times before succeeding, and can
// serve concurrent chunks out of order.
class FlakyClient : public FetchClient {
public:
    explicit FlakyClient(int failures) : failures_(failures) {}

    std::vector<Document> fetch_chunk(const std::vector<std::string>& pmids) override {
        if (failures_ > 0) {
            --failures_;
            throw TransportError("synthetic failure");
        }
        std::vector<Document> docs;
        for (const auto& pmid : pmids) {
            Document d;
            d.pmid = pmid;
            d.abstract_text = "text " + pmid;
            docs.push_back(std::move(d));
        }
        return docs;
    }

    int calls() const { return calls_; }

private:
    int failures_;
    int calls_ = 0;
};

}  // namespace

TEST_CASE("fetch_batch: bounded retries then surfacing the transport error") {
    {
        FlakyClient client(2);  // third attempt succeeds
        FetchRequest request;
        request.pmids = {"1"};
        auto docs = fetch_batch(request, client);
        REQUIRE(docs.size() == 1);
    }
    {
        FlakyClient client(3);  // exhausts all attempts
        FetchRequest request;
        request.pmids = {"1"};
        CHECK_THROWS_AS(fetch_batch(request, client), TransportError);
    }
}

namespace {

// Returns results in request order even when chunks complete out of order.
class SlowFirstChunkClient : public FetchClient {
public:
    std::vector<Document> fetch_chunk(const std::vector<std::string>& pmids) override {
        if (pmids.front() == "0")
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        std::vector<Document> docs;
        for (const auto& pmid : pmids) {
            Document d;
            d.pmid = pmid;
            d.abstract_text = "x";
            docs.push_back(std::move(d));
        }
        return docs;
    }
    int max_concurrency() const override { return 2; }
};

}  // namespace

TEST_CASE("fetch_batch: concurrent chunks still return in request order") {
    FetchRequest request;
    for (int i = 0; i < 400; ++i) request.pmids.push_back(std::to_string(i));
    SlowFirstChunkClient client;
    auto docs = fetch_batch(request, client);
    REQUIRE(docs.size() == 400);
    for (int i = 0; i < 400; ++i) CHECK(docs[static_cast<std::size_t>(i)].pmid == std::to_string(i));
}
