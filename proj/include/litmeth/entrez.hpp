#pragma once

#include <memory>
#include <string>
#include <vector>

#include <httplib.h>

#include "litmeth/fetch.hpp"

namespace litmeth {

// Live PubMed efetch client. Refuses to construct without a contact
// email (CONTACT_EMAIL), keeps under the public rate limit of three
// requests per second, and asks for XML only.
class EntrezFetchClient : public FetchClient {
public:
    struct Options {
        std::string contact_email;  // required
        std::string tool = "litmeth";
        std::string host = "https://eutils.ncbi.nlm.nih.gov";
        double requests_per_second = 3.0;
        int concurrency = 2;
        int timeout_seconds = 30;
    };

    explicit EntrezFetchClient(Options options)
        : options_(std::move(options)), limiter_(options_.requests_per_second) {
        if (options_.contact_email.empty())
            throw ConfigError("live retrieval requires a contact email; set CONTACT_EMAIL");
    }

    std::vector<Document> fetch_chunk(const std::vector<std::string>& pmids) override {
        if (pmids.empty()) return {};
        std::string ids;
        for (const auto& pmid : pmids) {
            if (!ids.empty()) ids += ',';
            ids += pmid;
        }
        httplib::Params params{{"db", "pubmed"},
                               {"retmode", "xml"},
                               {"id", ids},
                               {"tool", options_.tool},
                               {"email", options_.contact_email}};
        limiter_.acquire();
        httplib::Client http(options_.host);
        http.set_connection_timeout(options_.timeout_seconds, 0);
        http.set_read_timeout(options_.timeout_seconds, 0);
        auto res = http.Post("/entrez/eutils/efetch.fcgi", params);
        if (!res)
            throw TransportError("efetch transport failure: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw TransportError("efetch HTTP status " + std::to_string(res->status));
        return parse_pubmed_xml(res->body).documents;
    }

    int max_concurrency() const override { return options_.concurrency; }

private:
    Options options_;
    detail::RateLimiter limiter_;
};

}  // namespace litmeth
