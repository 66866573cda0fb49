#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "litmeth/corpus.hpp"
#include "litmeth/error.hpp"

namespace litmeth {

// Entrez caps every investigation at 10,000 results.
inline constexpr std::size_t kFetchResultCap = 10000;
inline constexpr std::size_t kFetchChunkSize = 200;
inline constexpr int kFetchRetryAttempts = 3;

struct FetchRequest {
    std::vector<std::string> pmids;
    std::size_t max_results = kFetchResultCap;
};

// Retrieval backend for one chunk of pmids. Implementations may be called
// from multiple threads; pmids with no available record are simply absent
// from the result.
class FetchClient {
public:
    virtual ~FetchClient() = default;
    virtual std::vector<Document> fetch_chunk(const std::vector<std::string>& pmids) = 0;
    // Maximum in-flight chunk requests fetch_batch may issue.
    virtual int max_concurrency() const { return 1; }
};

// Offline client reading "<pmid>.xml" PubMed article files from a
// directory. Deterministic; used by all tests.
class FixtureFetchClient : public FetchClient {
public:
    explicit FixtureFetchClient(std::filesystem::path dir) : dir_(std::move(dir)) {
        if (!std::filesystem::is_directory(dir_))
            throw IoError("fixture directory not found: " + dir_.string());
    }

    std::vector<Document> fetch_chunk(const std::vector<std::string>& pmids) override {
        std::vector<Document> docs;
        for (const auto& pmid : pmids) {
            std::filesystem::path file = dir_ / (pmid + ".xml");
            std::ifstream in(file, std::ios::binary);
            if (!in) continue;
            std::stringstream buf;
            buf << in.rdbuf();
            auto parsed = parse_pubmed_xml(buf.str());
            for (auto& doc : parsed.documents) docs.push_back(std::move(doc));
        }
        return docs;
    }

private:
    std::filesystem::path dir_;
};

namespace detail {

// Spaces request starts so at most `per_second` begin in any one second.
class RateLimiter {
public:
    explicit RateLimiter(double per_second)
        : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
              std::chrono::duration<double>(1.0 / per_second))) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        auto now = std::chrono::steady_clock::now();
        if (next_allowed_ > now) {
            auto wake = next_allowed_;
            cv_.wait_until(lock, wake, [&] { return false; });
            now = std::chrono::steady_clock::now();
        }
        next_allowed_ = std::max(now, next_allowed_) + interval_;
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::chrono::steady_clock::duration interval_;
    std::chrono::steady_clock::time_point next_allowed_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// Chunked retrieval honoring the request cap. Documents come back in the
// order of request.pmids; chunk requests may run concurrently up to the
// client's limit, and transient failures are retried a bounded number of
// times before the error surfaces.
inline std::vector<Document> fetch_batch(const FetchRequest& request, FetchClient& client) {
    if (request.max_results > kFetchResultCap)
        throw InvalidInputError("fetch_batch: max_results " + std::to_string(request.max_results) +
                                " exceeds the cap of " + std::to_string(kFetchResultCap));
    if (request.pmids.empty()) return {};

    std::vector<std::vector<std::string>> chunks;
    for (std::size_t i = 0; i < request.pmids.size(); i += kFetchChunkSize) {
        std::size_t end = std::min(i + kFetchChunkSize, request.pmids.size());
        chunks.emplace_back(request.pmids.begin() + i, request.pmids.begin() + end);
    }

    auto fetch_with_retries = [&](const std::vector<std::string>& pmids) {
        int attempt = 0;
        for (;;) {
            try {
                return client.fetch_chunk(pmids);
            } catch (const TransportError& e) {
                if (++attempt >= kFetchRetryAttempts)
                    throw TransportError("fetch failed after " + std::to_string(attempt) +
                                         " attempts: " + e.what());
                std::this_thread::sleep_for(std::chrono::milliseconds(10 * attempt));
            }
        }
    };

    std::vector<std::vector<Document>> slots(chunks.size());
    int workers = std::min<int>(client.max_concurrency(), static_cast<int>(chunks.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < chunks.size(); ++i) slots[i] = fetch_with_retries(chunks[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(chunks.size());
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= chunks.size()) return;
                    try {
                        slots[i] = fetch_with_retries(chunks[i]);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    std::unordered_map<std::string, const Document*> by_pmid;
    for (const auto& slot : slots)
        for (const auto& doc : slot) by_pmid.emplace(doc.pmid, &doc);

    std::vector<Document> ordered;
    for (const auto& pmid : request.pmids) {
        if (ordered.size() >= request.max_results) break;
        auto it = by_pmid.find(pmid);
        if (it != by_pmid.end()) ordered.push_back(*it->second);
    }
    return ordered;
}

}  // namespace litmeth
