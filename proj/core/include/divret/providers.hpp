#pragma once

#include "divret/corpus.hpp"
#include "divret/error.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace divret {

/// One concept proposed by an extractor, with its free-text rationale.
struct ExtractedConcept {
    std::string keyword;
    std::string explanation;
};

/// Splits a prompt into concept phrases. Throws RemoteError on transport failure.
class ConceptExtractor {
public:
    virtual ~ConceptExtractor() = default;
    virtual std::vector<ExtractedConcept> extract(std::string_view prompt) = 0;
};

/// Maps text into the corpus embedding space.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(std::string_view text) = 0;
};

struct SafetyFlag {
    std::string id;
    std::string explanation;

    friend bool operator==(const SafetyFlag&, const SafetyFlag&) = default;
};

/// Flags adapters that should not be used for a prompt/keyword pair.
class SafetyChecker {
public:
    virtual ~SafetyChecker() = default;
    virtual std::vector<SafetyFlag> check(std::string_view prompt, std::string_view keyword,
                                          std::span<const AdapterRecord* const> adapters) = 0;
};

/// Always returns the whole prompt as the single concept.
class FallbackExtractor final : public ConceptExtractor {
public:
    std::vector<ExtractedConcept> extract(std::string_view prompt) override;
};

/// Returns a fixed list regardless of the prompt (manual concepts, tests).
class StaticExtractor final : public ConceptExtractor {
public:
    explicit StaticExtractor(std::vector<std::string> keywords);
    std::vector<ExtractedConcept> extract(std::string_view prompt) override;

private:
    std::vector<std::string> keywords_;
};

/// Exact-text lookup table, loaded from a JSON object of text -> number array.
class LookupEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit LookupEmbeddingProvider(std::map<std::string, std::vector<double>, std::less<>> table);
    static LookupEmbeddingProvider from_file(const std::filesystem::path& path);
    static LookupEmbeddingProvider from_json(std::string_view json_text);

    std::vector<double> embed(std::string_view text) override;

private:
    std::map<std::string, std::vector<double>, std::less<>> table_;
};

/// Offline checker: flags an adapter whose description or tags contain a
/// deny-listed term (case-insensitive), unless the prompt mentions that term.
class DenyListChecker final : public SafetyChecker {
public:
    explicit DenyListChecker(std::vector<std::string> terms);
    /// One term per line; blank lines and '#' comments skipped.
    static DenyListChecker from_file(const std::filesystem::path& path);

    std::vector<SafetyFlag> check(std::string_view prompt, std::string_view keyword,
                                  std::span<const AdapterRecord* const> adapters) override;

    std::span<const std::string> terms() const noexcept { return terms_; }

private:
    std::vector<std::string> terms_;
};

struct RemoteOptions {
    std::chrono::milliseconds timeout{5000};
    int retries = 1;
    /// Receives one line per remote call, tagged with the request body hash.
    std::function<void(const std::string&)> log;
};

/// POST <base>/extract {"prompt"} -> {"concepts": [{"keyword", "explanation"}]}
class HttpConceptExtractor final : public ConceptExtractor {
public:
    HttpConceptExtractor(std::string base_url, RemoteOptions options = {});
    std::vector<ExtractedConcept> extract(std::string_view prompt) override;

private:
    std::string base_url_;
    RemoteOptions options_;
};

/// POST <base>/embed {"text"} -> {"embedding": [number, ...]}
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string base_url, RemoteOptions options = {});
    std::vector<double> embed(std::string_view text) override;

private:
    std::string base_url_;
    RemoteOptions options_;
};

/// POST <base>/safety {"prompt", "keyword", "adapters": [{"id", "description"}]}
///   -> {"flagged": [{"id", "explanation"}]}
class HttpSafetyChecker final : public SafetyChecker {
public:
    HttpSafetyChecker(std::string base_url, RemoteOptions options = {});
    std::vector<SafetyFlag> check(std::string_view prompt, std::string_view keyword,
                                  std::span<const AdapterRecord* const> adapters) override;

private:
    std::string base_url_;
    RemoteOptions options_;
};

/// 64-bit FNV-1a, hex encoded. Used to tag remote requests in logs.
std::string request_hash(std::string_view body);

/// Lower-cases ASCII letters.
std::string ascii_lower(std::string_view s);
/// Case-insensitive (ASCII) substring test.
bool contains_icase(std::string_view haystack, std::string_view needle);

}  // namespace divret
