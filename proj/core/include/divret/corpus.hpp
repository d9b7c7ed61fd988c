#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace divret {

/// Nonzero, finite embedding. The Euclidean norm is cached at construction.
class Embedding {
public:
    Embedding() = default;

    /// Throws ValidationError on empty input, non-finite coordinates or a zero norm.
    explicit Embedding(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t dim() const noexcept { return values_.size(); }
    double norm() const noexcept { return norm_; }

    friend bool operator==(const Embedding& a, const Embedding& b) { return a.values_ == b.values_; }

private:
    std::vector<double> values_;
    double norm_ = 0.0;
};

/// dot(u,v) / (|u| |v|), clamped into [-1, 1]. Throws ValidationError on a dimension mismatch.
double cosine_similarity(const Embedding& u, const Embedding& v);

struct AdapterRecord {
    std::string id;
    std::string name;
    std::string description;
    std::vector<std::string> tags;
    Embedding embedding;
    bool unsafe = false;
};

/// Immutable, validated set of adapter records. Record order is ingest order
/// and doubles as the deterministic tie-breaker everywhere downstream.
class Corpus {
public:
    Corpus() = default;

    /// Validates ids (nonempty, unique) and a shared dimension.
    explicit Corpus(std::vector<AdapterRecord> records);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    const AdapterRecord& operator[](std::size_t index) const { return records_[index]; }
    std::span<const AdapterRecord> records() const noexcept { return records_; }

    /// Ingest index of `id`, or npos.
    std::size_t find(std::string_view id) const;
    /// Ingest index of `id`; throws ValidationError when absent.
    std::size_t index_of(std::string_view id) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t dim_ = 0;
    std::vector<AdapterRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Parses corpus JSONL. Errors carry the 1-based line number and record id.
Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);

/// One JSONL line per record, keys sorted, embeddings with round-trip precision.
void write_corpus(std::ostream& out, const Corpus& corpus);

/// A prefilter hit: ingest index into the corpus plus its similarity to the query.
struct Candidate {
    std::size_t index = 0;
    double similarity = 0.0;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Top-m records by cosine similarity to `query`, descending, ties by ingest
/// index. An empty result means no eligible record survived.
std::vector<Candidate> prefilter_top_m(const Corpus& corpus, const Embedding& query, std::size_t m,
                                       bool exclude_unsafe);

}  // namespace divret
