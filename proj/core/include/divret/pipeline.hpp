#pragma once

#include "divret/corpus.hpp"
#include "divret/error.hpp"
#include "divret/objective.hpp"
#include "divret/optimizer.hpp"
#include "divret/providers.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace divret {

enum class ConceptSource { extractor, fallback, manual };
std::string_view to_string(ConceptSource s);

struct ConceptExtraction {
    std::vector<std::string> concepts;
    ConceptSource source = ConceptSource::extractor;
};

/// Runs the extractor and keeps only phrases that occur in the prompt
/// (case-insensitive), deduplicated in first-occurrence order. A transport
/// failure or an empty surviving list falls back to the whole prompt.
/// `on_success` labels the source when the extractor's answer is used.
ConceptExtraction extract_concepts(std::string_view prompt, ConceptExtractor& extractor,
                                   ConceptSource on_success = ConceptSource::extractor, Warnings* warnings = nullptr);

/// Provider lookup validated against the corpus dimension.
Embedding embed_text(std::string_view text, EmbeddingProvider& provider, std::size_t dim);

struct SafetyOutcome {
    std::vector<Candidate> kept;
    std::vector<SafetyFlag> flagged;
};

/// Drops flagged candidates, preserving order. With no checker everything is
/// kept. On RemoteError: fail_closed rethrows, otherwise all candidates are
/// kept and a warning is recorded.
SafetyOutcome safety_filter(const Corpus& corpus, std::span<const Candidate> candidates, std::string_view prompt,
                            std::string_view keyword, SafetyChecker* checker, bool fail_closed,
                            Warnings* warnings = nullptr);

struct Concept {
    std::string text;
    Embedding embedding;
    ConceptSource source = ConceptSource::extractor;
};

/// Everything computed for one concept.
struct ConceptResult {
    Concept concept_info;
    std::size_t candidate_count = 0;  // after prefilter and safety
    ObjectiveContext context;         // empty when no candidate survived
    SelectionTrace trace;
};

struct UnionEntry {
    std::string id;
    std::size_t concept_index = 0;  // into RetrievalResult::concepts
    double gain = 0.0;
};

struct FlaggedEntry {
    std::string id;
    std::size_t concept_index = 0;
    std::string explanation;
};

struct RetrievalResult {
    std::string prompt;
    std::vector<ConceptResult> concepts;
    std::vector<UnionEntry> union_entries;
    std::vector<FlaggedEntry> flagged;
    Warnings warnings;

    std::vector<std::string> union_ids() const;
    bool empty() const noexcept { return union_entries.empty(); }
};

struct Providers {
    ConceptExtractor* extractor = nullptr;  // null: whole prompt as one concept
    ConceptSource extractor_source = ConceptSource::extractor;
    EmbeddingProvider* embedder = nullptr;  // required
    SafetyChecker* safety = nullptr;        // null: no filtering beyond unsafe flags
    bool safety_fail_closed = false;
};

/// Per concept: prefilter -> safety -> cluster -> context -> lazy greedy; then
/// merge the picks. An id picked by several concepts is kept once, at the
/// occurrence with the highest marginal gain (earliest concept on ties). Ids
/// flagged for any concept never enter the union.
RetrievalResult retrieve(std::string_view prompt, const Corpus& corpus, const SelectionConfig& config,
                         const Providers& providers);

/// Merge rule used by retrieve(), exposed for direct testing. Each element of
/// `picks` is one concept's (id, gain) sequence.
std::vector<UnionEntry> merge_picks(const std::vector<std::vector<std::pair<std::string, double>>>& picks,
                                    const std::vector<std::string>& excluded = {});

struct RecipeEntry {
    std::string id;
    double weight = 0.0;
    std::vector<std::size_t> concept_indices;  // concepts that drew this adapter

    friend bool operator==(const RecipeEntry&, const RecipeEntry&) = default;
};

struct CombinationRecipe {
    std::vector<RecipeEntry> entries;

    friend bool operator==(const CombinationRecipe&, const CombinationRecipe&) = default;
};

/// `count` recipes; each draws one adapter uniformly from every concept's
/// picks and weights the concepts equally. Concepts without picks are skipped
/// with a warning; if two concepts draw the same adapter their weights merge.
std::vector<CombinationRecipe> sample_combinations(const RetrievalResult& result, std::size_t count,
                                                   std::uint64_t seed, Warnings* warnings = nullptr);

nlohmann::json config_to_json(const SelectionConfig& config);
nlohmann::json to_json(const RetrievalResult& result);
nlohmann::json to_json(const std::vector<CombinationRecipe>& recipes);

}  // namespace divret
