#pragma once

#include "divret/clustering.hpp"
#include "divret/corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace divret {

/// Which embedding drives the top-m prefilter for a concept.
enum class PrefilterQuery { by_concept, by_prompt };

struct SelectionConfig {
    double lambda1 = 7.0;
    double lambda2 = 1.0;
    std::size_t n = 8;
    std::size_t m = 200;
    ClustererConfig clusterer;
    std::uint64_t seed = 0;
    bool reward_clamp = true;
    PrefilterQuery prefilter_query = PrefilterQuery::by_concept;
    bool exclude_unsafe = true;

    /// lambdas finite and >= 0, 1 <= n <= m, clusterer valid.
    void validate() const;
};

/// Frozen evaluation state for one (concept, candidate set) pair.
///
/// Positions 0..size()-1 index the candidates in prefilter order; subsets are
/// passed as spans of positions. Every item carries its relevance weight
/// (cosine to the prompt), its nonnegative reward (cosine to the concept) and
/// its cluster label.
class ObjectiveContext {
public:
    struct Item {
        std::string id;
        std::size_t ingest_index = 0;
        double prompt_sim = 0.0;
        double reward = 0.0;
        std::size_t cluster = 0;
    };

    ObjectiveContext() = default;

    /// Throws ValidationError unless ids are unique, rewards are finite and
    /// >= 0, prompt_sims lie in [-1, 1], clusters lie below cluster_count and
    /// the lambdas are finite and >= 0.
    ObjectiveContext(std::vector<Item> items, std::size_t cluster_count, double lambda1, double lambda2);

    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    const Item& operator[](std::size_t pos) const { return items_[pos]; }
    std::span<const Item> items() const noexcept { return items_; }
    std::size_t cluster_count() const noexcept { return cluster_count_; }
    double lambda1() const noexcept { return lambda1_; }
    double lambda2() const noexcept { return lambda2_; }

    /// Same items and clusters, different trade-off weights.
    ObjectiveContext with_lambdas(double lambda1, double lambda2) const;

    /// Throws ValidationError for an unknown id.
    std::size_t position_of(std::string_view id) const;
    std::vector<std::size_t> positions_of(std::span<const std::string> ids) const;

private:
    std::vector<Item> items_;
    std::unordered_map<std::string, std::size_t> position_;
    std::size_t cluster_count_ = 0;
    double lambda1_ = 0.0;
    double lambda2_ = 0.0;
};

/// prompt_sims from the prompt embedding, rewards from the concept embedding
/// (negative cosines clamped to 0 when config.reward_clamp, fatal otherwise).
ObjectiveContext build_context(const Corpus& corpus, std::span<const Candidate> candidates,
                               const Embedding& prompt_embedding, const Embedding& concept_embedding,
                               const ClusterAssignment& assignment, const SelectionConfig& config);

/// Sum of prompt similarities over the subset.
double relevance(const ObjectiveContext& ctx, std::span<const std::size_t> subset);
/// Sum over clusters of ln(1 + selected reward mass in the cluster).
double diversity(const ObjectiveContext& ctx, std::span<const std::size_t> subset);
/// lambda1 * relevance + lambda2 * diversity.
double objective(const ObjectiveContext& ctx, std::span<const std::size_t> subset);

double relevance(const ObjectiveContext& ctx, std::span<const std::string> ids);
double diversity(const ObjectiveContext& ctx, std::span<const std::string> ids);
double objective(const ObjectiveContext& ctx, std::span<const std::string> ids);

/// ln(1 + s + r) - ln(1 + s), written as log1p(r / (1 + s)) so the computed
/// value never increases as s grows.
double saturated_gain(double cluster_sum, double reward);

/// Unweighted components of a marginal gain.
struct GainParts {
    double relevance = 0.0;
    double diversity = 0.0;
};

/// Incrementally maintained selection: membership plus per-cluster reward sums.
class SelectionState {
public:
    explicit SelectionState(const ObjectiveContext& ctx);
    SelectionState(const ObjectiveContext& ctx, std::span<const std::size_t> subset);

    /// Throws PreconditionError if pos is already selected.
    GainParts gain_parts(std::size_t pos) const;
    double gain(std::size_t pos) const;

    /// Adds pos and returns the gain it contributed.
    double add(std::size_t pos);

    bool contains(std::size_t pos) const { return selected_.at(pos); }
    std::size_t count() const noexcept { return count_; }
    std::span<const double> cluster_sums() const noexcept { return cluster_sums_; }
    const ObjectiveContext& context() const noexcept { return *ctx_; }

private:
    const ObjectiveContext* ctx_;
    std::vector<bool> selected_;
    std::vector<double> cluster_sums_;
    std::size_t count_ = 0;
};

/// F(P + v) - F(P) from cached cluster sums.
double marginal_gain(const SelectionState& state, std::size_t v);
/// Same, building the cache from `subset` first. Throws if v is in the subset.
double marginal_gain(const ObjectiveContext& ctx, std::span<const std::size_t> subset, std::size_t v);

}  // namespace divret
