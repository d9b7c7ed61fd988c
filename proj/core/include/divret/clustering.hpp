#pragma once

#include "divret/corpus.hpp"
#include "divret/error.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace divret {

/// Disjoint, exhaustive partition of a candidate list. labels[i] is the
/// cluster of ids[i]; labels are contiguous 0..cluster_count-1 and every
/// cluster is nonempty.
class ClusterAssignment {
public:
    ClusterAssignment() = default;

    /// Validates the invariants above; throws ValidationError otherwise.
    ClusterAssignment(std::vector<std::string> ids, std::vector<std::size_t> labels);

    std::span<const std::string> ids() const noexcept { return ids_; }
    std::span<const std::size_t> labels() const noexcept { return labels_; }
    std::size_t cluster_count() const noexcept { return cluster_count_; }
    std::size_t size() const noexcept { return ids_.size(); }

    /// Throws ValidationError for an id outside the partition.
    std::size_t label_of(std::string_view id) const;
    /// Cluster sizes indexed by label.
    std::vector<std::size_t> cluster_sizes() const;

private:
    std::vector<std::string> ids_;
    std::vector<std::size_t> labels_;
    std::unordered_map<std::string, std::size_t> position_;
    std::size_t cluster_count_ = 0;
};

enum class ClusterStrategy { leader, file };

struct ClustererConfig {
    ClusterStrategy strategy = ClusterStrategy::leader;
    double tau = 0.85;
    std::size_t min_cluster_size = 3;
    std::optional<std::filesystem::path> assignment_path;

    /// tau in (-1, 1] for leader, a path for file, min_cluster_size >= 1.
    void validate() const;
};

std::string_view to_string(ClusterStrategy s);
ClusterStrategy parse_cluster_strategy(std::string_view s);

/// Leader clustering over candidates in the given (relevance) order: each
/// candidate joins the first cluster whose leader has cosine >= tau with it,
/// otherwise it founds a new cluster. Clusters smaller than min_cluster_size
/// are then split into singletons. Labels are numbered by first appearance.
ClusterAssignment leader_cluster(const Corpus& corpus, std::span<const Candidate> candidates, double tau,
                                 std::size_t min_cluster_size);

/// Imports {"id": label, ...}. Label -1 marks noise and becomes a singleton;
/// the rest are compacted by first appearance in candidate order. Ids in the
/// file but not among the candidates are ignored with a warning.
ClusterAssignment load_cluster_assignment(const std::filesystem::path& path, std::span<const std::string> candidate_ids,
                                          Warnings* warnings = nullptr);
ClusterAssignment parse_cluster_assignment(std::string_view json_text, std::span<const std::string> candidate_ids,
                                           Warnings* warnings = nullptr);

/// Dispatches on config.strategy. Candidates must be nonempty.
ClusterAssignment cluster_candidates(const Corpus& corpus, std::span<const Candidate> candidates,
                                     const ClustererConfig& config, Warnings* warnings = nullptr);

}  // namespace divret
