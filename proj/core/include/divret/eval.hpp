#pragma once

#include "divret/clustering.hpp"
#include "divret/corpus.hpp"
#include "divret/pipeline.hpp"
#include "divret/random.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace divret {

/// Gaussian blobs on the unit sphere. Each member is its blob center plus
/// isotropic noise of total scale ~intra_spread, renormalized.
struct SyntheticSpec {
    std::size_t blob_count = 4;
    std::size_t per_blob = 10;
    std::size_t dim = 32;
    double intra_spread = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    Corpus corpus;
    std::vector<std::size_t> labels;  // ground-truth blob per record
    std::vector<Embedding> centers;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Writes corpus.jsonl, labels.json (id -> blob, loadable as a cluster
/// assignment) and embeddings.json (lookup table with "blob-<k>" -> center
/// and "all blobs" -> normalized mean of the centers).
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

struct EvalReport {
    std::size_t selection_size = 0;
    /// Mean cosine over unordered pairs; empty for fewer than two picks.
    std::optional<double> mean_pairwise_similarity;
    std::size_t cluster_coverage = 0;
    std::optional<double> objective_value;
};

/// Throws ValidationError for ids missing from the corpus or the assignment.
EvalReport eval_selection(std::span<const std::string> selection, const Corpus& corpus,
                          const ClusterAssignment& assignment);

std::optional<double> mean_pairwise_similarity(std::span<const std::string> selection, const Corpus& corpus);
double mean_similarity_to(std::span<const std::string> selection, const Corpus& corpus, const Embedding& query);

/// Distinct clusters hit, summed over concepts (clusters are per concept).
std::size_t cluster_coverage(const RetrievalResult& result);

struct LambdaPoint {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

/// Cartesian product, lambda1 outer. Either list empty gives an empty grid.
std::vector<LambdaPoint> make_grid(std::span<const double> lambda1s, std::span<const double> lambda2s);

struct SweepRow {
    LambdaPoint point;
    double objective = 0.0;
    std::optional<double> mean_pairwise_similarity;
    std::size_t cluster_coverage = 0;
    std::vector<std::string> picks;
};

/// Re-selects every concept of `base` at each grid point. Prefiltering,
/// safety and clustering do not depend on the lambdas and are reused. Rows
/// come back in grid order.
std::vector<SweepRow> sweep(const RetrievalResult& base, const Corpus& corpus, std::size_t n,
                            std::span<const LambdaPoint> grid);

/// Header: lambda1,lambda2,objective,mean_pairwise_sim,cluster_coverage,picks
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
nlohmann::json sweep_to_json(std::span<const SweepRow> rows);
nlohmann::json to_json(const EvalReport& report);

struct InstanceSpec {
    std::size_t size = 16;
    double lambda1 = 7.0;
    double lambda2 = 1.0;
    /// Draw prompt similarities from [0, 1] instead of [-1, 1].
    bool nonnegative_similarities = true;
};

/// Random objective instance: uniform similarities and rewards in [0, 1]
/// (similarities in [-1, 1] unless nonnegative), and a random partition into
/// between 1 and `size` clusters. Ids are "v00", "v01", ...
ObjectiveContext random_context(Rng& rng, const InstanceSpec& spec);

/// Describes what the embedding-space metrics stand in for.
nlohmann::json metric_notes();

}  // namespace divret
