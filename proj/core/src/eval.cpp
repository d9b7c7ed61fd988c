#include "divret/eval.hpp"

#include "divret/error.hpp"
#include "divret/random.hpp"
#include "divret/stable_json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <ostream>
#include <set>

namespace divret {

void SyntheticSpec::validate() const {
    if (blob_count < 1 || per_blob < 1) throw ValidationError("synthetic spec: need at least one record");
    if (dim < 1) throw ValidationError("synthetic spec: dim must be positive");
    if (!(intra_spread > 0.0) || !std::isfinite(intra_spread)) {
        throw ValidationError("synthetic spec: intra_spread must be finite and > 0");
    }
}

namespace {

std::vector<double> unit_gaussian(Rng& rng, std::size_t dim) {
    for (;;) {
        std::vector<double> v(dim);
        double sq = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            sq += x * x;
        }
        if (sq > 0.0) {
            const double inv = 1.0 / std::sqrt(sq);
            for (auto& x : v) x *= inv;
            return v;
        }
    }
}

std::vector<double> normalized(std::vector<double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : v) x *= inv;
    return v;
}

std::string blob_id(std::size_t blob, std::size_t item) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "b%zu-%03zu", blob, item);
    return buf;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticData data;
    for (std::size_t k = 0; k < spec.blob_count; ++k) data.centers.emplace_back(unit_gaussian(rng, spec.dim));

    const double sigma = spec.intra_spread / std::sqrt(static_cast<double>(spec.dim));
    std::vector<AdapterRecord> records;
    for (std::size_t k = 0; k < spec.blob_count; ++k) {
        const auto center = data.centers[k].values();
        for (std::size_t i = 0; i < spec.per_blob; ++i) {
            std::vector<double> v(center.begin(), center.end());
            for (auto& x : v) x += sigma * rng.normal();
            AdapterRecord rec;
            rec.id = blob_id(k, i);
            rec.name = "synthetic " + rec.id;
            rec.description = "synthetic adapter " + std::to_string(i) + " of blob " + std::to_string(k);
            rec.tags = {"synthetic", "blob-" + std::to_string(k)};
            rec.embedding = Embedding(normalized(std::move(v)));
            records.push_back(std::move(rec));
            data.labels.push_back(k);
        }
    }
    data.corpus = Corpus(std::move(records));
    return data;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "corpus.jsonl", std::ios::binary);
        if (!out) throw ValidationError("cannot write " + (dir / "corpus.jsonl").string());
        write_corpus(out, data.corpus);
    }
    {
        nlohmann::json labels = nlohmann::json::object();
        for (std::size_t i = 0; i < data.corpus.size(); ++i) labels[data.corpus[i].id] = data.labels[i];
        std::ofstream out(dir / "labels.json", std::ios::binary);
        out << dump_stable(labels) << '\n';
    }
    {
        nlohmann::json table = nlohmann::json::object();
        std::vector<double> mean(data.corpus.dim(), 0.0);
        for (std::size_t k = 0; k < data.centers.size(); ++k) {
            const auto c = data.centers[k].values();
            table["blob-" + std::to_string(k)] = std::vector<double>(c.begin(), c.end());
            for (std::size_t d = 0; d < c.size(); ++d) mean[d] += c[d];
        }
        double sq = 0.0;
        for (double x : mean) sq += x * x;
        if (sq > 0.0) table["all blobs"] = normalized(mean);
        std::ofstream out(dir / "embeddings.json", std::ios::binary);
        out << dump_stable(table, 17) << '\n';
    }
}

std::optional<double> mean_pairwise_similarity(std::span<const std::string> selection, const Corpus& corpus) {
    std::vector<const Embedding*> embs;
    for (const auto& id : selection) embs.push_back(&corpus[corpus.index_of(id)].embedding);
    if (embs.size() < 2) return std::nullopt;
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < embs.size(); ++i) {
        for (std::size_t j = i + 1; j < embs.size(); ++j) {
            total += cosine_similarity(*embs[i], *embs[j]);
            ++pairs;
        }
    }
    return std::clamp(total / static_cast<double>(pairs), -1.0, 1.0);
}

double mean_similarity_to(std::span<const std::string> selection, const Corpus& corpus, const Embedding& query) {
    if (selection.empty()) throw PreconditionError("mean_similarity_to: empty selection");
    double total = 0.0;
    for (const auto& id : selection) total += cosine_similarity(corpus[corpus.index_of(id)].embedding, query);
    return total / static_cast<double>(selection.size());
}

EvalReport eval_selection(std::span<const std::string> selection, const Corpus& corpus,
                          const ClusterAssignment& assignment) {
    EvalReport report;
    report.selection_size = selection.size();
    report.mean_pairwise_similarity = mean_pairwise_similarity(selection, corpus);
    std::set<std::size_t> hit;
    for (const auto& id : selection) hit.insert(assignment.label_of(id));
    report.cluster_coverage = hit.size();
    return report;
}

std::size_t cluster_coverage(const RetrievalResult& result) {
    std::size_t total = 0;
    for (const auto& cr : result.concepts) {
        std::set<std::size_t> hit;
        for (const auto& p : cr.trace.picks) hit.insert(cr.context[p.position].cluster);
        total += hit.size();
    }
    return total;
}

std::vector<LambdaPoint> make_grid(std::span<const double> lambda1s, std::span<const double> lambda2s) {
    std::vector<LambdaPoint> grid;
    for (double l1 : lambda1s) {
        for (double l2 : lambda2s) grid.push_back({l1, l2});
    }
    return grid;
}

namespace {

SweepRow sweep_point(const RetrievalResult& base, const Corpus& corpus, std::size_t n, LambdaPoint point) {
    RetrievalResult variant;
    variant.prompt = base.prompt;
    variant.flagged = base.flagged;
    std::vector<std::vector<std::pair<std::string, double>>> picks;
    SweepRow row;
    row.point = point;
    for (const auto& cr : base.concepts) {
        ConceptResult copy;
        copy.concept_info = cr.concept_info;
        copy.candidate_count = cr.candidate_count;
        if (!cr.context.empty()) {
            copy.context = cr.context.with_lambdas(point.lambda1, point.lambda2);
            copy.trace = lazy_greedy_select(copy.context, n);
        }
        row.objective += copy.trace.objective_value;
        std::vector<std::pair<std::string, double>> concept_picks;
        for (const auto& p : copy.trace.picks) concept_picks.emplace_back(p.id, p.gain);
        picks.push_back(std::move(concept_picks));
        variant.concepts.push_back(std::move(copy));
    }
    std::vector<std::string> excluded;
    for (const auto& f : base.flagged) excluded.push_back(f.id);
    variant.union_entries = merge_picks(picks, excluded);
    row.picks = variant.union_ids();
    row.mean_pairwise_similarity = mean_pairwise_similarity(row.picks, corpus);
    row.cluster_coverage = cluster_coverage(variant);
    return row;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
    return buf;
}

}  // namespace

std::vector<SweepRow> sweep(const RetrievalResult& base, const Corpus& corpus, std::size_t n,
                            std::span<const LambdaPoint> grid) {
    for (const auto& p : grid) {
        if (!std::isfinite(p.lambda1) || p.lambda1 < 0.0 || !std::isfinite(p.lambda2) || p.lambda2 < 0.0) {
            throw ValidationError("sweep: grid lambdas must be finite and >= 0");
        }
    }
    std::vector<std::future<SweepRow>> pending;
    pending.reserve(grid.size());
    for (const auto& p : grid) {
        pending.push_back(std::async(std::launch::async, sweep_point, std::cref(base), std::cref(corpus), n, p));
    }
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (auto& f : pending) rows.push_back(f.get());
    return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "lambda1,lambda2,objective,mean_pairwise_sim,cluster_coverage,picks\n";
    for (const auto& r : rows) {
        out << format_double(r.point.lambda1) << ',' << format_double(r.point.lambda2) << ','
            << format_double(r.objective) << ','
            << (r.mean_pairwise_similarity ? format_double(*r.mean_pairwise_similarity) : std::string()) << ','
            << r.cluster_coverage << ',';
        for (std::size_t i = 0; i < r.picks.size(); ++i) out << (i ? ";" : "") << r.picks[i];
        out << '\n';
    }
}

nlohmann::json sweep_to_json(std::span<const SweepRow> rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back({
            {"lambda1", r.point.lambda1},
            {"lambda2", r.point.lambda2},
            {"objective", r.objective},
            {"mean_pairwise_sim", r.mean_pairwise_similarity ? nlohmann::json(*r.mean_pairwise_similarity) : nlohmann::json()},
            {"cluster_coverage", r.cluster_coverage},
            {"picks", r.picks},
        });
    }
    return out;
}

nlohmann::json to_json(const EvalReport& report) {
    return {
        {"selection_size", report.selection_size},
        {"mean_pairwise_sim",
         report.mean_pairwise_similarity ? nlohmann::json(*report.mean_pairwise_similarity) : nlohmann::json()},
        {"cluster_coverage", report.cluster_coverage},
        {"objective", report.objective_value ? nlohmann::json(*report.objective_value) : nlohmann::json()},
    };
}

ObjectiveContext random_context(Rng& rng, const InstanceSpec& spec) {
    if (spec.size < 1) throw PreconditionError("random_context: size must be positive");
    const auto clusters = static_cast<std::size_t>(rng.uniform_index(spec.size)) + 1;
    std::vector<std::size_t> raw(spec.size);
    for (auto& l : raw) l = static_cast<std::size_t>(rng.uniform_index(clusters));
    // Compact to contiguous labels by first appearance.
    std::vector<std::size_t> remap(clusters, spec.size);
    std::size_t next = 0;
    std::vector<ObjectiveContext::Item> items(spec.size);
    for (std::size_t i = 0; i < spec.size; ++i) {
        if (remap[raw[i]] == spec.size) remap[raw[i]] = next++;
        char id[32];
        std::snprintf(id, sizeof id, "v%02zu", i);
        auto& it = items[i];
        it.id = id;
        it.ingest_index = i;
        const double u = rng.uniform01();
        it.prompt_sim = spec.nonnegative_similarities ? u : 2.0 * u - 1.0;
        it.reward = rng.uniform01();
        it.cluster = remap[raw[i]];
    }
    return ObjectiveContext(std::move(items), next, spec.lambda1, spec.lambda2);
}

nlohmann::json metric_notes() {
    return {
        {"mean_pairwise_sim",
         "mean cosine similarity over unordered pairs of selected adapter embeddings; an embedding-space stand-in "
         "for pairwise image-to-image similarity (lower is more diverse)"},
        {"cluster_coverage",
         "number of distinct clusters hit by the selection, summed over concepts; stands in for the per-cluster "
         "selection histogram"},
    };
}

}  // namespace divret
