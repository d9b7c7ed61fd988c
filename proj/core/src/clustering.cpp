#include "divret/clustering.hpp"

#include "divret/stable_json.hpp"

#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace divret {

ClusterAssignment::ClusterAssignment(std::vector<std::string> ids, std::vector<std::size_t> labels)
    : ids_(std::move(ids)), labels_(std::move(labels)) {
    if (ids_.size() != labels_.size()) throw ValidationError("cluster assignment: ids and labels differ in length");
    if (ids_.empty()) throw ValidationError("cluster assignment: empty candidate set");
    position_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!position_.emplace(ids_[i], i).second) throw ValidationError("cluster assignment: duplicate id '" + ids_[i] + "'");
    }
    std::size_t max_label = 0;
    for (auto l : labels_) max_label = std::max(max_label, l);
    cluster_count_ = max_label + 1;
    std::vector<bool> used(cluster_count_, false);
    for (auto l : labels_) used[l] = true;
    for (std::size_t k = 0; k < cluster_count_; ++k) {
        if (!used[k]) throw ValidationError("cluster assignment: label " + std::to_string(k) + " is empty");
    }
}

std::size_t ClusterAssignment::label_of(std::string_view id) const {
    if (const auto it = position_.find(std::string(id)); it != position_.end()) return labels_[it->second];
    throw ValidationError("id '" + std::string(id) + "' is not part of the cluster assignment");
}

std::vector<std::size_t> ClusterAssignment::cluster_sizes() const {
    std::vector<std::size_t> sizes(cluster_count_, 0);
    for (auto l : labels_) ++sizes[l];
    return sizes;
}

void ClustererConfig::validate() const {
    if (min_cluster_size < 1) throw ValidationError("min_cluster_size must be at least 1");
    switch (strategy) {
    case ClusterStrategy::leader:
        if (!(tau > -1.0 && tau <= 1.0)) throw ValidationError("tau must lie in (-1, 1]");
        break;
    case ClusterStrategy::file:
        if (!assignment_path || assignment_path->empty()) {
            throw ValidationError("file clustering requires an assignment path");
        }
        break;
    }
}

std::string_view to_string(ClusterStrategy s) {
    return s == ClusterStrategy::leader ? "leader" : "file";
}

ClusterStrategy parse_cluster_strategy(std::string_view s) {
    if (s == "leader") return ClusterStrategy::leader;
    if (s == "file") return ClusterStrategy::file;
    throw ValidationError("unknown cluster strategy '" + std::string(s) + "'");
}

namespace {

// Renumbers raw group keys by first appearance; `singleton` entries each get
// their own fresh label.
std::vector<std::size_t> compact(const std::vector<long long>& raw, const std::vector<bool>& singleton) {
    std::map<long long, std::size_t> remap;
    std::vector<std::size_t> out(raw.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (singleton[i]) {
            out[i] = next++;
            continue;
        }
        const auto [it, fresh] = remap.emplace(raw[i], next);
        if (fresh) ++next;
        out[i] = it->second;
    }
    return out;
}

std::vector<std::string> ids_of(const Corpus& corpus, std::span<const Candidate> candidates) {
    std::vector<std::string> ids;
    ids.reserve(candidates.size());
    for (const auto& c : candidates) ids.push_back(corpus[c.index].id);
    return ids;
}

}  // namespace

ClusterAssignment leader_cluster(const Corpus& corpus, std::span<const Candidate> candidates, double tau,
                                 std::size_t min_cluster_size) {
    if (candidates.empty()) throw PreconditionError("leader_cluster: empty candidate list");
    std::vector<std::size_t> leaders;  // candidate positions
    std::vector<long long> group(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& emb = corpus[candidates[i].index].embedding;
        std::size_t g = 0;
        for (; g < leaders.size(); ++g) {
            if (cosine_similarity(corpus[candidates[leaders[g]].index].embedding, emb) >= tau) break;
        }
        if (g == leaders.size()) leaders.push_back(i);
        group[i] = static_cast<long long>(g);
    }
    std::vector<std::size_t> sizes(leaders.size(), 0);
    for (auto g : group) ++sizes[static_cast<std::size_t>(g)];
    std::vector<bool> singleton(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        singleton[i] = sizes[static_cast<std::size_t>(group[i])] < min_cluster_size;
    }
    return ClusterAssignment(ids_of(corpus, candidates), compact(group, singleton));
}

ClusterAssignment parse_cluster_assignment(std::string_view json_text, std::span<const std::string> candidate_ids,
                                           Warnings* warnings) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("cluster assignment: malformed JSON (") + e.what() + ")");
    }
    if (!doc.is_object()) throw ValidationError("cluster assignment: expected a JSON object of id -> label");

    std::unordered_map<std::string_view, std::size_t> position;
    for (std::size_t i = 0; i < candidate_ids.size(); ++i) position.emplace(candidate_ids[i], i);

    constexpr long long kUnset = std::numeric_limits<long long>::min();
    std::vector<long long> raw(candidate_ids.size(), kUnset);
    std::size_t ignored = 0;
    std::string ignored_example;
    for (const auto& [id, label] : doc.items()) {
        if (!label.is_number_integer()) throw ValidationError("cluster assignment: label for '" + id + "' is not an integer");
        const auto l = label.get<long long>();
        if (l < -1) throw ValidationError("cluster assignment: label for '" + id + "' is below -1");
        const auto it = position.find(id);
        if (it == position.end()) {
            if (ignored++ == 0) ignored_example = id;
            continue;
        }
        raw[it->second] = l;
    }
    if (ignored > 0 && warnings) {
        warnings->push_back("cluster assignment: ignored " + std::to_string(ignored) +
                            " id(s) not among the candidates (e.g. '" + ignored_example + "')");
    }

    std::string missing;
    std::vector<bool> singleton(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == kUnset) missing += (missing.empty() ? "" : ", ") + candidate_ids[i];
        singleton[i] = raw[i] == -1;
    }
    if (!missing.empty()) throw ValidationError("cluster assignment: unassigned candidate id(s): " + missing);
    return ClusterAssignment({candidate_ids.begin(), candidate_ids.end()}, compact(raw, singleton));
}

ClusterAssignment load_cluster_assignment(const std::filesystem::path& path, std::span<const std::string> candidate_ids,
                                          Warnings* warnings) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open cluster assignment file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cluster_assignment(buf.str(), candidate_ids, warnings);
}

ClusterAssignment cluster_candidates(const Corpus& corpus, std::span<const Candidate> candidates,
                                     const ClustererConfig& config, Warnings* warnings) {
    config.validate();
    if (candidates.empty()) throw PreconditionError("cluster_candidates: empty candidate list");
    if (config.strategy == ClusterStrategy::leader) {
        return leader_cluster(corpus, candidates, config.tau, config.min_cluster_size);
    }
    const auto ids = ids_of(corpus, candidates);
    return load_cluster_assignment(*config.assignment_path, ids, warnings);
}

}  // namespace divret
