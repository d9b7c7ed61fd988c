#include "divret/objective.hpp"

#include "divret/error.hpp"

#include <cmath>

namespace divret {

namespace {

void check_lambdas(double lambda1, double lambda2) {
    if (!std::isfinite(lambda1) || lambda1 < 0.0) throw ValidationError("lambda1 must be finite and >= 0");
    if (!std::isfinite(lambda2) || lambda2 < 0.0) throw ValidationError("lambda2 must be finite and >= 0");
}

// Validates a subset of positions and returns its membership mask.
std::vector<bool> membership(const ObjectiveContext& ctx, std::span<const std::size_t> subset) {
    std::vector<bool> in(ctx.size(), false);
    for (auto p : subset) {
        if (p >= ctx.size()) throw ValidationError("subset position " + std::to_string(p) + " is out of range");
        if (in[p]) throw ValidationError("subset lists '" + ctx[p].id + "' twice");
        in[p] = true;
    }
    return in;
}

}  // namespace

void SelectionConfig::validate() const {
    check_lambdas(lambda1, lambda2);
    if (n < 1) throw ValidationError("selection size n must be at least 1");
    if (m < 1) throw ValidationError("prefilter size m must be at least 1");
    if (n > m) throw ValidationError("selection size n must not exceed prefilter size m");
    clusterer.validate();
}

ObjectiveContext::ObjectiveContext(std::vector<Item> items, std::size_t cluster_count, double lambda1, double lambda2)
    : items_(std::move(items)), cluster_count_(cluster_count), lambda1_(lambda1), lambda2_(lambda2) {
    check_lambdas(lambda1_, lambda2_);
    position_.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const auto& it = items_[i];
        if (!position_.emplace(it.id, i).second) throw ValidationError("objective context: duplicate id '" + it.id + "'");
        if (!std::isfinite(it.reward) || it.reward < 0.0) {
            throw ValidationError("objective context: reward of '" + it.id + "' must be finite and >= 0");
        }
        if (!(it.prompt_sim >= -1.0 && it.prompt_sim <= 1.0)) {
            throw ValidationError("objective context: prompt similarity of '" + it.id + "' outside [-1, 1]");
        }
        if (it.cluster >= cluster_count_) {
            throw ValidationError("objective context: cluster of '" + it.id + "' out of range");
        }
    }
}

ObjectiveContext ObjectiveContext::with_lambdas(double lambda1, double lambda2) const {
    return ObjectiveContext(items_, cluster_count_, lambda1, lambda2);
}

std::size_t ObjectiveContext::position_of(std::string_view id) const {
    const auto it = position_.find(std::string(id));
    if (it == position_.end()) throw ValidationError("unknown candidate id '" + std::string(id) + "'");
    return it->second;
}

std::vector<std::size_t> ObjectiveContext::positions_of(std::span<const std::string> ids) const {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(position_of(id));
    return out;
}

ObjectiveContext build_context(const Corpus& corpus, std::span<const Candidate> candidates,
                               const Embedding& prompt_embedding, const Embedding& concept_embedding,
                               const ClusterAssignment& assignment, const SelectionConfig& config) {
    if (assignment.size() != candidates.size()) {
        throw ValidationError("build_context: cluster assignment covers " + std::to_string(assignment.size()) +
                              " ids but there are " + std::to_string(candidates.size()) + " candidates");
    }
    std::vector<ObjectiveContext::Item> items;
    items.reserve(candidates.size());
    for (const auto& c : candidates) {
        const auto& rec = corpus[c.index];
        ObjectiveContext::Item item;
        item.id = rec.id;
        item.ingest_index = c.index;
        item.prompt_sim = cosine_similarity(rec.embedding, prompt_embedding);
        const double concept_sim = cosine_similarity(rec.embedding, concept_embedding);
        if (concept_sim < 0.0 && !config.reward_clamp) {
            throw ValidationError("build_context: candidate '" + rec.id +
                                  "' has a negative concept similarity and reward clamping is off");
        }
        item.reward = concept_sim < 0.0 ? 0.0 : concept_sim;
        item.cluster = assignment.label_of(rec.id);
        items.push_back(std::move(item));
    }
    return ObjectiveContext(std::move(items), assignment.cluster_count(), config.lambda1, config.lambda2);
}

double relevance(const ObjectiveContext& ctx, std::span<const std::size_t> subset) {
    membership(ctx, subset);
    double total = 0.0;
    for (auto p : subset) total += ctx[p].prompt_sim;
    return total;
}

double diversity(const ObjectiveContext& ctx, std::span<const std::size_t> subset) {
    membership(ctx, subset);
    std::vector<double> sums(ctx.cluster_count(), 0.0);
    for (auto p : subset) sums[ctx[p].cluster] += ctx[p].reward;
    double total = 0.0;
    for (double s : sums) total += std::log(1.0 + s);
    return total;
}

double objective(const ObjectiveContext& ctx, std::span<const std::size_t> subset) {
    return ctx.lambda1() * relevance(ctx, subset) + ctx.lambda2() * diversity(ctx, subset);
}

double relevance(const ObjectiveContext& ctx, std::span<const std::string> ids) {
    return relevance(ctx, ctx.positions_of(ids));
}
double diversity(const ObjectiveContext& ctx, std::span<const std::string> ids) {
    return diversity(ctx, ctx.positions_of(ids));
}
double objective(const ObjectiveContext& ctx, std::span<const std::string> ids) {
    return objective(ctx, ctx.positions_of(ids));
}

double saturated_gain(double cluster_sum, double reward) {
    return std::log1p(reward / (1.0 + cluster_sum));
}

SelectionState::SelectionState(const ObjectiveContext& ctx)
    : ctx_(&ctx), selected_(ctx.size(), false), cluster_sums_(ctx.cluster_count(), 0.0) {}

SelectionState::SelectionState(const ObjectiveContext& ctx, std::span<const std::size_t> subset)
    : SelectionState(ctx) {
    selected_ = membership(ctx, subset);
    for (auto p : subset) cluster_sums_[ctx[p].cluster] += ctx[p].reward;
    count_ = subset.size();
}

GainParts SelectionState::gain_parts(std::size_t pos) const {
    if (pos >= selected_.size()) throw ValidationError("candidate position " + std::to_string(pos) + " is out of range");
    const auto& item = (*ctx_)[pos];
    if (selected_[pos]) throw PreconditionError("'" + item.id + "' is already selected");
    return {item.prompt_sim, saturated_gain(cluster_sums_[item.cluster], item.reward)};
}

double SelectionState::gain(std::size_t pos) const {
    const auto parts = gain_parts(pos);
    return ctx_->lambda1() * parts.relevance + ctx_->lambda2() * parts.diversity;
}

double SelectionState::add(std::size_t pos) {
    const double g = gain(pos);
    selected_[pos] = true;
    cluster_sums_[(*ctx_)[pos].cluster] += (*ctx_)[pos].reward;
    ++count_;
    return g;
}

double marginal_gain(const SelectionState& state, std::size_t v) {
    return state.gain(v);
}

double marginal_gain(const ObjectiveContext& ctx, std::span<const std::size_t> subset, std::size_t v) {
    return SelectionState(ctx, subset).gain(v);
}

}  // namespace divret
