#include "divret/pipeline.hpp"

#include "divret/clustering.hpp"
#include "divret/random.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace divret {

std::string_view to_string(ConceptSource s) {
    switch (s) {
    case ConceptSource::extractor: return "extractor";
    case ConceptSource::fallback: return "fallback";
    case ConceptSource::manual: return "manual";
    }
    return "unknown";
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ConceptExtraction extract_concepts(std::string_view prompt, ConceptExtractor& extractor, ConceptSource on_success,
                                   Warnings* warnings) {
    if (trim(prompt).empty()) throw PreconditionError("extract_concepts: prompt is empty");
    const auto warn = [&](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };
    const auto fallback = [&] { return ConceptExtraction{{std::string(prompt)}, ConceptSource::fallback}; };

    std::vector<ExtractedConcept> raw;
    try {
        raw = extractor.extract(prompt);
    } catch (const RemoteError& e) {
        warn(std::string("concept extractor failed, using the whole prompt: ") + e.what());
        return fallback();
    }

    ConceptExtraction out{{}, on_success};
    std::set<std::string> seen;
    for (const auto& c : raw) {
        auto text = trim(c.keyword);
        if (text.empty()) continue;
        if (!contains_icase(prompt, text)) {
            warn("dropped concept '" + text + "': not a substring of the prompt");
            continue;
        }
        if (!seen.insert(ascii_lower(text)).second) continue;
        out.concepts.push_back(std::move(text));
    }
    if (out.concepts.empty()) {
        warn("concept extractor returned no usable concept, using the whole prompt");
        return fallback();
    }
    return out;
}

Embedding embed_text(std::string_view text, EmbeddingProvider& provider, std::size_t dim) {
    if (text.empty()) throw PreconditionError("embed_text: text is empty");
    auto values = provider.embed(text);
    if (values.size() != dim) {
        throw ValidationError("embedding for '" + std::string(text) + "' has dimension " + std::to_string(values.size()) +
                              ", corpus dimension is " + std::to_string(dim));
    }
    try {
        return Embedding(std::move(values));
    } catch (const ValidationError& e) {
        throw ValidationError("embedding for '" + std::string(text) + "': " + e.what());
    }
}

SafetyOutcome safety_filter(const Corpus& corpus, std::span<const Candidate> candidates, std::string_view prompt,
                            std::string_view keyword, SafetyChecker* checker, bool fail_closed, Warnings* warnings) {
    SafetyOutcome out;
    if (!checker || candidates.empty()) {
        out.kept.assign(candidates.begin(), candidates.end());
        return out;
    }
    std::vector<const AdapterRecord*> adapters;
    adapters.reserve(candidates.size());
    for (const auto& c : candidates) adapters.push_back(&corpus[c.index]);

    std::vector<SafetyFlag> flags;
    try {
        flags = checker->check(prompt, keyword, adapters);
    } catch (const RemoteError& e) {
        if (fail_closed) throw;
        if (warnings) warnings->push_back(std::string("safety checker failed, keeping all candidates: ") + e.what());
        out.kept.assign(candidates.begin(), candidates.end());
        return out;
    }

    std::unordered_map<std::string_view, std::size_t> flag_of;
    for (std::size_t i = 0; i < flags.size(); ++i) flag_of.emplace(flags[i].id, i);
    std::unordered_set<std::string_view> matched;
    for (const auto& c : candidates) {
        const auto& id = corpus[c.index].id;
        if (const auto it = flag_of.find(id); it != flag_of.end()) {
            if (matched.insert(id).second) out.flagged.push_back(flags[it->second]);
        } else {
            out.kept.push_back(c);
        }
    }
    if (matched.size() < flag_of.size() && warnings) {
        warnings->push_back("safety checker flagged " + std::to_string(flag_of.size() - matched.size()) +
                            " id(s) that were not candidates; ignored");
    }
    return out;
}

std::vector<std::string> RetrievalResult::union_ids() const {
    std::vector<std::string> ids;
    ids.reserve(union_entries.size());
    for (const auto& e : union_entries) ids.push_back(e.id);
    return ids;
}

std::vector<UnionEntry> merge_picks(const std::vector<std::vector<std::pair<std::string, double>>>& picks,
                                    const std::vector<std::string>& excluded) {
    struct Best {
        std::size_t concept_index;
        std::size_t rank;
        double gain;
    };
    const std::unordered_set<std::string> banned(excluded.begin(), excluded.end());
    std::unordered_map<std::string, Best> best;
    for (std::size_t c = 0; c < picks.size(); ++c) {
        for (std::size_t r = 0; r < picks[c].size(); ++r) {
            const auto& [id, gain] = picks[c][r];
            if (banned.count(id)) continue;
            const auto [it, fresh] = best.emplace(id, Best{c, r, gain});
            if (!fresh && gain > it->second.gain) it->second = {c, r, gain};
        }
    }
    std::vector<UnionEntry> out;
    for (std::size_t c = 0; c < picks.size(); ++c) {
        for (std::size_t r = 0; r < picks[c].size(); ++r) {
            const auto& id = picks[c][r].first;
            const auto it = best.find(id);
            if (it != best.end() && it->second.concept_index == c && it->second.rank == r) {
                out.push_back({id, c, it->second.gain});
            }
        }
    }
    return out;
}

RetrievalResult retrieve(std::string_view prompt, const Corpus& corpus, const SelectionConfig& config,
                         const Providers& providers) {
    config.validate();
    if (!providers.embedder) throw PreconditionError("retrieve: an embedding provider is required");
    if (corpus.empty()) throw ValidationError("retrieve: corpus is empty");

    RetrievalResult result;
    result.prompt = std::string(prompt);
    auto& warnings = result.warnings;

    FallbackExtractor whole_prompt;
    ConceptExtractor& extractor = providers.extractor ? *providers.extractor : whole_prompt;
    auto extraction = extract_concepts(prompt, extractor,
                                       providers.extractor ? providers.extractor_source : ConceptSource::fallback,
                                       &warnings);

    std::map<std::string, Embedding, std::less<>> embedded;
    const auto embed = [&](const std::string& text) -> const Embedding& {
        auto it = embedded.find(text);
        if (it == embedded.end()) it = embedded.emplace(text, embed_text(text, *providers.embedder, corpus.dim())).first;
        return it->second;
    };
    const Embedding prompt_embedding = embed(result.prompt);

    std::vector<std::vector<std::pair<std::string, double>>> picks;
    for (const auto& text : extraction.concepts) {
        ConceptResult cr;
        cr.concept_info = {text, embed(text), extraction.source};
        const auto& query = config.prefilter_query == PrefilterQuery::by_concept ? cr.concept_info.embedding : prompt_embedding;

        const auto shortlist = prefilter_top_m(corpus, query, config.m, config.exclude_unsafe);
        auto safety = safety_filter(corpus, shortlist, prompt, text, providers.safety, providers.safety_fail_closed,
                                    &warnings);
        for (auto& f : safety.flagged) {
            result.flagged.push_back({std::move(f.id), result.concepts.size(), std::move(f.explanation)});
        }
        cr.candidate_count = safety.kept.size();
        if (safety.kept.empty()) {
            warnings.push_back("concept '" + text + "': no candidate survived prefiltering and safety checks");
        } else {
            const auto assignment = cluster_candidates(corpus, safety.kept, config.clusterer, &warnings);
            cr.context = build_context(corpus, safety.kept, prompt_embedding, cr.concept_info.embedding, assignment, config);
            cr.trace = lazy_greedy_select(cr.context, config.n);
        }
        std::vector<std::pair<std::string, double>> concept_picks;
        for (const auto& p : cr.trace.picks) concept_picks.emplace_back(p.id, p.gain);
        picks.push_back(std::move(concept_picks));
        result.concepts.push_back(std::move(cr));
    }

    std::vector<std::string> excluded;
    for (const auto& f : result.flagged) excluded.push_back(f.id);
    result.union_entries = merge_picks(picks, excluded);
    if (result.union_entries.empty()) warnings.push_back("retrieval produced no adapters");
    return result;
}

std::vector<CombinationRecipe> sample_combinations(const RetrievalResult& result, std::size_t count,
                                                   std::uint64_t seed, Warnings* warnings) {
    std::unordered_set<std::string> banned;
    for (const auto& f : result.flagged) banned.insert(f.id);

    std::vector<std::pair<std::size_t, std::vector<std::string>>> pools;
    for (std::size_t c = 0; c < result.concepts.size(); ++c) {
        std::vector<std::string> pool;
        for (const auto& p : result.concepts[c].trace.picks) {
            if (!banned.count(p.id)) pool.push_back(p.id);
        }
        if (pool.empty()) {
            if (warnings) {
                warnings->push_back("concept '" + result.concepts[c].concept_info.text + "' has no picks; left out of recipes");
            }
            continue;
        }
        pools.emplace_back(c, std::move(pool));
    }
    std::vector<CombinationRecipe> recipes;
    if (pools.empty()) return recipes;

    Rng rng(seed);
    const double weight = 1.0 / static_cast<double>(pools.size());
    recipes.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        CombinationRecipe recipe;
        for (const auto& [concept_index, pool] : pools) {
            const auto& id = pool[rng.uniform_index(pool.size())];
            const auto it = std::find_if(recipe.entries.begin(), recipe.entries.end(),
                                         [&](const RecipeEntry& e) { return e.id == id; });
            if (it != recipe.entries.end()) {
                it->weight += weight;
                it->concept_indices.push_back(concept_index);
            } else {
                recipe.entries.push_back({id, weight, {concept_index}});
            }
        }
        recipes.push_back(std::move(recipe));
    }
    return recipes;
}

nlohmann::json config_to_json(const SelectionConfig& config) {
    nlohmann::json clusterer{
        {"strategy", std::string(to_string(config.clusterer.strategy))},
        {"min_cluster_size", config.clusterer.min_cluster_size},
    };
    if (config.clusterer.strategy == ClusterStrategy::leader) clusterer["tau"] = config.clusterer.tau;
    if (config.clusterer.assignment_path) clusterer["assignment_path"] = config.clusterer.assignment_path->string();
    return {
        {"lambda1", config.lambda1},
        {"lambda2", config.lambda2},
        {"n", config.n},
        {"m", config.m},
        {"seed", config.seed},
        {"reward_clamp", config.reward_clamp},
        {"exclude_unsafe", config.exclude_unsafe},
        {"prefilter_query", config.prefilter_query == PrefilterQuery::by_concept ? "concept" : "prompt"},
        {"clusterer", clusterer},
    };
}

nlohmann::json to_json(const RetrievalResult& result) {
    using nlohmann::json;
    json concepts = json::array();
    for (const auto& cr : result.concepts) {
        json picks = json::array();
        for (const auto& p : cr.trace.picks) {
            picks.push_back({
                {"id", p.id},
                {"gain", p.gain},
                {"objective", p.running_objective},
                {"cluster", cr.context[p.position].cluster},
                {"prompt_similarity", cr.context[p.position].prompt_sim},
                {"reward", cr.context[p.position].reward},
            });
        }
        concepts.push_back({
            {"text", cr.concept_info.text},
            {"source", std::string(to_string(cr.concept_info.source))},
            {"candidates", cr.candidate_count},
            {"clusters", cr.context.cluster_count()},
            {"picks", picks},
            {"objective", cr.trace.objective_value},
            {"stopped_early", cr.trace.stopped_early},
        });
    }
    json union_entries = json::array();
    for (const auto& u : result.union_entries) {
        union_entries.push_back({{"id", u.id}, {"concept", u.concept_index}, {"gain", u.gain}});
    }
    json flagged = json::array();
    for (const auto& f : result.flagged) {
        flagged.push_back({{"id", f.id}, {"concept", f.concept_index}, {"explanation", f.explanation}});
    }
    return {
        {"prompt", result.prompt},
        {"concepts", concepts},
        {"union", union_entries},
        {"flagged", flagged},
        {"warnings", result.warnings},
    };
}

nlohmann::json to_json(const std::vector<CombinationRecipe>& recipes) {
    using nlohmann::json;
    json out = json::array();
    for (const auto& r : recipes) {
        json entries = json::array();
        for (const auto& e : r.entries) entries.push_back({{"id", e.id}, {"weight", e.weight}, {"concepts", e.concept_indices}});
        out.push_back({{"entries", entries}});
    }
    return out;
}

}  // namespace divret
