#include "cli.hpp"

#include "divret/clustering.hpp"
#include "divret/corpus.hpp"
#include "divret/error.hpp"
#include "divret/eval.hpp"
#include "divret/objective.hpp"
#include "divret/optimizer.hpp"
#include "divret/pipeline.hpp"
#include "divret/providers.hpp"
#include "divret/random.hpp"
#include "divret/stable_json.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <memory>
#include <ostream>
#include <sstream>

namespace divret::cli {
namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::string corpus;
    std::string prompt;
    double lambda1 = 7.0;
    double lambda2 = 1.0;
    std::size_t top_m = 200;
    std::size_t select_n = 8;
    double tau = 0.85;
    std::size_t min_cluster_size = 3;
    std::string clusters = "leader";
    std::string assignment;
    std::string embeddings;
    std::string embedder_url;
    std::string extractor_url;
    std::string safety_url;
    std::string deny_list;
    bool safety_fail_closed = false;
    int remote_timeout_ms = 5000;
    int remote_retries = 1;
    std::string prefilter_query = "concept";
    bool no_reward_clamp = false;
    bool include_unsafe = false;
    std::uint64_t seed = 0;
    std::string format = "json";

    // retrieve
    std::vector<std::string> concepts;
    std::size_t recipes = 4;
    // oracle
    std::size_t instances = 200;
    std::size_t ground_size = 16;
    // sweep
    std::string lambda1_grid;
    std::string lambda2_grid;
    // gen-synthetic
    std::size_t blobs = 4;
    std::size_t per_blob = 10;
    std::size_t dim = 32;
    double spread = 0.1;
    std::string out_dir;
    // eval
    std::string selection;
};

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
    }
    return out;
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split_list(s, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::logic_error&) {
            throw UsageError("invalid grid value '" + tok + "'");
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
    return buf;
}

SelectionConfig selection_config(const Options& o) {
    SelectionConfig c;
    c.lambda1 = o.lambda1;
    c.lambda2 = o.lambda2;
    c.m = o.top_m;
    c.n = o.select_n;
    c.seed = o.seed;
    c.reward_clamp = !o.no_reward_clamp;
    c.exclude_unsafe = !o.include_unsafe;
    c.prefilter_query = o.prefilter_query == "prompt" ? PrefilterQuery::by_prompt : PrefilterQuery::by_concept;
    c.clusterer.strategy = parse_cluster_strategy(o.clusters);
    c.clusterer.tau = o.tau;
    c.clusterer.min_cluster_size = o.min_cluster_size;
    if (!o.assignment.empty()) c.clusterer.assignment_path = o.assignment;
    if (c.clusterer.strategy == ClusterStrategy::file && o.assignment.empty()) {
        throw UsageError("--clusters file requires --assignment PATH");
    }
    return c;
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

/// Owns whichever provider implementations the flags select.
struct ProviderSet {
    std::unique_ptr<ConceptExtractor> extractor;
    std::unique_ptr<EmbeddingProvider> embedder;
    std::unique_ptr<SafetyChecker> safety;
    Providers view;
};

ProviderSet make_providers(const Options& o, std::ostream& err) {
    RemoteOptions remote;
    remote.timeout = std::chrono::milliseconds(o.remote_timeout_ms);
    remote.retries = o.remote_retries;
    remote.log = [&err](const std::string& line) { err << "[remote] " << line << '\n'; };

    ProviderSet p;
    if (!o.embeddings.empty() && !o.embedder_url.empty()) {
        throw UsageError("use only one of --embeddings and --embedder-url");
    }
    if (!o.embeddings.empty()) {
        p.embedder = std::make_unique<LookupEmbeddingProvider>(LookupEmbeddingProvider::from_file(o.embeddings));
    } else if (!o.embedder_url.empty()) {
        p.embedder = std::make_unique<HttpEmbeddingProvider>(o.embedder_url, remote);
    } else {
        throw UsageError("an embedding provider is required (--embeddings PATH or --embedder-url URL)");
    }

    if (!o.concepts.empty()) {
        if (!o.extractor_url.empty()) throw UsageError("use only one of --concept and --extractor-url");
        p.extractor = std::make_unique<StaticExtractor>(o.concepts);
        p.view.extractor_source = ConceptSource::manual;
    } else if (!o.extractor_url.empty()) {
        p.extractor = std::make_unique<HttpConceptExtractor>(o.extractor_url, remote);
        p.view.extractor_source = ConceptSource::extractor;
    }

    if (!o.safety_url.empty() && !o.deny_list.empty()) {
        throw UsageError("use only one of --safety-url and --deny-list");
    }
    if (!o.safety_url.empty()) {
        p.safety = std::make_unique<HttpSafetyChecker>(o.safety_url, remote);
    } else if (!o.deny_list.empty()) {
        p.safety = std::make_unique<DenyListChecker>(DenyListChecker::from_file(o.deny_list));
    }

    p.view.extractor = p.extractor.get();
    p.view.embedder = p.embedder.get();
    p.view.safety = p.safety.get();
    p.view.safety_fail_closed = o.safety_fail_closed;
    return p;
}

void emit_json(std::ostream& out, const nlohmann::json& doc) {
    out << dump_stable(doc) << '\n';
}

int run_ingest(const Options& o, std::ostream& out) {
    require(o.corpus, "--corpus");
    const auto corpus = load_corpus(o.corpus);
    const auto unsafe = std::count_if(corpus.records().begin(), corpus.records().end(),
                                      [](const AdapterRecord& r) { return r.unsafe; });
    if (o.format == "table") {
        out << corpus.size() << " records, dim " << corpus.dim() << ", " << unsafe << " flagged unsafe\n";
    } else {
        emit_json(out, {{"records", corpus.size()}, {"dim", corpus.dim()}, {"unsafe", unsafe}});
    }
    return kSuccess;
}

RetrievalResult run_pipeline(const Options& o, const Corpus& corpus, std::ostream& err) {
    require(o.prompt, "--prompt");
    auto config = selection_config(o);
    auto providers = make_providers(o, err);
    return retrieve(o.prompt, corpus, config, providers.view);
}

int run_retrieve(const Options& o, std::ostream& out, std::ostream& err) {
    require(o.corpus, "--corpus");
    require(o.prompt, "--prompt");
    const auto corpus = load_corpus(o.corpus);
    auto result = run_pipeline(o, corpus, err);
    const auto recipes = sample_combinations(result, o.recipes, o.seed, &result.warnings);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';

    if (o.format == "table") {
        for (std::size_t c = 0; c < result.concepts.size(); ++c) {
            const auto& cr = result.concepts[c];
            out << "concept " << c << " '" << cr.concept_info.text << "' (" << to_string(cr.concept_info.source) << "): "
                << cr.candidate_count << " candidates, " << cr.context.cluster_count() << " clusters\n";
            for (std::size_t i = 0; i < cr.trace.picks.size(); ++i) {
                const auto& p = cr.trace.picks[i];
                out << "  " << i + 1 << ". " << p.id << "  gain " << fmt(p.gain) << "  objective "
                    << fmt(p.running_objective) << "  cluster " << cr.context[p.position].cluster << '\n';
            }
        }
        out << "union:";
        for (const auto& id : result.union_ids()) out << ' ' << id;
        out << '\n';
        for (const auto& f : result.flagged) out << "flagged " << f.id << ": " << f.explanation << '\n';
        for (std::size_t i = 0; i < recipes.size(); ++i) {
            out << "recipe " << i + 1 << ':';
            for (const auto& e : recipes[i].entries) out << ' ' << e.id << '*' << fmt(e.weight);
            out << '\n';
        }
        return kSuccess;
    }

    auto doc = to_json(result);
    doc["recipes"] = to_json(recipes);
    doc["metadata"] = {
        {"rng", std::string(rng_identity())},
        {"config", config_to_json(selection_config(o))},
        {"union_dedupe", "an adapter picked for several concepts is kept once, at its highest-gain occurrence "
                         "(earliest concept on ties)"},
        {"combination", "one adapter drawn uniformly per concept, concepts weighted equally"},
    };
    emit_json(out, doc);
    return kSuccess;
}

int run_oracle(const Options& o, std::size_t n, std::ostream& out) {
    Rng rng(o.seed);
    InstanceSpec spec;
    spec.size = o.ground_size;
    spec.lambda1 = o.lambda1;
    spec.lambda2 = o.lambda2;
    spec.nonnegative_similarities = true;

    double min_ratio = 1.0;
    double sum_ratio = 0.0;
    std::size_t audited = 0;
    std::size_t skipped = 0;
    std::size_t below = 0;
    for (std::size_t i = 0; i < o.instances; ++i) {
        const auto ctx = random_context(rng, spec);
        const auto audit = approximation_audit(ctx, n);
        if (!audit.ratio) {
            ++skipped;
            continue;
        }
        ++audited;
        min_ratio = std::min(min_ratio, *audit.ratio);
        sum_ratio += *audit.ratio;
        if (*audit.ratio < kGreedyGuarantee - 1e-9) ++below;
    }
    const nlohmann::json mean = audited ? nlohmann::json(sum_ratio / static_cast<double>(audited)) : nlohmann::json();
    const nlohmann::json min = audited ? nlohmann::json(min_ratio) : nlohmann::json();
    if (o.format == "table") {
        out << "instances " << o.instances << " (size " << o.ground_size << ", n " << n << "), audited " << audited
            << ", skipped " << skipped << '\n';
        out << "min ratio " << (audited ? fmt(min_ratio) : "n/a") << ", mean ratio "
            << (audited ? fmt(sum_ratio / static_cast<double>(audited)) : "n/a") << ", bound " << fmt(kGreedyGuarantee)
            << ", below bound " << below << '\n';
    } else {
        emit_json(out, {
                           {"instances", o.instances},
                           {"ground_size", o.ground_size},
                           {"n", n},
                           {"lambda1", o.lambda1},
                           {"lambda2", o.lambda2},
                           {"seed", o.seed},
                           {"audited", audited},
                           {"skipped", skipped},
                           {"min_ratio", min},
                           {"mean_ratio", mean},
                           {"bound", kGreedyGuarantee},
                           {"below_bound", below},
                       });
    }
    return below == 0 ? kSuccess : kInvalidInput;
}

int run_sweep(const Options& o, bool l1_given, bool l2_given, std::ostream& out, std::ostream& err) {
    require(o.corpus, "--corpus");
    require(o.prompt, "--prompt");
    const auto l1 = l1_given ? parse_grid(o.lambda1_grid) : std::vector<double>{o.lambda1};
    const auto l2 = l2_given ? parse_grid(o.lambda2_grid) : std::vector<double>{o.lambda2};
    const auto grid = make_grid(l1, l2);

    std::vector<SweepRow> rows;
    if (!grid.empty()) {
        const auto corpus = load_corpus(o.corpus);
        const auto base = run_pipeline(o, corpus, err);
        for (const auto& w : base.warnings) err << "warning: " << w << '\n';
        rows = sweep(base, corpus, o.select_n, grid);
    }
    if (o.format == "table") {
        write_sweep_csv(out, rows);
    } else {
        emit_json(out, {{"metrics", metric_notes()}, {"config", config_to_json(selection_config(o))},
                        {"rows", sweep_to_json(rows)}});
    }
    return kSuccess;
}

int run_gen_synthetic(const Options& o, std::ostream& out) {
    require(o.out_dir, "--out");
    SyntheticSpec spec;
    spec.blob_count = o.blobs;
    spec.per_blob = o.per_blob;
    spec.dim = o.dim;
    spec.intra_spread = o.spread;
    spec.seed = o.seed;
    const auto data = generate_synthetic(spec);
    write_synthetic(data, o.out_dir);
    if (o.format == "table") {
        out << "wrote " << data.corpus.size() << " records in " << spec.blob_count << " blobs to " << o.out_dir << '\n';
    } else {
        emit_json(out, {
                           {"records", data.corpus.size()},
                           {"blobs", spec.blob_count},
                           {"dim", spec.dim},
                           {"seed", spec.seed},
                           {"rng", std::string(rng_identity())},
                           {"files", {"corpus.jsonl", "labels.json", "embeddings.json"}},
                       });
    }
    return kSuccess;
}

int run_eval(const Options& o, std::ostream& out) {
    require(o.corpus, "--corpus");
    require(o.selection, "--selection");
    const auto corpus = load_corpus(o.corpus);
    const auto ids = split_list(o.selection, ',');
    if (ids.empty()) throw UsageError("--selection lists no ids");
    std::vector<Candidate> candidates;
    for (const auto& id : ids) candidates.push_back({corpus.index_of(id), 0.0});

    auto config = selection_config(o);
    Warnings warnings;
    const auto assignment = cluster_candidates(corpus, candidates, config.clusterer, &warnings);
    const auto report = eval_selection(ids, corpus, assignment);
    if (o.format == "table") {
        out << "selection " << report.selection_size << ", mean pairwise similarity "
            << (report.mean_pairwise_similarity ? fmt(*report.mean_pairwise_similarity) : "undefined")
            << ", cluster coverage " << report.cluster_coverage << '\n';
    } else {
        auto doc = to_json(report);
        doc["metrics"] = metric_notes();
        doc["config"] = config_to_json(config);
        emit_json(out, doc);
    }
    return kSuccess;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Relevance- and diversity-aware adapter retrieval"};
    app.name("divret");
    app.set_config("--config", "", "flat key=value file mirroring the long flags; command-line flags win");
    app.require_subcommand(1);

    app.add_option("--corpus", o.corpus, "corpus JSONL file");
    app.add_option("--prompt", o.prompt, "user prompt");
    app.add_option("--lambda1", o.lambda1, "relevance weight")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--lambda2", o.lambda2, "diversity weight")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--top-m", o.top_m, "prefilter size per concept")->capture_default_str()->check(CLI::PositiveNumber);
    auto* select_n = app.add_option("--select-n", o.select_n, "adapters selected per concept")
                         ->capture_default_str()
                         ->check(CLI::PositiveNumber);
    app.add_option("--tau", o.tau, "leader clustering cosine threshold")->capture_default_str();
    app.add_option("--min-cluster-size", o.min_cluster_size, "smaller clusters become singletons")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--clusters", o.clusters, "clustering strategy")
        ->capture_default_str()
        ->check(CLI::IsMember({"leader", "file"}));
    app.add_option("--assignment", o.assignment, "cluster assignment JSON (id -> label, -1 = noise)");
    app.add_option("--embeddings", o.embeddings, "embedding lookup JSON (text -> vector)");
    app.add_option("--embedder-url", o.embedder_url, "embedding service base URL (POST /embed)");
    app.add_option("--extractor-url", o.extractor_url, "concept extractor base URL (POST /extract)");
    app.add_option("--safety-url", o.safety_url, "safety checker base URL (POST /safety)");
    app.add_option("--deny-list", o.deny_list, "offline safety deny-list, one term per line");
    app.add_flag("--safety-fail-closed", o.safety_fail_closed, "abort when the safety checker is unreachable");
    app.add_option("--remote-timeout-ms", o.remote_timeout_ms, "per-request timeout")->capture_default_str();
    app.add_option("--remote-retries", o.remote_retries, "retries after a failed request")->capture_default_str();
    app.add_option("--prefilter-query", o.prefilter_query, "embedding used for the top-m prefilter")
        ->capture_default_str()
        ->check(CLI::IsMember({"concept", "prompt"}));
    app.add_flag("--no-reward-clamp", o.no_reward_clamp, "treat negative concept similarity as an error");
    app.add_flag("--include-unsafe", o.include_unsafe, "keep records marked unsafe in the corpus");
    app.add_option("--seed", o.seed, "seed for every randomized step")->capture_default_str();
    app.add_option("--format", o.format, "output format")->capture_default_str()->check(CLI::IsMember({"json", "table"}));

    auto* ingest = app.add_subcommand("ingest", "validate a corpus file")->fallthrough();

    auto* retrieve_cmd = app.add_subcommand("retrieve", "run the full retrieval pipeline")->fallthrough();
    retrieve_cmd->add_option("--concept", o.concepts, "manual concept (repeatable); skips the extractor");
    retrieve_cmd->add_option("--recipes", o.recipes, "combination recipes to sample")->capture_default_str();

    auto* oracle = app.add_subcommand("oracle", "audit greedy against the exhaustive optimum")->fallthrough();
    oracle->add_option("--instances", o.instances, "random instances")->capture_default_str();
    oracle->add_option("--ground-size", o.ground_size, "candidates per instance")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, kOracleMaxCandidates));

    auto* sweep_cmd = app.add_subcommand("sweep", "re-run selection over a lambda grid")->fallthrough();
    auto* l1_grid = sweep_cmd->add_option("--lambda1-grid", o.lambda1_grid, "comma-separated lambda1 values");
    auto* l2_grid = sweep_cmd->add_option("--lambda2-grid", o.lambda2_grid, "comma-separated lambda2 values");

    auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic blob corpus")->fallthrough();
    gen->add_option("--blobs", o.blobs, "blob count")->capture_default_str();
    gen->add_option("--per-blob", o.per_blob, "records per blob")->capture_default_str();
    gen->add_option("--dim", o.dim, "embedding dimension")->capture_default_str();
    gen->add_option("--spread", o.spread, "intra-blob noise scale")->capture_default_str();
    gen->add_option("--out", o.out_dir, "output directory");

    auto* eval_cmd = app.add_subcommand("eval", "diversity metrics for a selection")->fallthrough();
    eval_cmd->add_option("--selection", o.selection, "comma-separated adapter ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return kUsage;
    }

    const auto usage = [&](const std::string& msg) {
        err << "error: " << msg << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kUsage;
    };

    try {
        if (ingest->parsed()) return run_ingest(o, out);
        if (retrieve_cmd->parsed()) return run_retrieve(o, out, err);
        if (oracle->parsed()) {
            const std::size_t n = select_n->count() > 0 ? o.select_n : 4;
            return run_oracle(o, n, out);
        }
        if (sweep_cmd->parsed()) return run_sweep(o, l1_grid->count() > 0, l2_grid->count() > 0, out, err);
        if (gen->parsed()) return run_gen_synthetic(o, out);
        if (eval_cmd->parsed()) return run_eval(o, out);
        return usage("no subcommand given");
    } catch (const UsageError& e) {
        return usage(e.what());
    } catch (const RemoteError& e) {
        err << "remote failure: " << e.what() << '\n';
        return kRemoteFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    }
}

}  // namespace divret::cli
