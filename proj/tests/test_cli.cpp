#include "cli.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using divret::test::data_path;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "divret");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = divret::cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> fixture_retrieve(bool deny_list = true) {
    std::vector<std::string> args{"retrieve",
                                  "--corpus", data_path("fixture_corpus.jsonl").string(),
                                  "--embeddings", data_path("fixture_embeddings.json").string(),
                                  "--prompt", "a red sports car on a mountain road",
                                  "--concept", "red sports car",
                                  "--concept", "mountain road",
                                  "--select-n", "3"};
    if (deny_list) args.insert(args.end(), {"--deny-list", data_path("deny_list.txt").string()});
    args.insert(args.end(), {"--seed", "11"});
    return args;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("divret_cli_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Cli, MissingCorpusIsUsageError) {
    const auto r = run({"retrieve", "--prompt", "x"});
    EXPECT_EQ(r.code, divret::cli::kUsage);
    EXPECT_NE(r.err.find("--corpus"), std::string::npos);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, NoSubcommandOrUnknownFlagIsUsageError) {
    EXPECT_EQ(run({}).code, divret::cli::kUsage);
    EXPECT_EQ(run({"retrieve", "--bogus"}).code, divret::cli::kUsage);
    EXPECT_EQ(run({"ingest", "--format", "xml"}).code, divret::cli::kUsage);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, IngestValidatesCorpus) {
    const auto ok = run({"ingest", "--corpus", data_path("fixture_corpus.jsonl").string()});
    ASSERT_EQ(ok.code, 0) << ok.err;
    const auto j = nlohmann::json::parse(ok.out);
    EXPECT_EQ(j["records"], 12);
    EXPECT_EQ(j["unsafe"], 1);

    const auto dir = scratch("ingest");
    std::ofstream(dir / "bad.jsonl") << R"({"id":"a","name":"n","description":"d","tags":[],"embedding":[0,0]})" "\n";
    const auto bad = run({"ingest", "--corpus", (dir / "bad.jsonl").string()});
    EXPECT_EQ(bad.code, divret::cli::kInvalidInput);
    EXPECT_NE(bad.err.find("line 1"), std::string::npos);
    EXPECT_EQ(run({"ingest", "--corpus", (dir / "missing.jsonl").string()}).code, divret::cli::kInvalidInput);
    std::filesystem::remove_all(dir);
}

TEST(Cli, RetrieveIsByteIdentical) {
    const auto a = run(fixture_retrieve());
    const auto b = run(fixture_retrieve());
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const auto j = nlohmann::json::parse(a.out);
    EXPECT_EQ(j["metadata"]["rng"], "mt19937_64/v1");
    EXPECT_EQ(j["concepts"].size(), 2u);
    EXPECT_EQ(j["recipes"].size(), 4u);
    for (const auto& e : j["union"]) EXPECT_NE(e["id"], "car-nsfw");

    auto other_seed = fixture_retrieve();
    other_seed.back() = "12";
    EXPECT_EQ(run(other_seed).code, 0);

    auto table = fixture_retrieve();
    table.push_back("--format");
    table.push_back("table");
    const auto t = run(table);
    ASSERT_EQ(t.code, 0);
    EXPECT_NE(t.out.find("union:"), std::string::npos);
}

TEST(Cli, RetrieveInputErrors) {
    auto args = fixture_retrieve();
    args.push_back("--top-m");
    args.push_back("2");
    EXPECT_EQ(run(args).code, divret::cli::kInvalidInput);

    const auto no_embedder = run({"retrieve", "--corpus", data_path("fixture_corpus.jsonl").string(), "--prompt", "x"});
    EXPECT_EQ(no_embedder.code, divret::cli::kUsage);

    const auto unknown_text = run({"retrieve", "--corpus", data_path("fixture_corpus.jsonl").string(), "--embeddings",
                                   data_path("fixture_embeddings.json").string(), "--prompt", "never embedded"});
    EXPECT_EQ(unknown_text.code, divret::cli::kInvalidInput);
}

TEST(Cli, RemoteFailureExitCode) {
    auto args = fixture_retrieve(false);
    args.insert(args.end(), {"--safety-url", "http://127.0.0.1:9", "--safety-fail-closed",
                             "--remote-timeout-ms", "300", "--remote-retries", "0"});
    EXPECT_EQ(run(args).code, divret::cli::kRemoteFailure);

    auto open = fixture_retrieve(false);
    open.insert(open.end(), {"--safety-url", "http://127.0.0.1:9", "--remote-timeout-ms", "300",
                             "--remote-retries", "0"});
    const auto r = run(open);
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST(Cli, OracleReportsMinimumRatio) {
    const auto r = run({"oracle", "--instances", "30", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["n"], 4);
    EXPECT_EQ(j["audited"], 30);
    EXPECT_GE(j["min_ratio"].get<double>(), 0.632);
    EXPECT_EQ(j["below_bound"], 0);
}

TEST(Cli, SweepCsvAndEmptyGrid) {
    const std::vector<std::string> base{"sweep",
                                        "--corpus", data_path("two_blob_corpus.jsonl").string(),
                                        "--embeddings", data_path("two_blob_embeddings.json").string(),
                                        "--prompt", "a picture in blob style",
                                        "--select-n", "4"};
    auto csv = base;
    csv.insert(csv.end(), {"--lambda2-grid", "0,1", "--format", "table"});
    const auto r = run(csv);
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "lambda1,lambda2,objective,mean_pairwise_sim,cluster_coverage,picks");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 2);

    auto empty = base;
    empty.insert(empty.end(), {"--lambda1-grid", ""});
    const auto e = run(empty);
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_TRUE(nlohmann::json::parse(e.out)["rows"].empty());

    auto bad = base;
    bad.insert(bad.end(), {"--lambda1-grid", "1,x"});
    EXPECT_EQ(run(bad).code, divret::cli::kUsage);
}

TEST(Cli, ConfigFileWithCommandLineOverride) {
    const auto dir = scratch("config");
    std::ofstream(dir / "run.ini") << "corpus=" << data_path("two_blob_corpus.jsonl").string() << "\n"
                                   << "embeddings=" << data_path("two_blob_embeddings.json").string() << "\n"
                                   << "prompt=\"a picture in blob style\"\n"
                                   << "select-n=2\n"
                                   << "lambda2=5\n";
    const auto from_file = run({"--config", (dir / "run.ini").string(), "retrieve"});
    ASSERT_EQ(from_file.code, 0) << from_file.err;
    const auto j = nlohmann::json::parse(from_file.out);
    EXPECT_EQ(j["metadata"]["config"]["n"], 2);
    EXPECT_EQ(j["metadata"]["config"]["lambda2"], 5.0);

    const auto overridden = run({"--config", (dir / "run.ini").string(), "retrieve", "--lambda2", "0.5"});
    ASSERT_EQ(overridden.code, 0) << overridden.err;
    EXPECT_EQ(nlohmann::json::parse(overridden.out)["metadata"]["config"]["lambda2"], 0.5);
    std::filesystem::remove_all(dir);
}

TEST(Cli, GenSyntheticAndEval) {
    const auto dir = scratch("synth");
    const auto g = run({"gen-synthetic", "--out", dir.string(), "--blobs", "3", "--per-blob", "4", "--dim", "8"});
    ASSERT_EQ(g.code, 0) << g.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "corpus.jsonl"));
    const auto first = run({"ingest", "--corpus", (dir / "corpus.jsonl").string()});
    EXPECT_EQ(nlohmann::json::parse(first.out)["records"], 12);

    const auto e = run({"eval", "--corpus", (dir / "corpus.jsonl").string(), "--selection", "b0-000,b1-000,b1-001",
                        "--clusters", "file", "--assignment", (dir / "labels.json").string()});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(nlohmann::json::parse(e.out)["cluster_coverage"], 2);

    const auto missing = run({"eval", "--corpus", (dir / "corpus.jsonl").string(), "--selection", "nope"});
    EXPECT_EQ(missing.code, divret::cli::kInvalidInput);
    std::filesystem::remove_all(dir);
}
