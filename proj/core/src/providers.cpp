#include "divret/providers.hpp"

#include "divret/stable_json.hpp"

#include <httplib.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace divret {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool contains_icase(std::string_view haystack, std::string_view needle) {
    return ascii_lower(haystack).find(ascii_lower(needle)) != std::string::npos;
}

std::string request_hash(std::string_view body) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : body) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<ExtractedConcept> FallbackExtractor::extract(std::string_view prompt) {
    return {{std::string(prompt), "whole prompt"}};
}

StaticExtractor::StaticExtractor(std::vector<std::string> keywords) : keywords_(std::move(keywords)) {}

std::vector<ExtractedConcept> StaticExtractor::extract(std::string_view) {
    std::vector<ExtractedConcept> out;
    for (const auto& k : keywords_) out.push_back({k, "manual"});
    return out;
}

LookupEmbeddingProvider::LookupEmbeddingProvider(std::map<std::string, std::vector<double>, std::less<>> table)
    : table_(std::move(table)) {}

LookupEmbeddingProvider LookupEmbeddingProvider::from_json(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("embedding lookup: malformed JSON (") + e.what() + ")");
    }
    if (!doc.is_object()) throw ValidationError("embedding lookup: expected a JSON object of text -> array");
    std::map<std::string, std::vector<double>, std::less<>> table;
    for (const auto& [text, vec] : doc.items()) {
        if (!vec.is_array()) throw ValidationError("embedding lookup: entry '" + text + "' is not an array");
        std::vector<double> values;
        for (const auto& x : vec) {
            if (!x.is_number()) throw ValidationError("embedding lookup: entry '" + text + "' has a non-number");
            values.push_back(x.get<double>());
        }
        table.emplace(text, std::move(values));
    }
    return LookupEmbeddingProvider(std::move(table));
}

LookupEmbeddingProvider LookupEmbeddingProvider::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open embedding lookup file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::vector<double> LookupEmbeddingProvider::embed(std::string_view text) {
    const auto it = table_.find(text);
    if (it == table_.end()) throw ValidationError("embedding lookup: no vector for text '" + std::string(text) + "'");
    return it->second;
}

DenyListChecker::DenyListChecker(std::vector<std::string> terms) {
    for (auto& t : terms) {
        if (!t.empty()) terms_.push_back(ascii_lower(t));
    }
}

DenyListChecker DenyListChecker::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open deny-list file '" + path.string() + "'");
    std::vector<std::string> terms;
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r");
        terms.push_back(line.substr(b, e - b + 1));
    }
    return DenyListChecker(std::move(terms));
}

std::vector<SafetyFlag> DenyListChecker::check(std::string_view prompt, std::string_view,
                                               std::span<const AdapterRecord* const> adapters) {
    std::vector<std::string> active;
    for (const auto& t : terms_) {
        if (!contains_icase(prompt, t)) active.push_back(t);
    }
    std::vector<SafetyFlag> flags;
    for (const auto* a : adapters) {
        for (const auto& t : active) {
            std::string where;
            if (contains_icase(a->description, t)) {
                where = "description";
            } else {
                for (const auto& tag : a->tags) {
                    if (contains_icase(tag, t)) {
                        where = "tag '" + tag + "'";
                        break;
                    }
                }
            }
            if (!where.empty()) {
                flags.push_back({a->id, where + " matches deny-listed term '" + t + "'"});
                break;
            }
        }
    }
    return flags;
}

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix + route
};

Endpoint split_url(const std::string& base, std::string_view route) {
    const auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) throw RemoteError("invalid service URL '" + base + "' (missing scheme)");
    if (base.compare(0, scheme_end, "http") != 0) {
        throw RemoteError("unsupported scheme in service URL '" + base + "' (only http is built in)");
    }
    const auto path_begin = base.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = base.substr(0, path_begin);
    std::string prefix = path_begin == std::string::npos ? "" : base.substr(path_begin);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    ep.path = prefix + std::string(route);
    return ep;
}

nlohmann::json post_json(const std::string& base, std::string_view route, const nlohmann::json& request,
                         const RemoteOptions& options) {
    const auto ep = split_url(base, route);
    const std::string body = dump_stable(request, 17);
    const std::string tag = request_hash(body);
    httplib::Client client(ep.origin);
    const auto ms = options.timeout.count();
    client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
    client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);
    client.set_write_timeout(ms / 1000, (ms % 1000) * 1000);

    std::string last_error;
    const int attempts = 1 + std::max(0, options.retries);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post(ep.path, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP status " + std::to_string(res->status);
        } else {
            if (options.log) {
                options.log("remote " + ep.origin + ep.path + " request " + tag + " attempt " + std::to_string(attempt) +
                            " ok");
            }
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw RemoteError(ep.origin + ep.path + ": malformed JSON response (" + e.what() + ")");
            }
        }
        if (options.log) {
            options.log("remote " + ep.origin + ep.path + " request " + tag + " attempt " + std::to_string(attempt) +
                        " failed: " + last_error);
        }
    }
    throw RemoteError(ep.origin + ep.path + ": " + last_error);
}

std::string string_field(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string()) {
        throw RemoteError(where + ": response entry lacks string '" + key + "'");
    }
    return obj[key].get<std::string>();
}

}  // namespace

HttpConceptExtractor::HttpConceptExtractor(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(std::move(options)) {}

std::vector<ExtractedConcept> HttpConceptExtractor::extract(std::string_view prompt) {
    const auto res = post_json(base_url_, "/extract", {{"prompt", std::string(prompt)}}, options_);
    if (!res.is_object() || !res.contains("concepts") || !res["concepts"].is_array()) {
        throw RemoteError("concept extractor: response lacks a 'concepts' array");
    }
    std::vector<ExtractedConcept> out;
    for (const auto& c : res["concepts"]) {
        ExtractedConcept ec;
        ec.keyword = string_field(c, "keyword", "concept extractor");
        if (c.contains("explanation") && c["explanation"].is_string()) ec.explanation = c["explanation"].get<std::string>();
        out.push_back(std::move(ec));
    }
    return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(std::move(options)) {}

std::vector<double> HttpEmbeddingProvider::embed(std::string_view text) {
    const auto res = post_json(base_url_, "/embed", {{"text", std::string(text)}}, options_);
    if (!res.is_object() || !res.contains("embedding") || !res["embedding"].is_array()) {
        throw RemoteError("embedding provider: response lacks an 'embedding' array");
    }
    std::vector<double> values;
    for (const auto& x : res["embedding"]) {
        if (!x.is_number()) throw RemoteError("embedding provider: non-numeric coordinate in response");
        values.push_back(x.get<double>());
    }
    return values;
}

HttpSafetyChecker::HttpSafetyChecker(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(std::move(options)) {}

std::vector<SafetyFlag> HttpSafetyChecker::check(std::string_view prompt, std::string_view keyword,
                                                 std::span<const AdapterRecord* const> adapters) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto* a : adapters) list.push_back({{"id", a->id}, {"description", a->description}});
    const nlohmann::json request{{"prompt", std::string(prompt)}, {"keyword", std::string(keyword)}, {"adapters", list}};
    const auto res = post_json(base_url_, "/safety", request, options_);
    if (!res.is_object() || !res.contains("flagged") || !res["flagged"].is_array()) {
        throw RemoteError("safety checker: response lacks a 'flagged' array");
    }
    std::vector<SafetyFlag> out;
    for (const auto& f : res["flagged"]) {
        SafetyFlag flag;
        flag.id = string_field(f, "id", "safety checker");
        if (f.contains("explanation") && f["explanation"].is_string()) flag.explanation = f["explanation"].get<std::string>();
        out.push_back(std::move(flag));
    }
    return out;
}

}  // namespace divret
