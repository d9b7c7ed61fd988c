#include "divret/corpus.hpp"

#include "divret/error.hpp"
#include "divret/stable_json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace divret {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ValidationError("embedding is empty");
    double sq = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw ValidationError("embedding coordinate " + std::to_string(i) + " is not finite");
        }
        sq += values_[i] * values_[i];
    }
    norm_ = std::sqrt(sq);
    if (!(norm_ > 0.0) || !std::isfinite(norm_)) throw ValidationError("embedding has zero norm");
}

double cosine_similarity(const Embedding& u, const Embedding& v) {
    if (u.dim() != v.dim()) {
        throw ValidationError("cosine_similarity: dimension mismatch (" + std::to_string(u.dim()) + " vs " +
                              std::to_string(v.dim()) + ")");
    }
    const auto a = u.values();
    const auto b = v.values();
    const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    return std::clamp(dot / (u.norm() * v.norm()), -1.0, 1.0);
}

Corpus::Corpus(std::vector<AdapterRecord> records) : records_(std::move(records)) {
    by_id_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.id.empty()) throw ValidationError("record " + std::to_string(i) + " has an empty id");
        if (r.embedding.dim() == 0) throw ValidationError("record '" + r.id + "' has no embedding");
        if (i == 0) dim_ = r.embedding.dim();
        if (r.embedding.dim() != dim_) {
            throw ValidationError("record '" + r.id + "': dimension mismatch (expected " + std::to_string(dim_) +
                                  ", got " + std::to_string(r.embedding.dim()) + ")");
        }
        if (!by_id_.emplace(r.id, i).second) throw ValidationError("duplicate id '" + r.id + "'");
    }
}

std::size_t Corpus::find(std::string_view id) const {
    const auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? npos : it->second;
}

std::size_t Corpus::index_of(std::string_view id) const {
    const auto i = find(id);
    if (i == npos) throw ValidationError("unknown adapter id '" + std::string(id) + "'");
    return i;
}

namespace {

std::string required_string(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw ValidationError(where + ": missing or non-string '" + key + "'");
    }
    return it->get<std::string>();
}

AdapterRecord parse_record(const nlohmann::json& obj, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + ": expected a JSON object");
    AdapterRecord rec;
    rec.id = required_string(obj, "id", where);
    if (rec.id.empty()) throw ValidationError(where + ": empty id");
    const std::string at = where + " (id '" + rec.id + "')";
    rec.name = required_string(obj, "name", at);
    rec.description = required_string(obj, "description", at);

    const auto tags = obj.find("tags");
    if (tags == obj.end() || !tags->is_array()) throw ValidationError(at + ": missing or non-array 'tags'");
    for (const auto& t : *tags) {
        if (!t.is_string()) throw ValidationError(at + ": non-string tag");
        rec.tags.push_back(t.get<std::string>());
    }

    const auto emb = obj.find("embedding");
    if (emb == obj.end() || !emb->is_array()) throw ValidationError(at + ": missing or non-array 'embedding'");
    std::vector<double> values;
    values.reserve(emb->size());
    for (const auto& x : *emb) {
        if (!x.is_number()) throw ValidationError(at + ": non-numeric embedding coordinate");
        values.push_back(x.get<double>());
    }
    try {
        rec.embedding = Embedding(std::move(values));
    } catch (const ValidationError& e) {
        throw ValidationError(at + ": " + e.what());
    }

    if (const auto unsafe = obj.find("unsafe"); unsafe != obj.end()) {
        if (!unsafe->is_boolean()) throw ValidationError(at + ": 'unsafe' must be a boolean");
        rec.unsafe = unsafe->get<bool>();
    }
    return rec;
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
    std::vector<AdapterRecord> records;
    std::unordered_map<std::string, std::size_t> first_line;
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(where + ": malformed JSON (" + e.what() + ")");
        }
        auto rec = parse_record(obj, where);
        if (const auto [it, fresh] = first_line.emplace(rec.id, line_no); !fresh) {
            throw ValidationError(where + ": duplicate id '" + rec.id + "' (first seen on line " +
                                  std::to_string(it->second) + ")");
        }
        if (records.empty()) dim = rec.embedding.dim();
        if (rec.embedding.dim() != dim) {
            throw ValidationError(where + " (id '" + rec.id + "'): dimension mismatch (expected " +
                                  std::to_string(dim) + ", got " + std::to_string(rec.embedding.dim()) + ")");
        }
        records.push_back(std::move(rec));
    }
    return Corpus(std::move(records));
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file '" + path.string() + "'");
    return parse_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& r : corpus.records()) {
        nlohmann::json obj{
            {"id", r.id},
            {"name", r.name},
            {"description", r.description},
            {"tags", r.tags},
            {"embedding", std::vector<double>(r.embedding.values().begin(), r.embedding.values().end())},
        };
        if (r.unsafe) obj["unsafe"] = true;
        out << dump_stable(obj, 17) << '\n';
    }
}

std::vector<Candidate> prefilter_top_m(const Corpus& corpus, const Embedding& query, std::size_t m,
                                       bool exclude_unsafe) {
    if (m == 0) throw PreconditionError("prefilter_top_m: m must be at least 1");
    if (query.dim() != corpus.dim() && !corpus.empty()) {
        throw ValidationError("prefilter_top_m: query dimension " + std::to_string(query.dim()) +
                              " does not match corpus dimension " + std::to_string(corpus.dim()));
    }
    std::vector<Candidate> all;
    all.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (exclude_unsafe && corpus[i].unsafe) continue;
        all.push_back({i, cosine_similarity(corpus[i].embedding, query)});
    }
    const auto by_relevance = [](const Candidate& a, const Candidate& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.index < b.index;
    };
    const auto keep = std::min(m, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), by_relevance);
    all.resize(keep);
    return all;
}

}  // namespace divret
