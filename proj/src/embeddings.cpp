#include "taxotrace/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "taxotrace/error.hpp"

namespace taxotrace {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const auto start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

EmbeddingStore EmbeddingStore::from_rows(std::size_t dimension,
                                         std::vector<std::pair<std::string, std::vector<double>>> rows) {
    if (dimension == 0) throw Error(ErrorKind::Validation, "embedding dimension must be positive");
    EmbeddingStore store;
    store.dimension_ = dimension;
    store.words_.reserve(rows.size());
    store.values_.reserve(rows.size() * dimension);
    for (auto& [word, values] : rows) {
        if (values.size() != dimension) {
            throw Error(ErrorKind::Validation, "dimension mismatch for word '" + word + "': expected " +
                                                   std::to_string(dimension) + " components, got " +
                                                   std::to_string(values.size()));
        }
        double squared = 0.0;
        for (double v : values) squared += v * v;
        const double norm = std::sqrt(squared);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw Error(ErrorKind::Validation, "zero-norm or non-finite vector for word '" + word + "'");
        }
        if (!store.by_word_.emplace(word, store.words_.size()).second) {
            throw Error(ErrorKind::Validation, "duplicate word '" + word + "'");
        }
        store.words_.push_back(std::move(word));
        store.values_.insert(store.values_.end(), values.begin(), values.end());
        store.norms_.push_back(norm);
    }
    return store;
}

bool EmbeddingStore::contains(std::string_view word) const {
    return by_word_.count(std::string(word)) > 0;
}

std::size_t EmbeddingStore::index_of(std::string_view word) const {
    const auto it = by_word_.find(std::string(word));
    if (it == by_word_.end()) {
        throw Error(ErrorKind::NotFound, "word '" + std::string(word) + "' is not in the embedding vocabulary");
    }
    return it->second;
}

std::span<const double> EmbeddingStore::vector_of(std::string_view word) const {
    return std::span<const double>(values_).subspan(index_of(word) * dimension_, dimension_);
}

double EmbeddingStore::cosine_at(std::size_t a, std::size_t b) const {
    const double* va = values_.data() + a * dimension_;
    const double* vb = values_.data() + b * dimension_;
    double dot = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) dot += va[i] * vb[i];
    return std::clamp(dot / (norms_[a] * norms_[b]), -1.0, 1.0);
}

double EmbeddingStore::cosine(std::string_view a, std::string_view b) const {
    return cosine_at(index_of(a), index_of(b));
}

std::vector<Proxy> EmbeddingStore::top_k_proxies(std::string_view word, std::size_t k) const {
    if (k < 1) throw Error(ErrorKind::Precondition, "k must be >= 1");
    const auto query = index_of(word);
    std::vector<Proxy> all;
    all.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (i != query) all.push_back({words_[i], cosine_at(query, i)});
    }
    const auto by_rank = [](const Proxy& a, const Proxy& b) {
        if (a.cosine != b.cosine) return a.cosine > b.cosine;
        return a.word < b.word;
    };
    const auto keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), by_rank);
    all.resize(keep);
    return all;
}

EmbeddingStore load_embeddings(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    std::string line;
    std::size_t line_no = 0;

    std::size_t expected_count = 0;
    std::size_t dimension = 0;
    bool have_header = false;
    std::vector<std::pair<std::string, std::vector<double>>> rows;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        const auto where = source + ":" + std::to_string(line_no);
        if (!have_header) {
            if (fields.size() != 2 || !parse_number(fields[0], expected_count) ||
                !parse_number(fields[1], dimension) || dimension == 0) {
                throw Error(ErrorKind::Parse, where + ": malformed header, expected \"<word-count> <dimension>\"");
            }
            have_header = true;
            continue;
        }
        if (fields.size() - 1 != dimension) {
            throw Error(ErrorKind::Parse, where + ": dimension mismatch for word '" + std::string(fields[0]) +
                                              "': expected " + std::to_string(dimension) + " components, got " +
                                              std::to_string(fields.size() - 1));
        }
        std::vector<double> values(dimension);
        for (std::size_t i = 0; i < dimension; ++i) {
            if (!parse_number(fields[i + 1], values[i])) {
                throw Error(ErrorKind::Parse, where + ": bad number '" + std::string(fields[i + 1]) + "'");
            }
        }
        rows.emplace_back(std::string(fields[0]), std::move(values));
    }
    if (!have_header) throw Error(ErrorKind::Parse, source + ": missing header line");
    if (rows.size() != expected_count) {
        throw Error(ErrorKind::Parse, source + ": header announces " + std::to_string(expected_count) +
                                          " words but " + std::to_string(rows.size()) + " rows follow");
    }
    try {
        return EmbeddingStore::from_rows(dimension, std::move(rows));
    } catch (const Error& e) {
        throw Error(e.kind(), source + ": " + e.what());
    }
}

EmbeddingStore load_embeddings_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open embedding file " + path.string());
    return load_embeddings(in, path.string());
}

}  // namespace taxotrace
