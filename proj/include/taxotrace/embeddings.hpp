#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace taxotrace {

struct Proxy {
    std::string word;
    double cosine = 0.0;

    friend bool operator==(const Proxy&, const Proxy&) = default;
};

/// Immutable word -> vector table answering cosine and nearest-neighbour
/// queries by exhaustive scan.
class EmbeddingStore {
public:
    EmbeddingStore() = default;

    /// Rejects dimension mismatches, duplicate words and zero-norm vectors.
    static EmbeddingStore from_rows(std::size_t dimension,
                                    std::vector<std::pair<std::string, std::vector<double>>> rows);

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return words_.size(); }
    bool empty() const { return words_.empty(); }
    bool contains(std::string_view word) const;
    const std::vector<std::string>& words() const { return words_; }
    std::span<const double> vector_of(std::string_view word) const;

    /// Throws Error(NotFound) naming the missing word.
    double cosine(std::string_view a, std::string_view b) const;

    /// The k most similar words other than `word`, by descending cosine and
    /// then word. Returns fewer than k when the vocabulary is smaller.
    std::vector<Proxy> top_k_proxies(std::string_view word, std::size_t k = 10) const;

private:
    std::size_t index_of(std::string_view word) const;
    double cosine_at(std::size_t a, std::size_t b) const;

    std::size_t dimension_ = 0;
    std::vector<std::string> words_;
    std::vector<double> values_;  // row-major, words_.size() x dimension_
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> by_word_;
};

/// Plain-text word2vec interchange format: "<count> <dimension>" header, then
/// one "<word> <c1> ... <cd>" row per word.
EmbeddingStore load_embeddings(std::istream& in, std::string_view source_name = "<input>");
EmbeddingStore load_embeddings_file(const std::filesystem::path& path);

}  // namespace taxotrace
