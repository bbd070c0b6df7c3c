#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taxotrace/embeddings.hpp"
#include "taxotrace/history.hpp"
#include "taxotrace/requirement.hpp"
#include "taxotrace/taxonomy.hpp"
#include "taxotrace/textproc.hpp"

namespace taxotrace {

enum class SimilarityMode {
    ProseConsistent,  // cos / f_proxy
    Literal,          // 1 / (f_proxy * cos), can leave (0, 1]
};

struct PredictorWeights {
    double exact = 1.0 / 3.0;
    double similarity = 1.0 / 3.0;
    double history = 1.0 / 3.0;
};

struct RecommenderConfig {
    std::size_t k_proxies = 10;
    std::uint64_t rejection_threshold = 5;
    SimilarityMode similarity_mode = SimilarityMode::ProseConsistent;
    PredictorWeights weights;
    double min_proxy_cosine = 0.0;  // exclusive

    /// Weights non-negative and summing to 1 (within 1e-9), k and the
    /// rejection threshold positive.
    void validate() const;
};

/// A predictor slot: not fired, a score, or the -infinity of a suppressed
/// association.
struct Component {
    enum class State { Absent, Present, Suppressed };

    State state = State::Absent;
    double value = 0.0;

    static Component absent() { return {}; }
    static Component of(double v) { return {State::Present, v}; }
    static Component suppressed() { return {State::Suppressed, 0.0}; }

    bool present() const { return state == State::Present; }
    bool is_suppressed() const { return state == State::Suppressed; }
};

/// 1 / f_noun. Throws Error(Precondition) for f_noun == 0.
double p_exact(std::size_t f_noun);

/// Throws Error(Precondition) for f_proxy == 0 or cos <= max(0, min_cosine).
double p_similarity(double cosine, std::size_t f_proxy, SimilarityMode mode, double min_cosine = 0.0);

/// Suppressed once `counts.rejects` reaches the rejection threshold.
/// Otherwise min-max scaled f_assoc divided by f_noun; degenerate bounds
/// scale to 1 and a pair with no accepted association scores 0.
Component p_history(const PairCounts& counts, const std::optional<AssociationBounds>& bounds,
                    std::size_t f_noun, const RecommenderConfig& config);
Component p_history(std::string_view stem, std::string_view code, const HistoryStore& history,
                    std::size_t f_noun, const RecommenderConfig& config);

/// Weighted mean with absent slots counting as 0. Any suppressed slot
/// suppresses the result. Throws Error(Precondition) when all are absent.
Component combine_confidence(const Component& exact, const Component& similarity, const Component& history,
                             const PredictorWeights& weights = {});

struct SimilarityHit {
    std::string proxy;
    double cosine = 0.0;
    std::size_t f_proxy = 0;
};

struct Suggestion {
    std::string requirement_id;
    text::NounOccurrence occurrence;
    std::string code;
    std::size_t f_noun = 0;
    Component p_exact;
    Component p_similarity;
    Component p_history;
    double confidence = 0.0;
    std::optional<SimilarityHit> similarity;  // which proxy produced p_similarity
};

class Recommender {
public:
    /// `embeddings` may be null, which disables the similarity predictor.
    /// Both referenced objects must outlive the recommender.
    Recommender(const NounIndex& index, const EmbeddingStore* embeddings, RecommenderConfig config = {});

    /// Union of the indexed stems and the stemmed embedding vocabulary.
    const text::Vocabulary& vocabulary() const { return vocabulary_; }
    const RecommenderConfig& config() const { return config_; }

    std::vector<text::NounOccurrence> nouns(std::string_view text) const;

    /// Ranked by confidence (descending), then code, then occurrence offset.
    /// Suppressed candidates are dropped.
    std::vector<Suggestion> suggest(const Requirement& requirement, const HistoryStore& history) const;

private:
    std::optional<std::string> embedding_word(const text::NounOccurrence& occurrence) const;

    const NounIndex& index_;
    const EmbeddingStore* embeddings_;
    RecommenderConfig config_;
    text::Vocabulary vocabulary_;
};

}  // namespace taxotrace
