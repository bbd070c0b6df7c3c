#include "taxotrace/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "taxotrace/error.hpp"

namespace taxotrace {

void RecommenderConfig::validate() const {
    if (k_proxies < 1) throw Error(ErrorKind::Validation, "k_proxies must be >= 1");
    if (rejection_threshold < 1) throw Error(ErrorKind::Validation, "rejection_threshold must be >= 1");
    if (weights.exact < 0 || weights.similarity < 0 || weights.history < 0) {
        throw Error(ErrorKind::Validation, "predictor weights must be non-negative");
    }
    const double sum = weights.exact + weights.similarity + weights.history;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorKind::Validation, "predictor weights must sum to 1");
    }
    if (!(min_proxy_cosine >= 0.0 && min_proxy_cosine < 1.0)) {
        throw Error(ErrorKind::Validation, "min_proxy_cosine must lie in [0, 1)");
    }
}

double p_exact(std::size_t f_noun) {
    if (f_noun == 0) throw Error(ErrorKind::Precondition, "exact match predictor needs f_noun >= 1");
    return 1.0 / static_cast<double>(f_noun);
}

double p_similarity(double cosine, std::size_t f_proxy, SimilarityMode mode, double min_cosine) {
    if (f_proxy == 0) throw Error(ErrorKind::Precondition, "similarity predictor needs f_proxy >= 1");
    if (!(cosine > std::max(0.0, min_cosine))) {
        throw Error(ErrorKind::Precondition, "proxy cosine must exceed the minimum proxy cosine");
    }
    const auto f = static_cast<double>(f_proxy);
    return mode == SimilarityMode::ProseConsistent ? cosine / f : 1.0 / (f * cosine);
}

Component p_history(const PairCounts& counts, const std::optional<AssociationBounds>& bounds,
                    std::size_t f_noun, const RecommenderConfig& config) {
    if (f_noun == 0) throw Error(ErrorKind::Precondition, "history predictor needs f_noun >= 1");
    if (counts.rejects >= config.rejection_threshold) return Component::suppressed();
    if (counts.accepts == 0) return Component::of(0.0);
    if (!bounds || counts.accepts < bounds->min || counts.accepts > bounds->max) {
        throw Error(ErrorKind::Precondition, "f_assoc lies outside the association bounds");
    }
    double scaled = 1.0;
    if (bounds->max != bounds->min) {
        scaled = static_cast<double>(counts.accepts - bounds->min) /
                 static_cast<double>(bounds->max - bounds->min);
    }
    return Component::of(scaled / static_cast<double>(f_noun));
}

Component p_history(std::string_view stem, std::string_view code, const HistoryStore& history,
                    std::size_t f_noun, const RecommenderConfig& config) {
    return p_history(history.counts(stem, code), history.bounds(), f_noun, config);
}

Component combine_confidence(const Component& exact, const Component& similarity, const Component& history,
                             const PredictorWeights& weights) {
    if (exact.is_suppressed() || similarity.is_suppressed() || history.is_suppressed()) {
        return Component::suppressed();
    }
    if (!exact.present() && !similarity.present() && !history.present()) {
        throw Error(ErrorKind::Precondition, "confidence needs at least one predictor score");
    }
    return Component::of(weights.exact * exact.value + weights.similarity * similarity.value +
                         weights.history * history.value);
}

Recommender::Recommender(const NounIndex& index, const EmbeddingStore* embeddings, RecommenderConfig config)
    : index_(index), embeddings_(embeddings), config_(config), vocabulary_(index.vocabulary()) {
    config_.validate();
    index_.analyzer().validate();
    if (embeddings_ != nullptr) {
        for (const auto& word : embeddings_->words()) vocabulary_.insert(text::stem(word, index_.analyzer()));
    }
}

std::vector<text::NounOccurrence> Recommender::nouns(std::string_view text) const {
    return text::analyze(text, index_.analyzer(), vocabulary_);
}

std::optional<std::string> Recommender::embedding_word(const text::NounOccurrence& occurrence) const {
    for (const auto& candidate : {text::fold_case(occurrence.surface), occurrence.stem, occurrence.surface}) {
        if (embeddings_->contains(candidate)) return candidate;
    }
    return std::nullopt;
}

std::vector<Suggestion> Recommender::suggest(const Requirement& requirement, const HistoryStore& history) const {
    const auto bounds = history.bounds();
    std::vector<Suggestion> out;

    for (const auto& occurrence : nouns(requirement.text)) {
        std::map<std::string, Suggestion> candidates;
        const auto exact = index_.lookup(occurrence.stem);
        const auto candidate_for = [&](const std::string& code) -> Suggestion& {
            auto [it, inserted] = candidates.try_emplace(code);
            if (inserted) {
                it->second.requirement_id = requirement.id;
                it->second.occurrence = occurrence;
                it->second.code = code;
                it->second.f_noun = exact.f_noun;
            }
            return it->second;
        };

        for (const auto& code : exact.codes) candidate_for(code).p_exact = Component::of(p_exact(exact.f_noun));

        if (embeddings_ != nullptr) {
            if (const auto word = embedding_word(occurrence)) {
                const double floor = std::max(0.0, config_.min_proxy_cosine);
                for (const auto& proxy : embeddings_->top_k_proxies(*word, config_.k_proxies)) {
                    if (!(proxy.cosine > floor)) break;  // sorted descending
                    const auto proxy_stem = text::stem(proxy.word, index_.analyzer());
                    if (proxy_stem == occurrence.stem) continue;
                    const auto hit = index_.lookup(proxy_stem);
                    if (hit.f_noun == 0) continue;
                    const double score =
                        p_similarity(proxy.cosine, hit.f_noun, config_.similarity_mode, config_.min_proxy_cosine);
                    for (const auto& code : hit.codes) {
                        auto& suggestion = candidate_for(code);
                        if (!suggestion.p_similarity.present() || score > suggestion.p_similarity.value) {
                            suggestion.p_similarity = Component::of(score);
                            suggestion.similarity = SimilarityHit{proxy.word, proxy.cosine, hit.f_noun};
                        }
                    }
                }
            }
        }

        for (auto& [code, suggestion] : candidates) {
            const auto counts = history.counts(occurrence.stem, code);
            if (counts.rejects >= config_.rejection_threshold) continue;
            if (suggestion.f_noun >= 1 && history.contains(occurrence.stem, code)) {
                suggestion.p_history = p_history(counts, bounds, suggestion.f_noun, config_);
            }
            const auto confidence = combine_confidence(suggestion.p_exact, suggestion.p_similarity,
                                                       suggestion.p_history, config_.weights);
            if (confidence.is_suppressed()) continue;
            suggestion.confidence = confidence.value;
            out.push_back(std::move(suggestion));
        }
    }

    std::stable_sort(out.begin(), out.end(), [](const Suggestion& a, const Suggestion& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.code != b.code) return a.code < b.code;
        return a.occurrence.span.begin < b.occurrence.span.begin;
    });
    return out;
}

}  // namespace taxotrace
