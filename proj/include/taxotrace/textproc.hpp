#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

namespace taxotrace::text {

/// Set of case-folded stems that the vocabulary-gated noun strategy and the
/// decompounder accept.
using Vocabulary = std::unordered_set<std::string>;

/// Half-open byte range [begin, end) into a UTF-8 source text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
    std::string surface;
    Span span;
};

enum class StemmerKind { Identity, SuffixStripping };

enum class NounStrategy {
    VocabularyGated,  // a token is a noun candidate iff its stem is in the vocabulary
    Tagger,           // defer to a NounTagger
};

/// Hook for a real part-of-speech model. `token` is the raw surface form and
/// `span` locates it inside `text` so the tagger can look at context.
class NounTagger {
public:
    virtual ~NounTagger() = default;
    virtual bool is_noun(std::string_view text, Span span) const = 0;
};

struct AnalyzerConfig {
    std::string language = "en";
    StemmerKind stemmer = StemmerKind::SuffixStripping;
    // Suffix rules and protected endings for the suffix stripper. Filled from
    // the language defaults by `defaults_for`.
    std::vector<std::string> suffixes;
    std::vector<std::string> protected_endings;
    std::size_t min_stem_length = 3;
    std::set<std::string> stopwords;
    NounStrategy noun_strategy = NounStrategy::VocabularyGated;
    std::shared_ptr<const NounTagger> tagger;
    bool decompounding = true;
    std::vector<std::string> linking_morphemes = {"s"};
    std::size_t min_token_length = 2;

    /// Throws Error(Validation) on empty stopwords, empty linking morphemes,
    /// min_token_length == 0, or the tagger strategy without a tagger.
    void validate() const;

    /// Built-in settings for "en" and "sv"; any other tag gets an identity
    /// stemmer and no stopwords.
    static AnalyzerConfig defaults_for(std::string_view language);
};

struct CompoundPart {
    std::string surface;  // case-folded part text
    std::string stem;
    Span span;
};

enum class OccurrenceSource { WholeToken, CompoundPart };

/// A noun found in a text. For compound parts, `surface`/`span` locate the
/// part itself while `token_span` and `parts` describe the enclosing token
/// and its complete split.
struct NounOccurrence {
    std::string surface;
    Span span;
    std::string stem;
    std::vector<CompoundPart> parts;
    Span token_span;
    OccurrenceSource source = OccurrenceSource::WholeToken;
};

std::string fold_case(std::string_view utf8);
std::size_t codepoint_count(std::string_view utf8);

/// Splits on anything that is not a letter, digit or combining mark.
std::vector<Token> tokenize(std::string_view text);

/// Case-folds, then strips suffixes to a fixpoint (so the result is
/// idempotent). The identity stemmer only case-folds.
std::string stem(std::string_view token, const AnalyzerConfig& config);

/// Dictionary decompounding. Every part must be at least
/// `config.min_token_length` code points and stem into `vocabulary`; one
/// linking morpheme may be consumed at each junction. Prefers the fewest
/// parts, then the longest first part (recursively), then fewer linking
/// morphemes. Returns the case-folded token as a single part when no split
/// exists.
std::vector<std::string> decompound(std::string_view token,
                                    const Vocabulary& vocabulary,
                                    const AnalyzerConfig& config);

/// Nouns of `text` in document order.
std::vector<NounOccurrence> analyze(std::string_view text,
                                    const AnalyzerConfig& config,
                                    const Vocabulary& vocabulary);

/// Stems to index for a taxonomy text field: every non-stopword token stem
/// plus, when decompounding is on, the stems of its best split into two or
/// more parts drawn from `split_vocabulary`.
std::vector<std::string> index_terms(std::string_view text,
                                     const AnalyzerConfig& config,
                                     const Vocabulary& split_vocabulary);

/// One word per line; blank lines and lines starting with '#' are skipped.
std::set<std::string> read_stopwords(std::istream& in);

nlohmann::json to_json(const AnalyzerConfig& config);
/// Missing keys fall back to `defaults_for(language)`. A "stopwords_file"
/// entry is resolved against `base_dir`.
AnalyzerConfig analyzer_config_from_json(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir = {});

}  // namespace taxotrace::text
