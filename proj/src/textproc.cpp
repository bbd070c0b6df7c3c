#include "taxotrace/textproc.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>

#include "taxotrace/error.hpp"

namespace taxotrace::text {
namespace {

const std::set<std::string>& english_stopwords() {
    static const std::set<std::string> words = {
        "a",     "about", "above", "after", "all",   "along", "also",   "an",
        "and",   "any",   "are",   "as",    "at",    "be",    "been",   "before",
        "being", "below", "both",  "but",   "by",    "can",   "could",  "do",
        "does",  "each",  "either", "for",  "from",  "had",   "has",    "have",
        "he",    "her",   "his",   "how",   "if",    "in",    "into",   "is",
        "it",    "its",   "may",   "more",  "must",  "no",    "not",    "of",
        "on",    "only",  "or",    "other", "over",  "per",   "shall",  "she",
        "should", "so",   "such",  "than",  "that",  "the",   "their",  "them",
        "then",  "there", "these", "they",  "this",  "those", "through", "to",
        "under", "up",    "upon",  "was",   "we",    "were",  "what",   "when",
        "where", "which", "while", "who",   "will",  "with",  "within", "without",
        "would"};
    return words;
}

const std::set<std::string>& swedish_stopwords() {
    static const std::set<std::string> words = {
        "alla", "allt",  "att",   "av",    "blir",  "bli",   "de",    "dem",
        "den",  "denna", "deras", "dess",  "det",   "detta", "dig",   "din",
        "du",   "där",   "efter", "ej",    "eller", "en",    "er",    "ett",
        "från", "för",   "ha",    "har",   "hade",  "han",   "hon",   "i",
        "icke", "inom",  "inte",  "jag",   "kan",   "man",   "med",   "mellan",
        "men",  "mot",   "ni",    "nu",    "när",   "och",   "om",    "på",
        "sig",  "sin",   "sitt",  "ska",   "skall", "som",   "så",    "till",
        "under", "upp",  "ut",    "utan",  "vara",  "vid",   "vi",    "är",
        "över"};
    return words;
}

// Snowball-style main suffixes, longest first.
const std::vector<std::string> kEnglishSuffixes = {
    "ational", "ations", "ation", "ments", "ment", "ness", "ings", "ing", "ies",
    "ers",     "er",     "es",    "ed",    "ly",   "s",    "e",    "y"};
const std::vector<std::string> kEnglishProtected = {"ss", "us", "is"};

const std::vector<std::string> kSwedishSuffixes = {
    "heterna", "hetens", "anden", "heten", "heter", "arnas", "ernas", "ornas",
    "andes",   "arens",  "andet", "arna",  "erna",  "orna",  "ande",  "arne",
    "aste",    "aren",   "ades",  "erns",  "ade",   "are",   "ern",   "ens",
    "het",     "ast",    "ad",    "en",    "ar",    "er",    "or",    "as",
    "es",      "at",     "a",     "e",     "s"};
const std::vector<std::string> kSwedishProtected = {"ss"};

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Case-folded token with code point boundaries in both the folded and the
// source encoding. Simple (1:1) case folding keeps code point counts aligned,
// byte counts may still differ.
struct FoldedToken {
    std::string folded;
    std::vector<std::size_t> folded_offsets;  // n + 1 entries
    std::vector<std::size_t> source_offsets;  // n + 1 entries, relative to token start

    std::size_t size() const { return folded_offsets.size() - 1; }
    std::string_view slice(std::size_t begin, std::size_t end) const {
        return std::string_view(folded).substr(
            folded_offsets[begin], folded_offsets[end] - folded_offsets[begin]);
    }
};

FoldedToken fold_token(std::string_view token) {
    FoldedToken out;
    const auto* bytes = reinterpret_cast<const uint8_t*>(token.data());
    const auto length = static_cast<int32_t>(token.size());
    int32_t i = 0;
    while (i < length) {
        out.source_offsets.push_back(static_cast<std::size_t>(i));
        out.folded_offsets.push_back(out.folded.size());
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        if (c < 0) c = 0xFFFD;
        c = u_foldCase(c, U_FOLD_CASE_DEFAULT);
        char buffer[U8_MAX_LENGTH];
        int32_t written = 0;
        U8_APPEND_UNSAFE(buffer, written, c);
        out.folded.append(buffer, static_cast<std::size_t>(written));
    }
    out.source_offsets.push_back(token.size());
    out.folded_offsets.push_back(out.folded.size());
    return out;
}

bool is_token_char(UChar32 c) {
    if (c < 0) return false;
    if (u_isalnum(c)) return true;
    const auto type = u_charType(c);
    return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK;
}

bool is_stopword(const AnalyzerConfig& config, const std::string& folded, const std::string& stemmed) {
    return config.stopwords.count(folded) > 0 || config.stopwords.count(stemmed) > 0;
}

struct Piece {
    std::size_t begin;
    std::size_t end;
    std::size_t link_length;  // code points of linking morpheme consumed after this piece
};

using Split = std::vector<Piece>;

// Strict "a is preferred over b": fewer pieces, then piecewise longer parts,
// then shorter linking morphemes. Lexicographic, so it composes with the
// suffix recursion below.
bool preferred(const Split& a, const Split& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t k = 0; k < a.size(); ++k) {
        const auto la = a[k].end - a[k].begin;
        const auto lb = b[k].end - b[k].begin;
        if (la != lb) return la > lb;
        if (a[k].link_length != b[k].link_length) return a[k].link_length < b[k].link_length;
    }
    return false;
}

class Splitter {
public:
    Splitter(const FoldedToken& token, const Vocabulary& vocabulary, const AnalyzerConfig& config)
        : token_(token), vocabulary_(vocabulary), config_(config) {
        for (const auto& link : config.linking_morphemes) {
            links_.push_back(fold_case(link));
        }
    }

    std::optional<Split> best(bool allow_whole) {
        return best_from(0, allow_whole);
    }

private:
    bool part_ok(std::size_t begin, std::size_t end) {
        if (end - begin < config_.min_token_length) return false;
        const auto key = std::make_pair(begin, end);
        if (auto it = part_cache_.find(key); it != part_cache_.end()) return it->second;
        const bool ok = vocabulary_.count(stem(token_.slice(begin, end), config_)) > 0;
        part_cache_.emplace(key, ok);
        return ok;
    }

    std::optional<Split> best_from(std::size_t begin, bool allow_whole) {
        if (allow_whole) {
            if (auto it = memo_.find(begin); it != memo_.end()) return it->second;
        }
        const std::size_t n = token_.size();
        std::optional<Split> best;
        auto consider = [&](Split candidate) {
            if (!best || preferred(candidate, *best)) best = std::move(candidate);
        };
        for (std::size_t end = n; end > begin; --end) {
            if (!part_ok(begin, end)) continue;
            if (end == n) {
                if (allow_whole) consider(Split{{begin, end, 0}});
                continue;
            }
            if (auto rest = best_from(end, true)) {
                Split candidate{{begin, end, 0}};
                candidate.insert(candidate.end(), rest->begin(), rest->end());
                consider(std::move(candidate));
            }
            for (const auto& link : links_) {
                const auto link_cps = codepoint_count(link);
                if (end + link_cps >= n) continue;
                if (token_.slice(end, end + link_cps) != link) continue;
                if (auto rest = best_from(end + link_cps, true)) {
                    Split candidate{{begin, end, link_cps}};
                    candidate.insert(candidate.end(), rest->begin(), rest->end());
                    consider(std::move(candidate));
                }
            }
        }
        if (allow_whole) memo_.emplace(begin, best);
        return best;
    }

    const FoldedToken& token_;
    const Vocabulary& vocabulary_;
    const AnalyzerConfig& config_;
    std::vector<std::string> links_;
    std::map<std::size_t, std::optional<Split>> memo_;
    std::map<std::pair<std::size_t, std::size_t>, bool> part_cache_;
};

std::string stem_folded(std::string word, const AnalyzerConfig& config) {
    if (config.stemmer == StemmerKind::Identity) return word;
    while (true) {
        const bool blocked = std::any_of(
            config.protected_endings.begin(), config.protected_endings.end(),
            [&](const std::string& e) { return ends_with(word, e); });
        if (blocked) break;
        const auto word_cps = codepoint_count(word);
        const std::string* chosen = nullptr;
        for (const auto& suffix : config.suffixes) {
            if (!ends_with(word, suffix)) continue;
            if (word_cps < codepoint_count(suffix) + config.min_stem_length) continue;
            if (chosen == nullptr || suffix.size() > chosen->size()) chosen = &suffix;
        }
        if (chosen == nullptr) break;
        word.erase(word.size() - chosen->size());
    }
    return word;
}

}  // namespace

void AnalyzerConfig::validate() const {
    for (const auto& word : stopwords) {
        if (word.empty()) throw Error(ErrorKind::Validation, "stopword list contains an empty entry");
    }
    for (const auto& link : linking_morphemes) {
        if (link.empty()) throw Error(ErrorKind::Validation, "linking morpheme must not be empty");
    }
    for (const auto& suffix : suffixes) {
        if (suffix.empty()) throw Error(ErrorKind::Validation, "stemmer suffix must not be empty");
    }
    if (min_token_length < 1) throw Error(ErrorKind::Validation, "min_token_length must be >= 1");
    if (noun_strategy == NounStrategy::Tagger && !tagger) {
        throw Error(ErrorKind::Validation, "noun_strategy 'tagger' requires a tagger instance");
    }
}

AnalyzerConfig AnalyzerConfig::defaults_for(std::string_view language) {
    AnalyzerConfig config;
    config.language = std::string(language);
    if (language == "en") {
        config.suffixes = kEnglishSuffixes;
        config.protected_endings = kEnglishProtected;
        config.stopwords = english_stopwords();
    } else if (language == "sv") {
        config.suffixes = kSwedishSuffixes;
        config.protected_endings = kSwedishProtected;
        config.stopwords = swedish_stopwords();
    } else {
        config.stemmer = StemmerKind::Identity;
    }
    return config;
}

std::string fold_case(std::string_view utf8) {
    return fold_token(utf8).folded;
}

std::size_t codepoint_count(std::string_view utf8) {
    const auto* bytes = reinterpret_cast<const uint8_t*>(utf8.data());
    const auto length = static_cast<int32_t>(utf8.size());
    std::size_t count = 0;
    for (int32_t i = 0; i < length; ++count) {
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
    }
    return count;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    int32_t i = 0;
    std::optional<std::size_t> start;
    while (i < length) {
        const auto at = static_cast<std::size_t>(i);
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        if (is_token_char(c)) {
            if (!start) start = at;
        } else if (start) {
            tokens.push_back({std::string(text.substr(*start, at - *start)), {*start, at}});
            start.reset();
        }
    }
    if (start) {
        tokens.push_back({std::string(text.substr(*start)), {*start, text.size()}});
    }
    return tokens;
}

std::string stem(std::string_view token, const AnalyzerConfig& config) {
    return stem_folded(fold_case(token), config);
}

std::vector<std::string> decompound(std::string_view token, const Vocabulary& vocabulary,
                                    const AnalyzerConfig& config) {
    const auto folded = fold_token(token);
    Splitter splitter(folded, vocabulary, config);
    const auto split = splitter.best(true);
    if (!split) return {folded.folded};
    std::vector<std::string> parts;
    for (const auto& piece : *split) {
        parts.emplace_back(folded.slice(piece.begin, piece.end));
    }
    return parts;
}

std::vector<NounOccurrence> analyze(std::string_view text, const AnalyzerConfig& config,
                                    const Vocabulary& vocabulary) {
    std::vector<NounOccurrence> out;
    for (const auto& token : tokenize(text)) {
        if (codepoint_count(token.surface) < config.min_token_length) continue;
        const auto folded = fold_token(token.surface);
        const auto token_stem = stem_folded(folded.folded, config);
        if (is_stopword(config, folded.folded, token_stem)) continue;

        const bool gated = config.noun_strategy == NounStrategy::VocabularyGated;
        if (!gated && !config.tagger->is_noun(text, token.span)) continue;

        if (vocabulary.count(token_stem) > 0 || (!gated && !config.decompounding)) {
            out.push_back({token.surface, token.span, token_stem, {}, token.span,
                           OccurrenceSource::WholeToken});
            continue;
        }
        if (!config.decompounding) continue;

        Splitter splitter(folded, vocabulary, config);
        const auto split = splitter.best(false);
        if (!split) {
            if (!gated) {
                out.push_back({token.surface, token.span, token_stem, {}, token.span,
                               OccurrenceSource::WholeToken});
            }
            continue;
        }
        std::vector<CompoundPart> parts;
        for (const auto& piece : *split) {
            const Span span{token.span.begin + folded.source_offsets[piece.begin],
                            token.span.begin + folded.source_offsets[piece.end]};
            std::string surface(folded.slice(piece.begin, piece.end));
            auto part_stem = stem_folded(surface, config);
            parts.push_back({std::move(surface), std::move(part_stem), span});
        }
        for (const auto& part : parts) {
            if (is_stopword(config, part.surface, part.stem)) continue;
            if (vocabulary.count(part.stem) == 0) continue;
            out.push_back({std::string(text.substr(part.span.begin, part.span.end - part.span.begin)),
                           part.span, part.stem, parts, token.span,
                           OccurrenceSource::CompoundPart});
        }
    }
    return out;
}

std::vector<std::string> index_terms(std::string_view text, const AnalyzerConfig& config,
                                     const Vocabulary& split_vocabulary) {
    std::vector<std::string> terms;
    for (const auto& token : tokenize(text)) {
        if (codepoint_count(token.surface) < config.min_token_length) continue;
        const auto folded = fold_token(token.surface);
        const auto token_stem = stem_folded(folded.folded, config);
        if (is_stopword(config, folded.folded, token_stem)) continue;
        if (config.noun_strategy == NounStrategy::Tagger && !config.tagger->is_noun(text, token.span)) {
            continue;
        }
        terms.push_back(token_stem);
        if (!config.decompounding || split_vocabulary.empty()) continue;
        Splitter splitter(folded, split_vocabulary, config);
        if (const auto split = splitter.best(false)) {
            for (const auto& piece : *split) {
                const std::string part(folded.slice(piece.begin, piece.end));
                auto part_stem = stem_folded(part, config);
                if (!is_stopword(config, part, part_stem)) terms.push_back(std::move(part_stem));
            }
        }
    }
    return terms;
}

std::set<std::string> read_stopwords(std::istream& in) {
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t");
        words.insert(fold_case(std::string_view(line).substr(first, last - first + 1)));
    }
    return words;
}

nlohmann::json to_json(const AnalyzerConfig& config) {
    return nlohmann::json{
        {"language", config.language},
        {"stemmer", config.stemmer == StemmerKind::Identity ? "identity" : "suffix"},
        {"suffixes", config.suffixes},
        {"protected_endings", config.protected_endings},
        {"min_stem_length", config.min_stem_length},
        {"stopwords", config.stopwords},
        {"noun_strategy", config.noun_strategy == NounStrategy::Tagger ? "tagger" : "vocabulary"},
        {"decompounding", config.decompounding},
        {"linking_morphemes", config.linking_morphemes},
        {"min_token_length", config.min_token_length},
    };
}

AnalyzerConfig analyzer_config_from_json(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw Error(ErrorKind::Parse, "analyzer config must be a JSON object");
    static const std::set<std::string> known = {
        "language",       "stemmer",       "suffixes",          "protected_endings",
        "min_stem_length", "stopwords",    "stopwords_file",    "noun_strategy",
        "decompounding",  "linking_morphemes", "min_token_length"};
    for (const auto& [key, value] : doc.items()) {
        if (known.count(key) == 0) throw Error(ErrorKind::Parse, "unknown analyzer config key '" + key + "'");
    }
    try {
        auto config = AnalyzerConfig::defaults_for(doc.value("language", std::string("en")));
        if (doc.contains("stemmer")) {
            const auto name = doc.at("stemmer").get<std::string>();
            if (name == "identity") {
                config.stemmer = StemmerKind::Identity;
            } else if (name == "suffix") {
                config.stemmer = StemmerKind::SuffixStripping;
            } else {
                throw Error(ErrorKind::Parse, "unknown stemmer '" + name + "'");
            }
        }
        if (doc.contains("suffixes")) {
            config.suffixes.clear();
            for (const auto& s : doc.at("suffixes")) config.suffixes.push_back(fold_case(s.get<std::string>()));
        }
        if (doc.contains("protected_endings")) {
            config.protected_endings.clear();
            for (const auto& s : doc.at("protected_endings")) {
                config.protected_endings.push_back(fold_case(s.get<std::string>()));
            }
        }
        if (doc.contains("min_stem_length")) config.min_stem_length = doc.at("min_stem_length").get<std::size_t>();
        if (doc.contains("stopwords")) {
            config.stopwords.clear();
            for (const auto& s : doc.at("stopwords")) config.stopwords.insert(fold_case(s.get<std::string>()));
        }
        if (doc.contains("stopwords_file")) {
            const auto path = base_dir / doc.at("stopwords_file").get<std::string>();
            std::ifstream in(path);
            if (!in) throw Error(ErrorKind::Parse, "cannot open stopword file " + path.string());
            config.stopwords = read_stopwords(in);
        }
        if (doc.contains("noun_strategy")) {
            const auto name = doc.at("noun_strategy").get<std::string>();
            if (name == "vocabulary") {
                config.noun_strategy = NounStrategy::VocabularyGated;
            } else if (name == "tagger") {
                config.noun_strategy = NounStrategy::Tagger;
            } else {
                throw Error(ErrorKind::Parse, "unknown noun_strategy '" + name + "'");
            }
        }
        if (doc.contains("decompounding")) config.decompounding = doc.at("decompounding").get<bool>();
        if (doc.contains("linking_morphemes")) {
            config.linking_morphemes.clear();
            for (const auto& s : doc.at("linking_morphemes")) {
                config.linking_morphemes.push_back(fold_case(s.get<std::string>()));
            }
        }
        if (doc.contains("min_token_length")) config.min_token_length = doc.at("min_token_length").get<std::size_t>();
        return config;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("analyzer config: ") + e.what());
    }
}

}  // namespace taxotrace::text
