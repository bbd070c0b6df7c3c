#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "taxotrace/error.hpp"
#include "taxotrace/textproc.hpp"

using namespace taxotrace;
using namespace taxotrace::text;

namespace {

AnalyzerConfig swedish_identity() {
    auto config = AnalyzerConfig::defaults_for("sv");
    config.stemmer = StemmerKind::Identity;
    return config;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "|") + p;
    return out;
}

}  // namespace

TEST(Tokenize, SpansAreByteOffsets) {
    const std::string text = "Bro över järnväg, 2 spår.";
    const auto tokens = tokenize(text);
    ASSERT_EQ(tokens.size(), 5u);
    for (const auto& t : tokens) {
        EXPECT_EQ(text.substr(t.span.begin, t.span.end - t.span.begin), t.surface);
    }
    EXPECT_EQ(tokens[1].surface, "över");
    EXPECT_EQ(tokens[2].surface, "järnväg");
    EXPECT_EQ(tokens[3].surface, "2");
}

TEST(Tokenize, EmptyAndPunctuationOnly) {
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_TRUE(tokenize(" .,;-- ").empty());
}

TEST(Stem, IdentityOnlyFoldsCase) {
    auto config = AnalyzerConfig::defaults_for("en");
    config.stemmer = StemmerKind::Identity;
    EXPECT_EQ(stem("Bridges", config), "bridges");
    EXPECT_EQ(stem("ÅNGA", config), "ånga");
}

TEST(Stem, ShortTokenIsStillStemmed) {
    const auto config = AnalyzerConfig::defaults_for("en");
    EXPECT_EQ(stem("x", config), "x");
    EXPECT_EQ(stem("X", config), "x");
}

TEST(Stem, SuffixStripping) {
    const auto config = AnalyzerConfig::defaults_for("en");
    EXPECT_EQ(stem("bridges", config), stem("bridge", config));
    EXPECT_EQ(stem("railings", config), stem("railing", config));
    // Protected endings block the plural rule.
    EXPECT_EQ(stem("glass", config), "glass");
    EXPECT_EQ(stem("bus", config), "bus");
}

TEST(Stem, IdempotentShorterAndPrefixOfFoldedToken) {
    std::mt19937 rng(7);
    const std::string letters = "abcdeilmnorstuyg";
    for (const char* language : {"en", "sv"}) {
        const auto config = AnalyzerConfig::defaults_for(language);
        for (int i = 0; i < 2000; ++i) {
            std::string word;
            const int length = 1 + static_cast<int>(rng() % 12);
            for (int j = 0; j < length; ++j) word += letters[rng() % letters.size()];
            const auto once = stem(word, config);
            EXPECT_EQ(stem(once, config), once) << word;
            EXPECT_LE(once.size(), word.size()) << word;
            EXPECT_EQ(word.compare(0, once.size(), once), 0) << word << " -> " << once;
        }
    }
}

TEST(Analyze, GatedNounsInDocumentOrder) {
    const auto config = AnalyzerConfig::defaults_for("en");
    const Vocabulary vocabulary = {stem("bridge", config), stem("road", config), stem("traffic", config)};
    const std::string text = "The bridge shall carry road traffic";
    const auto nouns = analyze(text, config, vocabulary);
    ASSERT_EQ(nouns.size(), 3u);
    EXPECT_EQ(nouns[0].surface, "bridge");
    EXPECT_EQ(nouns[0].span, (Span{4, 10}));
    EXPECT_EQ(nouns[1].surface, "road");
    EXPECT_EQ(nouns[1].span, (Span{23, 27}));
    EXPECT_EQ(nouns[2].surface, "traffic");
    EXPECT_EQ(nouns[2].span, (Span{28, 35}));
    for (const auto& n : nouns) EXPECT_EQ(n.source, OccurrenceSource::WholeToken);
}

TEST(Analyze, EmptyText) {
    EXPECT_TRUE(analyze("", AnalyzerConfig::defaults_for("en"), {"bridge"}).empty());
}

TEST(Analyze, CompoundPartsWithLinkingMorpheme) {
    const auto config = swedish_identity();
    const std::string text = "järnvägsbro";
    const auto nouns = analyze(text, config, {"järnväg", "bro"});
    ASSERT_EQ(nouns.size(), 2u);
    EXPECT_EQ(nouns[0].surface, "järnväg");
    EXPECT_EQ(nouns[0].span, (Span{0, 9}));
    EXPECT_EQ(nouns[1].surface, "bro");
    EXPECT_EQ(nouns[1].span, (Span{10, 13}));
    for (const auto& n : nouns) {
        EXPECT_EQ(n.source, OccurrenceSource::CompoundPart);
        EXPECT_EQ(n.token_span, (Span{0, 13}));
        ASSERT_EQ(n.parts.size(), 2u);
    }
}

TEST(Analyze, MixedCaseCompoundKeepsSourceSurface) {
    const auto config = swedish_identity();
    const std::string text = "Ny JÄRNVÄGSBRO byggs";
    const auto nouns = analyze(text, config, {"järnväg", "bro"});
    ASSERT_EQ(nouns.size(), 2u);
    EXPECT_EQ(nouns[0].surface, "JÄRNVÄG");
    EXPECT_EQ(nouns[0].stem, "järnväg");
    EXPECT_EQ(nouns[1].surface, "BRO");
}

TEST(Analyze, StopwordsAndShortTokensAreSkipped) {
    auto config = AnalyzerConfig::defaults_for("en");
    config.stemmer = StemmerKind::Identity;
    EXPECT_TRUE(analyze("the a", config, {"the", "a"}).empty());
    config.stopwords.clear();
    config.min_token_length = 3;
    const auto nouns = analyze("of the road", config, {"of", "the", "road"});
    ASSERT_EQ(nouns.size(), 2u);
    EXPECT_EQ(nouns[0].surface, "the");
}

TEST(Analyze, TaggerStrategyConsultsTagger) {
    struct CapitalizedNouns : NounTagger {
        bool is_noun(std::string_view text, Span span) const override {
            return text[span.begin] >= 'A' && text[span.begin] <= 'Z';
        }
    };
    auto config = AnalyzerConfig::defaults_for("en");
    config.noun_strategy = NounStrategy::Tagger;
    config.tagger = std::make_shared<CapitalizedNouns>();
    config.decompounding = false;
    const auto nouns = analyze("the Bridge carries Trains daily", config, {});
    ASSERT_EQ(nouns.size(), 2u);
    EXPECT_EQ(nouns[0].surface, "Bridge");
    EXPECT_EQ(nouns[1].surface, "Trains");
}

TEST(AnalyzerConfig, Validation) {
    auto config = AnalyzerConfig::defaults_for("en");
    EXPECT_NO_THROW(config.validate());
    config.min_token_length = 0;
    EXPECT_THROW(config.validate(), Error);
    config = AnalyzerConfig::defaults_for("en");
    config.stopwords.insert("");
    EXPECT_THROW(config.validate(), Error);
    config = AnalyzerConfig::defaults_for("en");
    config.noun_strategy = NounStrategy::Tagger;
    EXPECT_THROW(config.validate(), Error);
}

TEST(AnalyzerConfig, JsonRoundTripAndUnknownKey) {
    auto config = AnalyzerConfig::defaults_for("sv");
    config.min_token_length = 3;
    config.linking_morphemes = {"s", "e"};
    const auto back = analyzer_config_from_json(to_json(config));
    EXPECT_EQ(back.language, "sv");
    EXPECT_EQ(back.min_token_length, 3u);
    EXPECT_EQ(back.linking_morphemes, config.linking_morphemes);
    EXPECT_EQ(back.stopwords, config.stopwords);
    EXPECT_EQ(back.suffixes, config.suffixes);
    EXPECT_THROW(analyzer_config_from_json(nlohmann::json{{"colour", "blue"}}), Error);
}

TEST(AnalyzerConfig, StopwordsFileRelativeToBaseDir) {
    testsupport::TempDir dir;
    testsupport::write_file(dir / "stop.txt", "# comment\nfoo\n\nBar\n");
    const auto config =
        analyzer_config_from_json(nlohmann::json{{"language", "xx"}, {"stopwords_file", "stop.txt"}}, dir.path());
    EXPECT_EQ(config.stopwords.count("foo"), 1u);
    EXPECT_EQ(config.stopwords.count("bar"), 1u);
}

TEST(Decompound, TwoParts) {
    const auto config = swedish_identity();
    EXPECT_EQ(join(decompound("cykelväg", {"cykel", "väg"}, config)), "cykel|väg");
}

TEST(Decompound, NoSplitReturnsToken) {
    const auto config = swedish_identity();
    EXPECT_EQ(join(decompound("bridge", {"bro", "väg"}, config)), "bridge");
    EXPECT_EQ(join(decompound("Bridge", {"bridge", "br", "idge"}, config)), "bridge");
}

TEST(Decompound, LinkingMorphemeAndFewestParts) {
    const auto config = swedish_identity();
    EXPECT_EQ(join(decompound("järnvägsbro", {"järnväg", "väg", "bro"}, config)), "järnväg|bro");
    EXPECT_EQ(join(decompound("järnvägsbro", {"järn", "väg", "bro"}, config)), "järn|väg|bro");
}

TEST(Decompound, LongerFirstPartWins) {
    auto config = swedish_identity();
    // Both "ab|cd" and "abc|d" are two-part splits; min length 1 allows "d".
    config.min_token_length = 1;
    EXPECT_EQ(join(decompound("abcd", {"ab", "cd", "abc", "d"}, config)), "abc|d");
}

TEST(Decompound, PartsRespectMinimumLength) {
    auto config = swedish_identity();
    config.min_token_length = 3;
    EXPECT_EQ(join(decompound("bobil", {"bo", "bil"}, config)), "bobil");
    config.min_token_length = 2;
    EXPECT_EQ(join(decompound("bobil", {"bo", "bil"}, config)), "bo|bil");
}

TEST(Decompound, LinkingMorphemeOnlyBetweenParts) {
    const auto config = swedish_identity();
    // A trailing "s" is not a junction.
    EXPECT_EQ(join(decompound("vägbros", {"väg", "bro"}, config)), "vägbros");
}

// Joining the parts and re-inserting at most one linking morpheme at each
// junction reproduces the folded token.
TEST(Decompound, SoundnessOnRandomCompounds) {
    std::mt19937 rng(11);
    const std::vector<std::string> pool = {"bro", "väg", "järn", "cykel", "tunnel", "lok", "spår", "stål",
                                           "balk", "räcke", "pelare", "is", "sten", "ås", "rör"};
    const auto config = swedish_identity();
    for (int trial = 0; trial < 500; ++trial) {
        Vocabulary vocabulary;
        for (const auto& w : pool) {
            if (rng() % 3 != 0) vocabulary.insert(w);
        }
        std::string token;
        const int pieces = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < pieces; ++i) {
            if (i > 0 && rng() % 2 == 0) token += "s";
            token += pool[rng() % pool.size()];
        }
        const auto parts = decompound(token, vocabulary, config);
        ASSERT_FALSE(parts.empty());
        if (parts.size() == 1) {
            EXPECT_EQ(parts[0], token);
            continue;
        }
        std::size_t at = 0;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            ASSERT_EQ(token.compare(at, parts[i].size(), parts[i]), 0) << token;
            at += parts[i].size();
            EXPECT_EQ(vocabulary.count(parts[i]), 1u) << token;
            if (i + 1 < parts.size() && token.compare(at, parts[i + 1].size(), parts[i + 1]) != 0) {
                ASSERT_EQ(token.compare(at, 1, "s"), 0) << token;
                at += 1;
            }
        }
        EXPECT_EQ(at, token.size()) << token;
    }
}

TEST(Analyze, SpanFidelityAndGatingSoundness) {
    std::mt19937 rng(3);
    const std::vector<std::string> words = {"Bro",  "bro",    "väg",   "järnvägsbro", "cykelväg", "och", "på",
                                            "Spår", "stålbalk", "x",   "ÅS",          "rörbro",   "en",  "tunnel"};
    const auto config = swedish_identity();
    const Vocabulary vocabulary = {"bro", "väg", "järnväg", "cykel", "spår", "stål", "balk", "rör"};
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        const int n = static_cast<int>(rng() % 10);
        for (int i = 0; i < n; ++i) {
            text += words[rng() % words.size()];
            text += (rng() % 4 == 0) ? ", " : " ";
        }
        const auto nouns = analyze(text, config, vocabulary);
        EXPECT_EQ(analyze(text, config, vocabulary).size(), nouns.size());
        std::size_t previous = 0;
        for (const auto& n : nouns) {
            ASSERT_LT(n.span.begin, n.span.end);
            ASSERT_LE(n.span.end, text.size());
            EXPECT_EQ(text.substr(n.span.begin, n.span.end - n.span.begin), n.surface);
            EXPECT_EQ(vocabulary.count(n.stem), 1u) << n.stem;
            EXPECT_GE(n.span.begin, previous);
            previous = n.span.begin;
        }
    }
}

TEST(IndexTerms, SplitsAgainstGivenVocabulary) {
    const auto config = testsupport::identity_en();
    const auto terms = index_terms("The roadbridge", config, {"road", "bridge"});
    EXPECT_EQ(terms, (std::vector<std::string>{"roadbridge", "road", "bridge"}));
    EXPECT_EQ(index_terms("The roadbridge", config, {}), (std::vector<std::string>{"roadbridge"}));
}

TEST(Stopwords, ReadsOneWordPerLine) {
    std::istringstream in("och\n# skip\n\n  i  \nPÅ\n");
    const auto words = read_stopwords(in);
    EXPECT_EQ(words, (std::set<std::string>{"och", "i", "på"}));
}
