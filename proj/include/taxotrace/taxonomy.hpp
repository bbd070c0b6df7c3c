#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "taxotrace/textproc.hpp"

namespace taxotrace {

struct TaxonomyObject {
    std::string code;
    std::string label;
    std::string description;
    std::vector<std::string> synonyms;
    std::optional<std::string> parent_code;

    friend bool operator==(const TaxonomyObject&, const TaxonomyObject&) = default;
};

/// Validated, immutable collection of taxonomy objects in insertion order.
class Taxonomy {
public:
    Taxonomy() = default;

    /// Validates codes, labels and the parent hierarchy. `lines`, when given,
    /// holds the source line of each object for error messages.
    static Taxonomy from_objects(std::vector<TaxonomyObject> objects,
                                 std::string_view source_name = "<memory>",
                                 const std::vector<std::size_t>& lines = {});

    const TaxonomyObject* find(std::string_view code) const;
    const TaxonomyObject& at(std::string_view code) const;
    const std::vector<TaxonomyObject>& objects() const { return objects_; }
    std::size_t size() const { return objects_.size(); }
    bool empty() const { return objects_.empty(); }

private:
    std::vector<TaxonomyObject> objects_;
    std::map<std::string, std::size_t, std::less<>> by_code_;
};

inline constexpr std::string_view kTaxonomyFormat = "taxotrace-taxonomy";
inline constexpr int kTaxonomyFormatVersion = 1;

/// Reads the line-delimited JSON taxonomy format (see docs/formats.md).
Taxonomy load_taxonomy(std::istream& in, std::string_view source_name = "<input>");
Taxonomy load_taxonomy_file(const std::filesystem::path& path);
void write_taxonomy(std::ostream& out, const Taxonomy& taxonomy);

struct LookupResult {
    std::vector<std::string> codes;  // sorted
    std::size_t f_noun = 0;
};

/// Inverted index from case-folded noun stems to the codes of the objects
/// whose label, description or synonyms contain them.
class NounIndex {
public:
    NounIndex() = default;

    static NounIndex build(const Taxonomy& taxonomy, const text::AnalyzerConfig& analyzer);

    /// `word` is case-folded and stemmed before the lookup; stemming is
    /// idempotent so passing an already stemmed key is fine.
    LookupResult lookup(std::string_view word) const;
    std::size_t f_noun(std::string_view word) const;

    const std::map<std::string, std::set<std::string>, std::less<>>& entries() const { return entries_; }
    const text::AnalyzerConfig& analyzer() const { return analyzer_; }
    std::size_t size() const { return entries_.size(); }

    /// All indexed stems.
    text::Vocabulary vocabulary() const;

    nlohmann::json to_json() const;
    static NounIndex from_json(const nlohmann::json& doc);

private:
    text::AnalyzerConfig analyzer_;
    std::map<std::string, std::set<std::string>, std::less<>> entries_;
};

inline constexpr std::string_view kIndexFormat = "taxotrace-index";

/// Stems a NounIndex would produce for one object (label, description and
/// synonyms). `split_vocabulary` is the vocabulary compounds are split against.
std::vector<std::string> object_index_terms(const TaxonomyObject& object,
                                            const text::AnalyzerConfig& analyzer,
                                            const text::Vocabulary& split_vocabulary);

struct SearchHit {
    std::string code;
    std::size_t matched_tokens = 0;  // distinct query stems found in any field
    std::size_t label_matches = 0;   // ... of which found in the label or a synonym

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Token-overlap full-text search. Ranked by matched tokens, then label
/// matches, then code. Throws Error(Precondition) on an empty query or a zero
/// limit.
std::vector<SearchHit> search_taxonomy(const Taxonomy& taxonomy, std::string_view query,
                                       std::size_t limit, const text::AnalyzerConfig& analyzer);

}  // namespace taxotrace
