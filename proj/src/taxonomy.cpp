#include "taxotrace/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "taxotrace/error.hpp"

namespace taxotrace {
namespace {

std::string location(std::string_view source, const std::vector<std::size_t>& lines, std::size_t i) {
    std::string out(source);
    if (i < lines.size()) out += ":" + std::to_string(lines[i]);
    return out;
}

std::vector<std::string> query_stems(std::string_view query, const text::AnalyzerConfig& analyzer) {
    auto stems = text::index_terms(query, analyzer, {});
    std::sort(stems.begin(), stems.end());
    stems.erase(std::unique(stems.begin(), stems.end()), stems.end());
    return stems;
}

std::set<std::string> field_stems(std::string_view field, const text::AnalyzerConfig& analyzer) {
    const auto terms = text::index_terms(field, analyzer, {});
    return {terms.begin(), terms.end()};
}

}  // namespace

Taxonomy Taxonomy::from_objects(std::vector<TaxonomyObject> objects, std::string_view source_name,
                                const std::vector<std::size_t>& lines) {
    Taxonomy taxonomy;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& object = objects[i];
        if (object.code.empty()) {
            throw Error(ErrorKind::Validation, location(source_name, lines, i) + ": empty object code");
        }
        if (object.label.empty()) {
            throw Error(ErrorKind::Validation,
                        location(source_name, lines, i) + ": empty label for code '" + object.code + "'");
        }
        if (!taxonomy.by_code_.emplace(object.code, i).second) {
            throw Error(ErrorKind::Validation,
                        location(source_name, lines, i) + ": duplicate code '" + object.code + "'");
        }
    }
    taxonomy.objects_ = std::move(objects);

    for (std::size_t i = 0; i < taxonomy.objects_.size(); ++i) {
        const auto& object = taxonomy.objects_[i];
        if (!object.parent_code) continue;
        if (taxonomy.by_code_.count(*object.parent_code) == 0) {
            throw Error(ErrorKind::Validation, location(source_name, lines, i) + ": code '" + object.code +
                                                   "' has unknown parent '" + *object.parent_code + "'");
        }
    }
    // Walk each parent chain; a chain longer than the object count is a cycle.
    for (std::size_t i = 0; i < taxonomy.objects_.size(); ++i) {
        const TaxonomyObject* current = &taxonomy.objects_[i];
        for (std::size_t steps = 0; current->parent_code; ++steps) {
            if (steps > taxonomy.objects_.size()) {
                throw Error(ErrorKind::Validation, location(source_name, lines, i) + ": code '" +
                                                       taxonomy.objects_[i].code +
                                                       "' is part of a parent cycle");
            }
            current = taxonomy.find(*current->parent_code);
        }
    }
    return taxonomy;
}

const TaxonomyObject* Taxonomy::find(std::string_view code) const {
    const auto it = by_code_.find(code);
    return it == by_code_.end() ? nullptr : &objects_[it->second];
}

const TaxonomyObject& Taxonomy::at(std::string_view code) const {
    if (const auto* object = find(code)) return *object;
    throw Error(ErrorKind::NotFound, "unknown taxonomy code '" + std::string(code) + "'");
}

Taxonomy load_taxonomy(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<TaxonomyObject> objects;
    std::vector<std::size_t> lines;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto where = source + ":" + std::to_string(line_no);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::Parse, where + ": malformed record: " + e.what());
        }
        if (!doc.is_object()) throw Error(ErrorKind::Parse, where + ": record must be a JSON object");

        if (!have_header) {
            if (doc.value("format", std::string()) != kTaxonomyFormat || !doc.contains("version")) {
                throw Error(ErrorKind::Parse, where + ": first line must be the taxonomy header {\"format\":\"" +
                                                  std::string(kTaxonomyFormat) + "\",\"version\":N}");
            }
            if (doc.at("version") != kTaxonomyFormatVersion) {
                throw Error(ErrorKind::Parse, where + ": unsupported taxonomy format version " +
                                                  doc.at("version").dump());
            }
            have_header = true;
            continue;
        }

        try {
            TaxonomyObject object;
            object.code = doc.at("code").get<std::string>();
            object.label = doc.at("label").get<std::string>();
            object.description = doc.value("description", std::string());
            if (doc.contains("synonyms")) object.synonyms = doc.at("synonyms").get<std::vector<std::string>>();
            if (doc.contains("parent_code") && !doc.at("parent_code").is_null()) {
                object.parent_code = doc.at("parent_code").get<std::string>();
            }
            objects.push_back(std::move(object));
            lines.push_back(line_no);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, where + ": malformed record: " + e.what());
        }
    }
    if (!have_header) throw Error(ErrorKind::Parse, source + ": missing taxonomy header line");
    return Taxonomy::from_objects(std::move(objects), source, lines);
}

Taxonomy load_taxonomy_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open taxonomy file " + path.string());
    return load_taxonomy(in, path.string());
}

void write_taxonomy(std::ostream& out, const Taxonomy& taxonomy) {
    out << nlohmann::json{{"format", kTaxonomyFormat}, {"version", kTaxonomyFormatVersion}}.dump() << '\n';
    for (const auto& object : taxonomy.objects()) {
        nlohmann::json doc{{"code", object.code},
                           {"label", object.label},
                           {"description", object.description},
                           {"synonyms", object.synonyms},
                           {"parent_code", nullptr}};
        if (object.parent_code) doc["parent_code"] = *object.parent_code;
        out << doc.dump() << '\n';
    }
}

std::vector<std::string> object_index_terms(const TaxonomyObject& object,
                                            const text::AnalyzerConfig& analyzer,
                                            const text::Vocabulary& split_vocabulary) {
    auto terms = text::index_terms(object.label, analyzer, split_vocabulary);
    const auto add = [&](std::string_view field) {
        auto more = text::index_terms(field, analyzer, split_vocabulary);
        terms.insert(terms.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    };
    add(object.description);
    for (const auto& synonym : object.synonyms) add(synonym);
    return terms;
}

NounIndex NounIndex::build(const Taxonomy& taxonomy, const text::AnalyzerConfig& analyzer) {
    analyzer.validate();
    // Whole-token stems first; compounds are then split against them.
    text::Vocabulary whole;
    for (const auto& object : taxonomy.objects()) {
        for (auto& term : object_index_terms(object, analyzer, {})) whole.insert(std::move(term));
    }
    NounIndex index;
    index.analyzer_ = analyzer;
    for (const auto& object : taxonomy.objects()) {
        for (auto& term : object_index_terms(object, analyzer, whole)) {
            index.entries_[std::move(term)].insert(object.code);
        }
    }
    return index;
}

LookupResult NounIndex::lookup(std::string_view word) const {
    const auto key = text::stem(word, analyzer_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return {};
    return {{it->second.begin(), it->second.end()}, it->second.size()};
}

std::size_t NounIndex::f_noun(std::string_view word) const {
    const auto it = entries_.find(text::stem(word, analyzer_));
    return it == entries_.end() ? 0 : it->second.size();
}

text::Vocabulary NounIndex::vocabulary() const {
    text::Vocabulary vocabulary;
    for (const auto& [stem, codes] : entries_) vocabulary.insert(stem);
    return vocabulary;
}

nlohmann::json NounIndex::to_json() const {
    nlohmann::json entries = nlohmann::json::object();
    for (const auto& [stem, codes] : entries_) entries[stem] = codes;
    return {{"format", kIndexFormat}, {"version", 1}, {"analyzer", text::to_json(analyzer_)}, {"entries", entries}};
}

NounIndex NounIndex::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("format", std::string()) != kIndexFormat) {
        throw Error(ErrorKind::Parse, "not a noun index document");
    }
    if (doc.value("version", 0) != 1) throw Error(ErrorKind::Parse, "unsupported noun index version");
    NounIndex index;
    index.analyzer_ = text::analyzer_config_from_json(doc.at("analyzer"));
    try {
        for (const auto& [stem, codes] : doc.at("entries").items()) {
            auto& set = index.entries_[stem];
            for (const auto& code : codes) set.insert(code.get<std::string>());
            if (set.empty()) throw Error(ErrorKind::Parse, "index entry '" + stem + "' has no codes");
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("malformed noun index: ") + e.what());
    }
    return index;
}

std::vector<SearchHit> search_taxonomy(const Taxonomy& taxonomy, std::string_view query, std::size_t limit,
                                       const text::AnalyzerConfig& analyzer) {
    if (limit < 1) throw Error(ErrorKind::Precondition, "search limit must be >= 1");
    const auto stems = query_stems(query, analyzer);
    if (stems.empty()) throw Error(ErrorKind::Precondition, "empty search query");

    std::vector<SearchHit> hits;
    for (const auto& object : taxonomy.objects()) {
        // Synonyms are alternative names, so they rank with the label.
        auto name = field_stems(object.label, analyzer);
        for (const auto& synonym : object.synonyms) name.merge(field_stems(synonym, analyzer));
        const auto description = field_stems(object.description, analyzer);

        SearchHit hit{object.code, 0, 0};
        for (const auto& stem : stems) {
            const bool in_name = name.count(stem) > 0;
            if (in_name || description.count(stem) > 0) ++hit.matched_tokens;
            if (in_name) ++hit.label_matches;
        }
        if (hit.matched_tokens > 0) hits.push_back(std::move(hit));
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.matched_tokens != b.matched_tokens) return a.matched_tokens > b.matched_tokens;
        if (a.label_matches != b.label_matches) return a.label_matches > b.label_matches;
        return a.code < b.code;
    });
    if (hits.size() > limit) hits.resize(limit);
    return hits;
}

}  // namespace taxotrace
