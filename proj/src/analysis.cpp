#include "taxotrace/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <set>

#include "taxotrace/csv.hpp"
#include "taxotrace/error.hpp"

namespace taxotrace::analysis {
namespace {

const std::vector<std::string> kJudgmentColumns = {"format_version", "expert", "requirement_id", "association",
                                                   "points"};

int parse_int(const std::string& field, const std::string& where) {
    int value = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw Error(ErrorKind::Parse, where + ": bad integer '" + field + "'");
    }
    return value;
}

std::string record_name(const JudgmentRecord& r) {
    return "expert '" + r.expert + "' on requirement '" + r.requirement_id + "'";
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorKind::Precondition, "median of an empty group");
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

GroupSummary summarize(std::string group, std::vector<double> values) {
    if (values.empty()) throw Error(ErrorKind::Precondition, "group '" + group + "' is empty");
    GroupSummary summary;
    summary.group = std::move(group);
    summary.median = median(values);
    summary.count = values.size();
    summary.values = std::move(values);
    return summary;
}

std::vector<GroupSummary> duration_summary(const std::vector<AnnotationRecord>& records) {
    std::vector<double> ccr;
    std::vector<double> search;
    for (const auto& r : records) (r.treatment == Treatment::Ccr ? ccr : search).push_back(r.duration_seconds);
    return {summarize("ccr", std::move(ccr)), summarize("search", std::move(search))};
}

std::string encode_instance(const AssociationInstance& instance) {
    return escape_field(instance.participant) + "/" + encode_association(instance.association);
}

AssociationInstance decode_instance(std::string_view encoded) {
    const auto parts = split_unescaped(encoded, '/');
    if (parts.size() != 2 || parts[0].empty()) {
        throw Error(ErrorKind::Parse, "malformed association instance '" + std::string(encoded) + "'");
    }
    return {unescape_field(parts[0]), decode_association(parts[1])};
}

std::vector<Judgment> import_judgments(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row) || row != kJudgmentColumns) {
        throw Error(ErrorKind::Parse, source + ": missing or unexpected judgment header row");
    }
    std::vector<Judgment> judgments;
    while (reader.next(row)) {
        const auto where = source + ":" + std::to_string(reader.line());
        if (row.size() != kJudgmentColumns.size()) {
            throw Error(ErrorKind::Parse, where + ": expected 5 fields, got " + std::to_string(row.size()));
        }
        if (parse_int(row[0], where) != kDatasetFormatVersion) {
            throw Error(ErrorKind::Parse, where + ": unsupported judgment format version " + row[0]);
        }
        judgments.push_back({row[1], row[2], row[3], parse_int(row[4], where)});
    }
    return judgments;
}

std::vector<Judgment> import_judgments_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open judgment file " + path.string());
    return import_judgments(in, path.string());
}

std::string export_judgments(const std::vector<Judgment>& judgments) {
    std::string out = csv::join(kJudgmentColumns) + "\n";
    for (const auto& j : judgments) {
        out += csv::join({std::to_string(kDatasetFormatVersion), j.expert, j.requirement_id, j.association,
                          std::to_string(j.points)}) +
               "\n";
    }
    return out;
}

std::vector<JudgmentRecord> group_judgments(const std::vector<Judgment>& judgments) {
    std::map<std::pair<std::string, std::string>, JudgmentRecord> grouped;
    for (const auto& j : judgments) {
        auto& record = grouped[{j.expert, j.requirement_id}];
        record.expert = j.expert;
        record.requirement_id = j.requirement_id;
        if (j.points < 0) {
            throw Error(ErrorKind::Validation, record_name(record) + ": negative points for '" + j.association + "'");
        }
        if (!record.points.emplace(j.association, j.points).second) {
            throw Error(ErrorKind::Validation, record_name(record) + ": association '" + j.association +
                                                   "' judged twice");
        }
    }
    std::vector<JudgmentRecord> out;
    for (auto& [key, record] : grouped) out.push_back(std::move(record));
    return out;
}

void validate_judgments(const std::vector<JudgmentRecord>& records, std::size_t experts) {
    std::map<std::string, std::set<std::string>> experts_per_requirement;
    for (const auto& r : records) {
        int sum = 0;
        for (const auto& [association, points] : r.points) {
            if (points < 0) throw Error(ErrorKind::Validation, record_name(r) + ": negative points");
            sum += points;
        }
        if (sum != kPointsPerRequirement) {
            throw Error(ErrorKind::Validation, record_name(r) + ": points sum to " + std::to_string(sum) +
                                                   ", expected " + std::to_string(kPointsPerRequirement));
        }
        if (!experts_per_requirement[r.requirement_id].insert(r.expert).second) {
            throw Error(ErrorKind::Validation, record_name(r) + ": judged twice");
        }
    }
    for (const auto& [requirement, who] : experts_per_requirement) {
        if (who.size() != experts) {
            throw Error(ErrorKind::Validation, "requirement '" + requirement + "' was judged by " +
                                                   std::to_string(who.size()) + " experts, expected " +
                                                   std::to_string(experts));
        }
    }
}

std::vector<AccuracyScore> accuracy_scores(const std::vector<JudgmentRecord>& records, std::size_t experts) {
    validate_judgments(records, experts);
    std::map<std::string, std::map<std::string, int>> totals;  // requirement -> association -> points
    for (const auto& r : records) {
        auto& per_association = totals[r.requirement_id];
        for (const auto& [association, points] : r.points) per_association[association] += points;
    }
    std::vector<AccuracyScore> out;
    for (const auto& [requirement, per_association] : totals) {
        for (const auto& [association, points] : per_association) {
            out.push_back({requirement, association, static_cast<double>(points) / static_cast<double>(experts)});
        }
    }
    return out;
}

std::size_t AgreementBuckets::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t AgreementBuckets::bucket_of(int a, int b) {
    const auto diff = static_cast<std::size_t>(std::abs(a - b));
    return std::min<std::size_t>(diff, 4);
}

AgreementBuckets agreement_buckets(const std::vector<JudgmentRecord>& records, std::string_view expert_a,
                                   std::string_view expert_b) {
    std::map<std::string, const JudgmentRecord*> by_a;
    std::map<std::string, const JudgmentRecord*> by_b;
    for (const auto& r : records) {
        if (r.expert == expert_a) by_a[r.requirement_id] = &r;
        if (r.expert == expert_b) by_b[r.requirement_id] = &r;
    }
    AgreementBuckets buckets;
    for (const auto& [requirement, a] : by_a) {
        const auto it = by_b.find(requirement);
        if (it == by_b.end()) {
            throw Error(ErrorKind::Validation, "requirement '" + requirement + "' was not judged by expert '" +
                                                   std::string(expert_b) + "'");
        }
        const auto* b = it->second;
        if (a->points.size() != b->points.size()) {
            throw Error(ErrorKind::Validation, "experts judged different associations on requirement '" +
                                                   requirement + "'");
        }
        for (const auto& [association, points] : a->points) {
            const auto other = b->points.find(association);
            if (other == b->points.end()) {
                throw Error(ErrorKind::Validation, "association '" + association + "' on requirement '" +
                                                       requirement + "' not judged by expert '" +
                                                       std::string(expert_b) + "'");
            }
            ++buckets.counts[AgreementBuckets::bucket_of(points, other->second)];
        }
    }
    for (const auto& [requirement, b] : by_b) {
        if (by_a.count(requirement) == 0) {
            throw Error(ErrorKind::Validation, "requirement '" + requirement + "' was not judged by expert '" +
                                                   std::string(expert_a) + "'");
        }
    }
    return buckets;
}

std::string_view to_string(Encoding encoding) {
    return encoding == Encoding::OneHot ? "one-hot" : "numeric";
}

Encoding parse_encoding(std::string_view name) {
    if (name == "one-hot") return Encoding::OneHot;
    if (name == "numeric") return Encoding::NumericCode;
    throw Error(ErrorKind::Parse, "unknown encoding '" + std::string(name) + "'");
}

std::vector<AssociationVector> encode_vectors(std::string_view requirement_id,
                                              const std::vector<CodedAnnotation>& annotations, Encoding encoding) {
    std::vector<AssociationVector> out;
    if (annotations.empty()) return out;
    const auto positions = annotations.front().labels.size();
    for (const auto& a : annotations) {
        if (a.labels.size() != positions) {
            throw Error(ErrorKind::Validation, "participant '" + a.participant + "' coded " +
                                                   std::to_string(a.labels.size()) + " term positions, expected " +
                                                   std::to_string(positions));
        }
    }
    std::vector<std::vector<int>> alphabet(positions);
    if (encoding == Encoding::OneHot) {
        for (std::size_t p = 0; p < positions; ++p) {
            std::set<int> seen;
            for (const auto& a : annotations) seen.insert(a.labels[p]);
            alphabet[p].assign(seen.begin(), seen.end());
        }
    }
    for (const auto& a : annotations) {
        AssociationVector v{std::string(requirement_id), a.participant, encoding, {}};
        for (std::size_t p = 0; p < positions; ++p) {
            if (encoding == Encoding::NumericCode) {
                v.components.push_back(static_cast<double>(a.labels[p]));
                continue;
            }
            for (int label : alphabet[p]) v.components.push_back(label == a.labels[p] ? 1.0 : 0.0);
        }
        out.push_back(std::move(v));
    }
    return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::Precondition, "cosine of vectors with different dimensions");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::Precondition, "cosine of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double consistency(const std::vector<AssociationVector>& vectors) {
    if (vectors.size() < 2) throw Error(ErrorKind::Precondition, "consistency needs at least two vectors");
    for (const auto& v : vectors) {
        if (v.encoding != vectors.front().encoding) {
            throw Error(ErrorKind::Precondition, "consistency over mixed encodings");
        }
    }
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        for (std::size_t j = i + 1; j < vectors.size(); ++j) {
            sum += cosine(vectors[i].components, vectors[j].components);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

std::vector<CodedAnnotation> code_annotations(const std::vector<AnnotationRecord>& records, std::size_t term_count) {
    std::set<std::string> extra_stems;
    for (const auto& r : records) {
        for (const auto& a : r.associations) {
            if (!a.position || *a.position >= term_count) extra_stems.insert(a.stem);
        }
    }
    std::map<std::string, std::size_t> extra_position;
    for (const auto& stem : extra_stems) extra_position.emplace(stem, term_count + extra_position.size());
    const auto positions = term_count + extra_stems.size();

    std::vector<std::vector<std::set<std::string>>> codes(records.size(),
                                                          std::vector<std::set<std::string>>(positions));
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (const auto& a : records[i].associations) {
            const auto p = (a.position && *a.position < term_count) ? *a.position : extra_position.at(a.stem);
            codes[i][p].insert(a.code);
        }
    }
    const auto label_text = [](const std::set<std::string>& set) {
        std::string out;
        for (const auto& code : set) out += (out.empty() ? "" : "+") + code;
        return out;
    };
    std::set<std::string> alphabet;
    for (const auto& row : codes) {
        for (const auto& set : row) {
            if (!set.empty()) alphabet.insert(label_text(set));
        }
    }
    std::map<std::string, int> label_of;
    for (const auto& text : alphabet) label_of.emplace(text, static_cast<int>(label_of.size()) + 2);

    std::vector<CodedAnnotation> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        CodedAnnotation coded{records[i].participant, {}};
        for (const auto& set : codes[i]) coded.labels.push_back(set.empty() ? 1 : label_of.at(label_text(set)));
        out.push_back(std::move(coded));
    }
    return out;
}

ConfidenceShares confidence_distribution(std::span<const int> values) {
    if (values.empty()) throw Error(ErrorKind::Precondition, "confidence distribution of an empty set");
    std::size_t low = 0;
    std::size_t neutral = 0;
    std::size_t high = 0;
    for (int v : values) {
        if (v < kConfidenceMin || v > kConfidenceMax) {
            throw Error(ErrorKind::Validation, "confidence " + std::to_string(v) + " outside the -2..+2 scale");
        }
        if (v < 0) {
            ++low;
        } else if (v == 0) {
            ++neutral;
        } else {
            ++high;
        }
    }
    const auto n = static_cast<double>(values.size());
    return {static_cast<double>(low) / n, static_cast<double>(neutral) / n, static_cast<double>(high) / n,
            values.size()};
}

ConfidenceShares confidence_distribution(const std::vector<AnnotationRecord>& records, ConfidenceKind which) {
    std::vector<int> values;
    for (const auto& r : records) values.push_back(which == ConfidenceKind::Correct ? r.conf_correct : r.conf_complete);
    return confidence_distribution(values);
}

std::string_view to_string(UMethod method) {
    switch (method) {
        case UMethod::Auto: return "auto";
        case UMethod::Exact: return "exact";
        case UMethod::Normal: return "normal";
    }
    return "auto";
}

UMethod parse_umethod(std::string_view name) {
    if (name == "auto") return UMethod::Auto;
    if (name == "exact") return UMethod::Exact;
    if (name == "normal") return UMethod::Normal;
    throw Error(ErrorKind::Parse, "unknown U-test method '" + std::string(name) + "'");
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        // result * (n - k + i) is divisible by i; cancel first to delay overflow.
        const std::uint64_t g = std::gcd(result, static_cast<std::uint64_t>(i));
        const std::uint64_t factor = (n - k + i) / (i / g);
        result /= g;
        if (result > kMax / factor) return kMax;
        result *= factor;
    }
    return result;
}

UTestResult mann_whitney_u(std::span<const double> group_a, std::span<const double> group_b,
                           const UTestOptions& options) {
    if (group_a.empty() || group_b.empty()) throw Error(ErrorKind::Precondition, "U test needs two non-empty groups");
    const auto n1 = group_a.size();
    const auto n2 = group_b.size();
    const auto n = n1 + n2;

    std::vector<std::pair<double, bool>> pooled;  // value, belongs to group a
    pooled.reserve(n);
    for (double v : group_a) pooled.emplace_back(v, true);
    for (double v : group_b) pooled.emplace_back(v, false);
    std::sort(pooled.begin(), pooled.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    // Doubled midranks stay integral: a tie run over 1-based ranks i..j gets i + j.
    std::vector<std::int64_t> doubled_rank(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
        const auto rank2 = static_cast<std::int64_t>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) doubled_rank[k] = rank2;
        const auto t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    std::int64_t rank_sum2_a = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (pooled[k].second) rank_sum2_a += doubled_rank[k];
    }
    const auto n1i = static_cast<std::int64_t>(n1);
    const auto n1n2 = static_cast<std::int64_t>(n1 * n2);
    const std::int64_t u2 = rank_sum2_a - n1i * (n1i + 1);  // 2 * U_a

    UTestResult result;
    result.n1 = n1;
    result.n2 = n2;
    result.u = static_cast<double>(u2) / 2.0;
    result.u_b = static_cast<double>(n1n2) - result.u;

    const auto permutations = binomial(n, n1);
    UMethod method = options.method;
    if (method == UMethod::Auto) method = permutations <= options.exact_cap ? UMethod::Exact : UMethod::Normal;
    if (method == UMethod::Exact && permutations > (std::uint64_t{1} << 62)) {
        throw Error(ErrorKind::Precondition, "exact U test is infeasible for these group sizes");
    }
    result.method = method;

    if (method == UMethod::Exact) {
        // ways[k][s]: subsets of size k of the pooled ranks with doubled rank sum s.
        const auto max_sum = static_cast<std::size_t>(n * (n + 1));
        std::vector<std::vector<std::uint64_t>> ways(n1 + 1, std::vector<std::uint64_t>(max_sum + 1, 0));
        ways[0][0] = 1;
        for (std::size_t item = 0; item < n; ++item) {
            const auto r = static_cast<std::size_t>(doubled_rank[item]);
            for (std::size_t k = std::min(item + 1, n1); k >= 1; --k) {
                for (std::size_t s = max_sum - r + 1; s-- > 0;) {
                    if (ways[k - 1][s] != 0) ways[k][s + r] += ways[k - 1][s];
                }
            }
        }
        const std::int64_t observed = std::abs(u2 - n1n2);
        std::uint64_t extreme = 0;
        for (std::size_t s = 0; s <= max_sum; ++s) {
            if (ways[n1][s] == 0) continue;
            const std::int64_t u2_s = static_cast<std::int64_t>(s) - n1i * (n1i + 1);
            if (std::abs(u2_s - n1n2) >= observed) extreme += ways[n1][s];
        }
        result.p = static_cast<double>(extreme) / static_cast<double>(permutations);
        return result;
    }

    const double mean = static_cast<double>(n1n2) / 2.0;
    const double nd = static_cast<double>(n);
    const double variance =
        static_cast<double>(n1n2) / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    const double deviation = result.u - mean;
    if (!(variance > 0.0)) {
        result.p = 1.0;
        result.z = 0.0;
        return result;
    }
    const double correction = deviation == 0.0 ? 0.0 : 0.5;
    result.z = (std::abs(deviation) - correction) / std::sqrt(variance);
    result.p = std::min(1.0, std::erfc(std::abs(result.z) / std::sqrt(2.0)));
    return result;
}

}  // namespace taxotrace::analysis
