#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taxotrace/annotation_store.hpp"

namespace taxotrace::analysis {

/// Standard order statistic; mean of the middle two for even counts.
/// Throws Error(Precondition) on empty input.
double median(std::vector<double> values);

struct GroupSummary {
    std::string group;
    std::vector<double> values;
    double median = 0.0;
    std::size_t count = 0;
};

GroupSummary summarize(std::string group, std::vector<double> values);

/// M1: one summary per treatment (ccr first). Both groups must be non-empty.
std::vector<GroupSummary> duration_summary(const std::vector<AnnotationRecord>& records);

// ---------------------------------------------------------------------------
// M2: expert judgments

/// An association made by one participant, as judged by the experts.
struct AssociationInstance {
    std::string participant;
    Association association;

    friend auto operator<=>(const AssociationInstance&, const AssociationInstance&) = default;
};

/// "participant/stem[@position]:code" with the dataset escaping rules.
std::string encode_instance(const AssociationInstance& instance);
AssociationInstance decode_instance(std::string_view encoded);

struct Judgment {
    std::string expert;
    std::string requirement_id;
    std::string association;  // encoded AssociationInstance
    int points = 0;
};

/// CSV with columns format_version, expert, requirement_id, association, points.
std::vector<Judgment> import_judgments(std::istream& in, std::string_view source_name = "<input>");
std::vector<Judgment> import_judgments_file(const std::filesystem::path& path);
std::string export_judgments(const std::vector<Judgment>& judgments);

inline constexpr int kPointsPerRequirement = 10;

struct JudgmentRecord {
    std::string expert;
    std::string requirement_id;
    std::map<std::string, int> points;  // association -> points
};

/// Groups rows by (expert, requirement). Rejects negative points and an
/// association judged twice by the same expert.
std::vector<JudgmentRecord> group_judgments(const std::vector<Judgment>& judgments);

/// Every record sums to 10 points and every requirement was judged by
/// exactly `experts` experts. Throws Error(Validation) naming the offender.
void validate_judgments(const std::vector<JudgmentRecord>& records, std::size_t experts = 2);

struct AccuracyScore {
    std::string requirement_id;
    std::string association;
    double mean_points = 0.0;
};

/// Per association, the mean of the experts' points (an expert who did not
/// list an association gave it 0). Validates first.
std::vector<AccuracyScore> accuracy_scores(const std::vector<JudgmentRecord>& records, std::size_t experts = 2);

/// Counts of absolute point differences {0, 1, 2, 3, >3}.
struct AgreementBuckets {
    std::array<std::size_t, 5> counts{};

    std::size_t total() const;
    static std::size_t bucket_of(int a, int b);
};

/// Both experts must have judged the same associations of each requirement.
AgreementBuckets agreement_buckets(const std::vector<JudgmentRecord>& records, std::string_view expert_a,
                                   std::string_view expert_b);

// ---------------------------------------------------------------------------
// M3: consistency

enum class Encoding { OneHot, NumericCode };

std::string_view to_string(Encoding encoding);
Encoding parse_encoding(std::string_view name);

/// One participant's coding of a requirement: a label per term position,
/// label 1 meaning "no object".
struct CodedAnnotation {
    std::string participant;
    std::vector<int> labels;
};

struct AssociationVector {
    std::string requirement_id;
    std::string participant;
    Encoding encoding = Encoding::OneHot;
    std::vector<double> components;
};

/// One-hot expands each term position into indicators over the labels seen
/// at that position; numeric mode copies the codes verbatim. All annotations
/// must cover the same number of positions.
std::vector<AssociationVector> encode_vectors(std::string_view requirement_id,
                                              const std::vector<CodedAnnotation>& annotations, Encoding encoding);

double cosine(std::span<const double> a, std::span<const double> b);

/// Mean pairwise cosine over all unordered pairs (at least two vectors of
/// the same encoding and dimension).
double consistency(const std::vector<AssociationVector>& vectors);

/// Codes one requirement's records as label rows. Positions are the token
/// positions of `term_count`; associations without a position, or beyond it,
/// get one extra position per distinct stem. Labels are shared across all
/// records given: 1 = none, then 2.. over the sorted object-code sets.
std::vector<CodedAnnotation> code_annotations(const std::vector<AnnotationRecord>& records, std::size_t term_count);

// ---------------------------------------------------------------------------
// M4 / M5

enum class ConfidenceKind { Correct, Complete };

struct ConfidenceShares {
    double low = 0.0;      // -2, -1
    double neutral = 0.0;  // 0
    double high = 0.0;     // +1, +2
    std::size_t count = 0;
};

ConfidenceShares confidence_distribution(std::span<const int> values);
ConfidenceShares confidence_distribution(const std::vector<AnnotationRecord>& records, ConfidenceKind which);

// ---------------------------------------------------------------------------
// Mann-Whitney-Wilcoxon rank-sum test

enum class UMethod { Auto, Exact, Normal };

std::string_view to_string(UMethod method);
UMethod parse_umethod(std::string_view name);

struct UTestOptions {
    UMethod method = UMethod::Auto;
    // Auto uses the exact distribution while binomial(n1 + n2, n1) <= cap.
    std::uint64_t exact_cap = 200'000;
};

struct UTestResult {
    double u = 0.0;    // U of the first group
    double u_b = 0.0;  // U of the second group; u + u_b == n1 * n2
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double p = 1.0;  // two-sided
    UMethod method = UMethod::Exact;
    double z = 0.0;  // normal approximation only
};

/// Midranks for ties. The exact method enumerates the permutation
/// distribution of the observed (tied) ranks; the normal approximation is
/// tie-corrected with a continuity correction.
UTestResult mann_whitney_u(std::span<const double> group_a, std::span<const double> group_b,
                           const UTestOptions& options = {});

/// binomial(n, k), or nullopt-like UINT64_MAX on overflow.
std::uint64_t binomial(std::size_t n, std::size_t k);

}  // namespace taxotrace::analysis
