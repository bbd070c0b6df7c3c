#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taxotrace/requirement.hpp"

namespace taxotrace {

enum class Treatment { Ccr, Search };

std::string_view to_string(Treatment treatment);
Treatment parse_treatment(std::string_view name);

inline constexpr int kConfidenceMin = -2;
inline constexpr int kConfidenceMax = 2;

/// A participant's link from a requirement term to a taxonomy object. The
/// term position (token index in the requirement) is optional so that both
/// stem-keyed and position-keyed consistency encodings are possible.
struct Association {
    std::string stem;
    std::optional<std::size_t> position;
    std::string code;

    friend bool operator==(const Association&, const Association&) = default;
    friend auto operator<=>(const Association&, const Association&) = default;
};

/// Backslash-escapes '\\', ';', ':', '@' and '/'.
std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);
/// Splits on `separator` where it is not escaped; escapes are kept.
std::vector<std::string> split_unescaped(std::string_view s, char separator);

/// "stem[@position]:code" with '\' escaping of '\', ';', ':', '@' and '/'.
std::string encode_association(const Association& association);
Association decode_association(std::string_view encoded);
std::string encode_associations(const std::vector<Association>& associations);  // ';'-joined
std::vector<Association> decode_associations(std::string_view encoded);

struct AnnotationRecord {
    std::string participant;
    Treatment treatment = Treatment::Ccr;
    std::string requirement_id;
    double duration_seconds = 0.0;  // M1
    int conf_correct = 0;           // M5
    int conf_complete = 0;          // M4
    std::vector<Association> associations;

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct Session {
    std::string participant;
    Treatment treatment = Treatment::Ccr;
    std::vector<std::string> completed;  // requirement ids in completion order
    std::int64_t first_timestamp_ms = 0;
    std::int64_t last_timestamp_ms = 0;
};

inline constexpr std::string_view kRequirementsFormat = "taxotrace-requirements";
inline constexpr int kDatasetFormatVersion = 1;

/// Line-delimited JSON: a header line then {"id": ..., "text": ...} records.
std::vector<Requirement> import_requirements(std::istream& in, std::string_view source_name = "<input>");
std::vector<Requirement> import_requirements_file(const std::filesystem::path& path);
void write_requirements(std::ostream& out, const std::vector<Requirement>& requirements);

/// Tabular dataset (CSV with a format_version column).
std::string dataset_header();
std::string dataset_row(const AnnotationRecord& record);
std::string export_dataset(const std::vector<AnnotationRecord>& records);
std::vector<AnnotationRecord> import_dataset(std::istream& in, std::string_view source_name = "<input>");
std::vector<AnnotationRecord> import_dataset_file(const std::filesystem::path& path);

/// Requirements plus the append-only annotation ledger. With a backing
/// file every append is written and flushed before it becomes visible.
class AnnotationStore {
public:
    explicit AnnotationStore(std::vector<Requirement> requirements,
                             std::optional<std::filesystem::path> backing_file = std::nullopt);

    AnnotationStore(const AnnotationStore&) = delete;
    AnnotationStore& operator=(const AnnotationStore&) = delete;

    /// Validates (scale, duration, known requirement, no repeat for the same
    /// participant and requirement, fixed treatment per participant),
    /// persists, then publishes the record.
    void append(const AnnotationRecord& record, std::int64_t timestamp_ms = 0);

    std::vector<AnnotationRecord> snapshot(std::optional<Treatment> filter = std::nullopt) const;
    std::string export_dataset(std::optional<Treatment> filter = std::nullopt) const;
    std::optional<Session> session(std::string_view participant) const;

    const std::vector<Requirement>& requirements() const { return requirements_; }
    const Requirement* find_requirement(std::string_view id) const;

    /// Throws Error(Validation) if the record breaks a record invariant.
    void validate(const AnnotationRecord& record) const;

private:
    void publish(const AnnotationRecord& record, std::int64_t timestamp_ms);

    std::vector<Requirement> requirements_;
    std::map<std::string, std::size_t, std::less<>> requirement_index_;
    std::vector<AnnotationRecord> records_;
    std::map<std::string, Session, std::less<>> sessions_;
    std::optional<std::ofstream> backing_;
    mutable std::mutex mutex_;
};

}  // namespace taxotrace
