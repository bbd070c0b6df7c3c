#include "taxotrace/annotation_store.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "taxotrace/csv.hpp"
#include "taxotrace/error.hpp"

namespace taxotrace {
namespace {

std::string format_double(double v) {
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
    return std::string(buffer, end);
}

template <typename T>
T parse_field(const std::string& field, std::string_view what, const std::string& where) {
    T value{};
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw Error(ErrorKind::Parse, where + ": bad " + std::string(what) + " '" + field + "'");
    }
    return value;
}

const std::vector<std::string> kDatasetColumns = {"format_version", "participant",   "treatment",
                                                  "requirement_id", "duration_s",    "conf_correct",
                                                  "conf_complete",  "associations"};

constexpr std::string_view kAssociationSpecials = "\\;:@/";

}  // namespace

std::string escape_field(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (kAssociationSpecials.find(c) != std::string_view::npos) out += '\\';
        out += c;
    }
    return out;
}

std::vector<std::string> split_unescaped(std::string_view s, char separator) {
    std::vector<std::string> parts(1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            parts.back() += s[i];
            parts.back() += s[++i];
        } else if (s[i] == separator) {
            parts.emplace_back();
        } else {
            parts.back() += s[i];
        }
    }
    return parts;
}

std::string unescape_field(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) ++i;
        out += s[i];
    }
    return out;
}

std::string_view to_string(Treatment treatment) {
    return treatment == Treatment::Ccr ? "ccr" : "search";
}

Treatment parse_treatment(std::string_view name) {
    if (name == "ccr") return Treatment::Ccr;
    if (name == "search") return Treatment::Search;
    throw Error(ErrorKind::Parse, "unknown treatment '" + std::string(name) + "'");
}

std::string encode_association(const Association& association) {
    std::string out = escape_field(association.stem);
    if (association.position) out += "@" + std::to_string(*association.position);
    out += ":" + escape_field(association.code);
    return out;
}

Association decode_association(std::string_view encoded) {
    const auto halves = split_unescaped(encoded, ':');
    if (halves.size() != 2 || halves[1].empty()) {
        throw Error(ErrorKind::Parse, "malformed association '" + std::string(encoded) + "'");
    }
    Association association;
    association.code = unescape_field(halves[1]);
    const auto head = split_unescaped(halves[0], '@');
    if (head.size() > 2 || head[0].empty()) {
        throw Error(ErrorKind::Parse, "malformed association '" + std::string(encoded) + "'");
    }
    association.stem = unescape_field(head[0]);
    if (head.size() == 2) {
        association.position = parse_field<std::size_t>(head[1], "term position", "association");
    }
    return association;
}

std::string encode_associations(const std::vector<Association>& associations) {
    std::string out;
    for (std::size_t i = 0; i < associations.size(); ++i) {
        if (i > 0) out += ';';
        out += encode_association(associations[i]);
    }
    return out;
}

std::vector<Association> decode_associations(std::string_view encoded) {
    std::vector<Association> out;
    if (encoded.empty()) return out;
    for (const auto& item : split_unescaped(encoded, ';')) out.push_back(decode_association(item));
    return out;
}

std::vector<Requirement> import_requirements(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    std::vector<Requirement> requirements;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = source + ":" + std::to_string(line_no);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::Parse, where + ": malformed record: " + e.what());
        }
        if (!have_header) {
            if (!doc.is_object() || doc.value("format", std::string()) != kRequirementsFormat ||
                doc.value("version", 0) != 1) {
                throw Error(ErrorKind::Parse, where + ": first line must be the requirements header");
            }
            have_header = true;
            continue;
        }
        Requirement requirement;
        try {
            requirement.id = doc.at("id").get<std::string>();
            requirement.text = doc.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, where + ": malformed record: " + e.what());
        }
        if (requirement.id.empty()) throw Error(ErrorKind::Validation, where + ": empty requirement id");
        if (!seen.insert(requirement.id).second) {
            throw Error(ErrorKind::Validation, where + ": duplicate requirement id '" + requirement.id + "'");
        }
        if (requirement.text.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw Error(ErrorKind::Validation, where + ": empty text for requirement '" + requirement.id + "'");
        }
        requirements.push_back(std::move(requirement));
    }
    if (!have_header) throw Error(ErrorKind::Parse, source + ": missing requirements header line");
    return requirements;
}

std::vector<Requirement> import_requirements_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open requirements file " + path.string());
    return import_requirements(in, path.string());
}

void write_requirements(std::ostream& out, const std::vector<Requirement>& requirements) {
    out << nlohmann::json{{"format", kRequirementsFormat}, {"version", 1}}.dump() << '\n';
    for (const auto& r : requirements) out << nlohmann::json{{"id", r.id}, {"text", r.text}}.dump() << '\n';
}

std::string dataset_header() {
    return csv::join(kDatasetColumns);
}

std::string dataset_row(const AnnotationRecord& record) {
    return csv::join({std::to_string(kDatasetFormatVersion), record.participant,
                      std::string(to_string(record.treatment)), record.requirement_id,
                      format_double(record.duration_seconds), std::to_string(record.conf_correct),
                      std::to_string(record.conf_complete), encode_associations(record.associations)});
}

std::string export_dataset(const std::vector<AnnotationRecord>& records) {
    std::string out = dataset_header() + "\n";
    for (const auto& record : records) out += dataset_row(record) + "\n";
    return out;
}

std::vector<AnnotationRecord> import_dataset(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) throw Error(ErrorKind::Parse, source + ": missing dataset header row");
    if (row != kDatasetColumns) throw Error(ErrorKind::Parse, source + ": unexpected dataset header row");

    std::vector<AnnotationRecord> records;
    while (reader.next(row)) {
        const auto where = source + ":" + std::to_string(reader.line());
        if (row.size() != kDatasetColumns.size()) {
            throw Error(ErrorKind::Parse, where + ": expected " + std::to_string(kDatasetColumns.size()) +
                                              " fields, got " + std::to_string(row.size()));
        }
        if (parse_field<int>(row[0], "format version", where) != kDatasetFormatVersion) {
            throw Error(ErrorKind::Parse, where + ": unsupported dataset format version " + row[0]);
        }
        AnnotationRecord record;
        record.participant = row[1];
        try {
            record.treatment = parse_treatment(row[2]);
            record.associations = decode_associations(row[7]);
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, where + ": " + e.what());
        }
        record.requirement_id = row[3];
        record.duration_seconds = parse_field<double>(row[4], "duration", where);
        record.conf_correct = parse_field<int>(row[5], "conf_correct", where);
        record.conf_complete = parse_field<int>(row[6], "conf_complete", where);
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<AnnotationRecord> import_dataset_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open dataset " + path.string());
    return import_dataset(in, path.string());
}

AnnotationStore::AnnotationStore(std::vector<Requirement> requirements,
                                 std::optional<std::filesystem::path> backing_file)
    : requirements_(std::move(requirements)) {
    for (std::size_t i = 0; i < requirements_.size(); ++i) {
        if (!requirement_index_.emplace(requirements_[i].id, i).second) {
            throw Error(ErrorKind::Validation, "duplicate requirement id '" + requirements_[i].id + "'");
        }
    }
    if (!backing_file) return;

    std::error_code ec;
    const bool fresh = !std::filesystem::exists(*backing_file, ec) ||
                       std::filesystem::file_size(*backing_file, ec) == 0;
    if (!fresh) {
        for (const auto& record : import_dataset_file(*backing_file)) {
            validate(record);
            publish(record, 0);
        }
    }
    backing_.emplace(*backing_file, std::ios::app | std::ios::binary);
    if (!*backing_) throw Error(ErrorKind::Persistence, "cannot open annotation store " + backing_file->string());
    if (fresh) {
        *backing_ << dataset_header() << '\n';
        backing_->flush();
        if (!*backing_) throw Error(ErrorKind::Persistence, "cannot write annotation store " + backing_file->string());
    }
}

const Requirement* AnnotationStore::find_requirement(std::string_view id) const {
    const auto it = requirement_index_.find(id);
    return it == requirement_index_.end() ? nullptr : &requirements_[it->second];
}

void AnnotationStore::validate(const AnnotationRecord& record) const {
    const auto who = "record of participant '" + record.participant + "' for '" + record.requirement_id + "'";
    if (record.participant.empty()) throw Error(ErrorKind::Validation, "annotation record without participant");
    if (record.conf_correct < kConfidenceMin || record.conf_correct > kConfidenceMax) {
        throw Error(ErrorKind::Validation, who + ": conf_correct " + std::to_string(record.conf_correct) +
                                               " outside the -2..+2 scale");
    }
    if (record.conf_complete < kConfidenceMin || record.conf_complete > kConfidenceMax) {
        throw Error(ErrorKind::Validation, who + ": conf_complete " + std::to_string(record.conf_complete) +
                                               " outside the -2..+2 scale");
    }
    if (!(record.duration_seconds >= 0.0) || !std::isfinite(record.duration_seconds)) {
        throw Error(ErrorKind::Validation, who + ": duration must be a non-negative number of seconds");
    }
    if (find_requirement(record.requirement_id) == nullptr) {
        throw Error(ErrorKind::Validation, who + ": unknown requirement id");
    }
    for (const auto& a : record.associations) {
        if (a.stem.empty() || a.code.empty()) throw Error(ErrorKind::Validation, who + ": incomplete association");
    }
    if (const auto it = sessions_.find(record.participant); it != sessions_.end()) {
        if (it->second.treatment != record.treatment) {
            throw Error(ErrorKind::Validation, who + ": participant already recorded under treatment '" +
                                                   std::string(to_string(it->second.treatment)) + "'");
        }
        for (const auto& done : it->second.completed) {
            if (done == record.requirement_id) throw Error(ErrorKind::Validation, who + ": already recorded");
        }
    }
}

void AnnotationStore::publish(const AnnotationRecord& record, std::int64_t timestamp_ms) {
    records_.push_back(record);
    auto [it, inserted] = sessions_.try_emplace(record.participant);
    auto& session = it->second;
    if (inserted) {
        session.participant = record.participant;
        session.treatment = record.treatment;
        session.first_timestamp_ms = timestamp_ms;
    }
    session.completed.push_back(record.requirement_id);
    session.last_timestamp_ms = timestamp_ms;
}

void AnnotationStore::append(const AnnotationRecord& record, std::int64_t timestamp_ms) {
    std::lock_guard lock(mutex_);
    validate(record);
    if (backing_) {
        *backing_ << dataset_row(record) << '\n';
        backing_->flush();
        if (!*backing_) throw Error(ErrorKind::Persistence, "failed to append annotation record");
    }
    publish(record, timestamp_ms);
}

std::vector<AnnotationRecord> AnnotationStore::snapshot(std::optional<Treatment> filter) const {
    std::lock_guard lock(mutex_);
    std::vector<AnnotationRecord> out;
    for (const auto& record : records_) {
        if (!filter || record.treatment == *filter) out.push_back(record);
    }
    return out;
}

std::string AnnotationStore::export_dataset(std::optional<Treatment> filter) const {
    return taxotrace::export_dataset(snapshot(filter));
}

std::optional<Session> AnnotationStore::session(std::string_view participant) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(participant);
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
}

}  // namespace taxotrace
