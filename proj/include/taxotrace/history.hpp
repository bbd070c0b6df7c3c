#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace taxotrace {

enum class Action { Accept, Reject };

std::string_view to_string(Action action);
Action parse_action(std::string_view name);

struct FeedbackEvent {
    std::int64_t timestamp_ms = 0;
    std::string participant;
    std::string requirement_id;
    std::string stem;
    std::string code;
    Action action = Action::Accept;

    friend bool operator==(const FeedbackEvent&, const FeedbackEvent&) = default;
};

struct PairCounts {
    std::uint64_t accepts = 0;  // f_assoc
    std::uint64_t rejects = 0;

    friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

/// Global min/max of f_assoc over every stored (stem, code) pair.
struct AssociationBounds {
    std::uint64_t min = 0;
    std::uint64_t max = 0;
};

/// Accept/reject counts per (noun stem, object code). Counts only grow.
class HistoryStore {
public:
    using Key = std::pair<std::string, std::string>;

    void apply(const FeedbackEvent& event);

    PairCounts counts(std::string_view stem, std::string_view code) const;
    bool contains(std::string_view stem, std::string_view code) const;
    std::optional<AssociationBounds> bounds() const;

    const std::map<Key, PairCounts>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }

    friend bool operator==(const HistoryStore&, const HistoryStore&) = default;

private:
    std::map<Key, PairCounts> pairs_;
};

inline constexpr std::string_view kHistoryFormat = "taxotrace-history";

/// Append-only, line-delimited JSON event log. Each append is flushed before
/// it returns; a failed write raises Error(Persistence).
class EventLog {
public:
    /// Opens (creating if needed) a log file for appending.
    static std::unique_ptr<EventLog> open(const std::filesystem::path& path);

    /// Writes to a caller-owned stream; `write_header` emits the format line.
    explicit EventLog(std::ostream& out, bool write_header = true);

    void append(const FeedbackEvent& event);

    /// Rejects an event whose timestamp precedes the participant's previous
    /// event in this log.
    void check(const FeedbackEvent& event) const;

    static std::vector<FeedbackEvent> read(std::istream& in, std::string_view source_name = "<input>");
    static std::vector<FeedbackEvent> read_file(const std::filesystem::path& path);

private:
    EventLog() = default;

    std::unique_ptr<std::ofstream> owned_;
    std::ostream* out_ = nullptr;
    std::map<std::string, std::int64_t> last_timestamp_;
};

std::string encode_event(const FeedbackEvent& event);

/// Persists the event (when a log is given) and then applies it. Nothing is
/// applied when persisting fails.
void record_feedback(HistoryStore& history, const FeedbackEvent& event, EventLog* log = nullptr);

HistoryStore replay(const std::vector<FeedbackEvent>& events);

}  // namespace taxotrace
