#include "taxotrace/history.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "taxotrace/error.hpp"

namespace taxotrace {

std::string_view to_string(Action action) {
    return action == Action::Accept ? "accept" : "reject";
}

Action parse_action(std::string_view name) {
    if (name == "accept") return Action::Accept;
    if (name == "reject") return Action::Reject;
    throw Error(ErrorKind::Parse, "unknown action '" + std::string(name) + "'");
}

void HistoryStore::apply(const FeedbackEvent& event) {
    auto& counts = pairs_[{event.stem, event.code}];
    if (event.action == Action::Accept) {
        ++counts.accepts;
    } else {
        ++counts.rejects;
    }
}

PairCounts HistoryStore::counts(std::string_view stem, std::string_view code) const {
    const auto it = pairs_.find({std::string(stem), std::string(code)});
    return it == pairs_.end() ? PairCounts{} : it->second;
}

bool HistoryStore::contains(std::string_view stem, std::string_view code) const {
    return pairs_.count({std::string(stem), std::string(code)}) > 0;
}

std::optional<AssociationBounds> HistoryStore::bounds() const {
    if (pairs_.empty()) return std::nullopt;
    AssociationBounds b{pairs_.begin()->second.accepts, pairs_.begin()->second.accepts};
    for (const auto& [key, counts] : pairs_) {
        b.min = std::min(b.min, counts.accepts);
        b.max = std::max(b.max, counts.accepts);
    }
    return b;
}

std::string encode_event(const FeedbackEvent& event) {
    return nlohmann::json{{"ts", event.timestamp_ms},
                          {"participant", event.participant},
                          {"requirement", event.requirement_id},
                          {"stem", event.stem},
                          {"code", event.code},
                          {"action", to_string(event.action)}}
        .dump();
}

std::unique_ptr<EventLog> EventLog::open(const std::filesystem::path& path) {
    std::unique_ptr<EventLog> log(new EventLog());
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    std::vector<FeedbackEvent> existing;
    if (!fresh) existing = read_file(path);

    log->owned_ = std::make_unique<std::ofstream>(path, std::ios::app | std::ios::binary);
    if (!*log->owned_) throw Error(ErrorKind::Persistence, "cannot open event log " + path.string());
    log->out_ = log->owned_.get();
    for (const auto& event : existing) {
        auto& last = log->last_timestamp_[event.participant];
        last = std::max(last, event.timestamp_ms);
    }
    if (fresh) {
        *log->out_ << nlohmann::json{{"format", kHistoryFormat}, {"version", 1}}.dump() << '\n';
        log->out_->flush();
        if (!*log->out_) throw Error(ErrorKind::Persistence, "cannot write event log " + path.string());
    }
    return log;
}

EventLog::EventLog(std::ostream& out, bool write_header) : out_(&out) {
    if (write_header) {
        out << nlohmann::json{{"format", kHistoryFormat}, {"version", 1}}.dump() << '\n';
        out.flush();
        if (!out) throw Error(ErrorKind::Persistence, "cannot write event log header");
    }
}

void EventLog::check(const FeedbackEvent& event) const {
    const auto it = last_timestamp_.find(event.participant);
    if (it != last_timestamp_.end() && event.timestamp_ms < it->second) {
        throw Error(ErrorKind::Validation, "feedback timestamp " + std::to_string(event.timestamp_ms) +
                                               " precedes the previous event of participant '" +
                                               event.participant + "'");
    }
}

void EventLog::append(const FeedbackEvent& event) {
    check(event);
    *out_ << encode_event(event) << '\n';
    out_->flush();
    if (!*out_) throw Error(ErrorKind::Persistence, "failed to append feedback event to the log");
    last_timestamp_[event.participant] = event.timestamp_ms;
}

std::vector<FeedbackEvent> EventLog::read(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    std::vector<FeedbackEvent> events;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = source + ":" + std::to_string(line_no);
        try {
            const auto doc = nlohmann::json::parse(line);
            if (!have_header) {
                if (doc.value("format", std::string()) != kHistoryFormat || doc.value("version", 0) != 1) {
                    throw Error(ErrorKind::Parse, where + ": missing history log header");
                }
                have_header = true;
                continue;
            }
            FeedbackEvent event;
            event.timestamp_ms = doc.at("ts").get<std::int64_t>();
            event.participant = doc.at("participant").get<std::string>();
            event.requirement_id = doc.at("requirement").get<std::string>();
            event.stem = doc.at("stem").get<std::string>();
            event.code = doc.at("code").get<std::string>();
            event.action = parse_action(doc.at("action").get<std::string>());
            events.push_back(std::move(event));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, where + ": malformed event: " + e.what());
        }
    }
    return events;
}

std::vector<FeedbackEvent> EventLog::read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open event log " + path.string());
    return read(in, path.string());
}

void record_feedback(HistoryStore& history, const FeedbackEvent& event, EventLog* log) {
    if (event.stem.empty() || event.code.empty()) {
        throw Error(ErrorKind::Validation, "feedback event needs a stem and an object code");
    }
    if (log != nullptr) log->append(event);
    history.apply(event);
}

HistoryStore replay(const std::vector<FeedbackEvent>& events) {
    HistoryStore history;
    for (const auto& event : events) history.apply(event);
    return history;
}

}  // namespace taxotrace
