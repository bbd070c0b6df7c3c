#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <streambuf>

#include "support.hpp"
#include "taxotrace/error.hpp"
#include "taxotrace/history.hpp"

using namespace taxotrace;

namespace {

FeedbackEvent event(std::string stem, std::string code, Action action, std::int64_t ts = 0,
                    std::string participant = "P1") {
    return {ts, std::move(participant), "R1", std::move(stem), std::move(code), action};
}

/// A sink that refuses every write, standing in for a full disk.
class FailingBuffer : public std::streambuf {
protected:
    int_type overflow(int_type) override { return traits_type::eof(); }
    std::streamsize xsputn(const char*, std::streamsize) override { return 0; }
};

}  // namespace

TEST(HistoryStore, AcceptAndRejectCounts) {
    HistoryStore history;
    history.apply(event("bridge", "A10", Action::Accept));
    EXPECT_EQ(history.counts("bridge", "A10"), (PairCounts{1, 0}));
    history.apply(event("tunnel", "B10", Action::Reject));
    EXPECT_EQ(history.counts("tunnel", "B10"), (PairCounts{0, 1}));
    EXPECT_TRUE(history.contains("tunnel", "B10"));
    EXPECT_FALSE(history.contains("tunnel", "A10"));
    EXPECT_EQ(history.counts("tunnel", "A10"), (PairCounts{0, 0}));
}

TEST(HistoryStore, GlobalBounds) {
    HistoryStore history;
    EXPECT_FALSE(history.bounds().has_value());
    history.apply(event("a", "X", Action::Accept));
    history.apply(event("a", "X", Action::Accept));
    history.apply(event("b", "X", Action::Reject));
    const auto bounds = history.bounds();
    ASSERT_TRUE(bounds.has_value());
    EXPECT_EQ(bounds->min, 0u);
    EXPECT_EQ(bounds->max, 2u);
}

TEST(EventLog, RoundTripThroughStream) {
    std::stringstream buffer;
    EventLog log(buffer);
    const std::vector<FeedbackEvent> events = {event("bridge", "A10", Action::Accept, 10),
                                               event("bro,väg \"x\"", "A:20", Action::Reject, 10),
                                               event("tunnel", "B10", Action::Reject, 11, "P2")};
    HistoryStore live;
    for (const auto& e : events) record_feedback(live, e, &log);
    std::istringstream in(buffer.str());
    const auto back = EventLog::read(in);
    EXPECT_EQ(back, events);
    EXPECT_EQ(replay(back), live);
}

TEST(EventLog, FileAppendAcrossReopen) {
    testsupport::TempDir dir;
    const auto path = dir / "history.jsonl";
    HistoryStore live;
    {
        auto log = EventLog::open(path);
        record_feedback(live, event("bridge", "A10", Action::Accept, 1), log.get());
    }
    {
        auto log = EventLog::open(path);
        record_feedback(live, event("bridge", "A10", Action::Reject, 2), log.get());
        // Per-participant timestamps are checked against the reopened file.
        EXPECT_THROW(log->append(event("bridge", "A10", Action::Reject, 1)), Error);
        EXPECT_NO_THROW(log->append(event("bridge", "A10", Action::Reject, 1, "P2")));
    }
    const auto events = EventLog::read_file(path);
    ASSERT_EQ(events.size(), 3u);
    const auto text = testsupport::read_file(path);
    EXPECT_EQ(text.rfind("{\"format\":\"taxotrace-history\",\"version\":1}\n", 0), 0u);
}

TEST(EventLog, PersistenceFailureLeavesStateUntouched) {
    FailingBuffer buffer;
    std::ostream sink(&buffer);
    EventLog log(sink, false);
    HistoryStore history;
    try {
        record_feedback(history, event("bridge", "A10", Action::Accept), &log);
        FAIL() << "expected a persistence error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Persistence);
    }
    EXPECT_EQ(history.size(), 0u);
}

TEST(EventLog, OutOfOrderEventIsRejectedBeforeApplying) {
    std::stringstream buffer;
    EventLog log(buffer);
    HistoryStore history;
    record_feedback(history, event("a", "X", Action::Accept, 5), &log);
    EXPECT_THROW(record_feedback(history, event("a", "X", Action::Accept, 4), &log), Error);
    EXPECT_EQ(history.counts("a", "X").accepts, 1u);
}

TEST(EventLog, MalformedInput) {
    std::istringstream no_header(R"({"ts":1,"participant":"P","requirement":"R","stem":"s","code":"c","action":"accept"})");
    EXPECT_THROW(EventLog::read(no_header), Error);
    std::istringstream bad_action(
        "{\"format\":\"taxotrace-history\",\"version\":1}\n"
        R"({"ts":1,"participant":"P","requirement":"R","stem":"s","code":"c","action":"maybe"})");
    EXPECT_THROW(EventLog::read(bad_action), Error);
    std::istringstream truncated("{\"format\":\"taxotrace-history\",\"version\":1}\n{\"ts\":1,");
    try {
        EventLog::read(truncated, "h.jsonl");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("h.jsonl:2"), std::string::npos);
    }
}

// Counts are plain sums: replaying a log twice equals replaying it once and
// then applying the same events again.
TEST(Replay, DoubleReplayIsSumOfCounts) {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<FeedbackEvent> log;
        const int n = static_cast<int>(rng() % 50);
        for (int i = 0; i < n; ++i) {
            log.push_back(event(std::string(1, static_cast<char>('a' + rng() % 4)), "C" + std::to_string(rng() % 3),
                                rng() % 2 ? Action::Accept : Action::Reject, i));
        }
        auto doubled = log;
        doubled.insert(doubled.end(), log.begin(), log.end());
        HistoryStore incremental = replay(log);
        for (const auto& e : log) incremental.apply(e);
        EXPECT_EQ(replay(doubled), incremental);
        const auto once = replay(log);
        const auto twice = replay(doubled);
        for (const auto& [key, counts] : twice.pairs()) {
            const auto single = once.counts(key.first, key.second);
            EXPECT_EQ(counts.accepts, 2 * single.accepts);
            EXPECT_EQ(counts.rejects, 2 * single.rejects);
        }
    }
}

TEST(Action, ParseAndPrint) {
    EXPECT_EQ(parse_action("accept"), Action::Accept);
    EXPECT_EQ(parse_action("reject"), Action::Reject);
    EXPECT_EQ(to_string(Action::Reject), "reject");
    EXPECT_THROW(parse_action("Accept!"), Error);
}
