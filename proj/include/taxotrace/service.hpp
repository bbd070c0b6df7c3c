#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "taxotrace/analysis.hpp"
#include "taxotrace/annotation_store.hpp"
#include "taxotrace/embeddings.hpp"
#include "taxotrace/history.hpp"
#include "taxotrace/recommender.hpp"
#include "taxotrace/report.hpp"
#include "taxotrace/taxonomy.hpp"

namespace taxotrace {

/// Milliseconds since an arbitrary epoch; injectable for tests.
using Clock = std::function<std::int64_t()>;

Clock system_clock();

struct ServiceConfig {
    RecommenderConfig recommender;
    ReportOptions report;
    std::size_t default_search_limit = 20;
};

/// Everything the service reads but never owns.
struct ServiceData {
    const Taxonomy* taxonomy = nullptr;
    const NounIndex* index = nullptr;
    const EmbeddingStore* embeddings = nullptr;  // optional
    AnnotationStore* store = nullptr;
    EventLog* history_log = nullptr;                        // optional
    const std::vector<analysis::Judgment>* judgments = nullptr;  // optional
};

/// Request handling behind the /v1 endpoints. Bodies and results are JSON;
/// failures are taxotrace::Error. Sessions are independent; feedback from
/// all sessions is serialized through one writer lock on the history.
class Service {
public:
    Service(ServiceData data, HistoryStore history, ServiceConfig config = {}, Clock clock = system_clock());

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// {participant, treatment?}. Without a treatment the participant joins
    /// the arm with fewer participants (ties go to ccr). A participant known
    /// to the annotation store resumes after their last completed task.
    nlohmann::json create_session(const nlohmann::json& body);

    nlohmann::json get_task(std::string_view token);
    nlohmann::json post_decision(std::string_view token, const nlohmann::json& body);
    nlohmann::json post_annotation(std::string_view token, const nlohmann::json& body);
    nlohmann::json search(std::string_view token, std::string_view query, std::optional<std::size_t> limit);
    nlohmann::json report() const;
    nlohmann::json history_json() const;
    std::string export_dataset(std::optional<Treatment> filter) const;

    HistoryStore history_snapshot() const;

private:
    struct OpenTask {
        std::int64_t opened_ms = 0;
        std::vector<std::pair<std::string, std::string>> accepted;  // (stem, code) in decision order
        std::set<std::pair<std::string, std::string>> decided;
    };

    struct SessionState {
        std::string token;
        std::string participant;
        Treatment treatment = Treatment::Ccr;
        std::size_t next_index = 0;
        std::optional<OpenTask> task;
        std::int64_t last_event_ms = 0;
        std::mutex mutex;
    };

    SessionState& session(std::string_view token);
    std::vector<Suggestion> open_suggestions(const SessionState& state) const;
    nlohmann::json suggestion_json(const Suggestion& s) const;
    nlohmann::json accepted_json(const SessionState& state) const;
    std::int64_t now_for(SessionState& state);

    ServiceData data_;
    ServiceConfig config_;
    Clock clock_;
    Recommender recommender_;

    mutable std::shared_mutex history_mutex_;
    HistoryStore history_;

    std::mutex sessions_mutex_;
    std::map<std::string, std::unique_ptr<SessionState>, std::less<>> sessions_;
    std::map<std::string, std::string, std::less<>> token_of_participant_;
};

}  // namespace taxotrace
