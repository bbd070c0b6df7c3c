#include "taxotrace/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "taxotrace/error.hpp"
#include "taxotrace/textproc.hpp"

namespace taxotrace {
namespace {

using nlohmann::json;

std::string new_token() {
    static std::mutex mutex;
    static std::random_device device;
    std::lock_guard lock(mutex);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string token;
    for (int i = 0; i < 4; ++i) {
        auto word = device();
        for (int j = 0; j < 8; ++j, word >>= 4) token += kHex[word & 0xF];
    }
    return token;
}

const json& field(const json& body, const char* name) {
    if (!body.is_object()) throw Error(ErrorKind::Parse, "request body must be a JSON object");
    const auto it = body.find(name);
    if (it == body.end()) throw Error(ErrorKind::Validation, std::string("missing field '") + name + "'");
    return *it;
}

std::string string_field(const json& body, const char* name) {
    const auto& v = field(body, name);
    if (!v.is_string() || v.get_ref<const std::string&>().empty()) {
        throw Error(ErrorKind::Validation, std::string("field '") + name + "' must be a non-empty string");
    }
    return v.get<std::string>();
}

int int_field(const json& body, const char* name) {
    const auto& v = field(body, name);
    if (!v.is_number_integer()) throw Error(ErrorKind::Validation, std::string("field '") + name + "' must be an integer");
    return v.get<int>();
}

json component_json(const Component& c) {
    return c.present() ? json(c.value) : json(nullptr);
}

json occurrence_json(const text::NounOccurrence& o) {
    return {{"surface", o.surface},
            {"stem", o.stem},
            {"begin", o.span.begin},
            {"end", o.span.end},
            {"source", o.source == text::OccurrenceSource::WholeToken ? "whole-token" : "compound-part"}};
}

/// Index of the requirement token that contains byte offset `begin`.
std::optional<std::size_t> token_position(const std::vector<text::Token>& tokens, std::size_t begin) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].span.begin <= begin && begin < tokens[i].span.end) return i;
    }
    return std::nullopt;
}

}  // namespace

Clock system_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

Service::Service(ServiceData data, HistoryStore history, ServiceConfig config, Clock clock)
    : data_(data),
      config_(std::move(config)),
      clock_(std::move(clock)),
      recommender_(*data.index, data.embeddings, config_.recommender),
      history_(std::move(history)) {
    if (data_.taxonomy == nullptr || data_.index == nullptr || data_.store == nullptr) {
        throw Error(ErrorKind::Precondition, "service needs a taxonomy, an index and an annotation store");
    }
}

Service::SessionState& Service::session(std::string_view token) {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(token);
    if (token.empty() || it == sessions_.end()) throw Error(ErrorKind::Unauthorized, "unknown session token");
    return *it->second;
}

std::int64_t Service::now_for(SessionState& state) {
    // Event timestamps never go backwards within a participant's log.
    state.last_event_ms = std::max(state.last_event_ms, clock_());
    return state.last_event_ms;
}

json Service::create_session(const json& body) {
    const auto participant = string_field(body, "participant");
    std::optional<Treatment> requested;
    if (body.contains("treatment") && !body["treatment"].is_null()) {
        if (!body["treatment"].is_string()) throw Error(ErrorKind::Validation, "field 'treatment' must be a string");
        requested = parse_treatment(body["treatment"].get<std::string>());
    }

    std::lock_guard lock(sessions_mutex_);
    if (const auto it = token_of_participant_.find(participant); it != token_of_participant_.end()) {
        auto& state = *sessions_.at(it->second);
        if (requested && *requested != state.treatment) {
            throw Error(ErrorKind::Conflict, "participant '" + participant + "' is already in the " +
                                                 std::string(to_string(state.treatment)) + " arm");
        }
        return {{"token", state.token}, {"participant", participant}, {"treatment", to_string(state.treatment)},
                {"next_index", state.next_index}, {"resumed", true}};
    }

    const auto stored = data_.store->session(participant);
    Treatment treatment = Treatment::Ccr;
    if (stored) {
        if (requested && *requested != stored->treatment) {
            throw Error(ErrorKind::Conflict, "participant '" + participant + "' is already in the " +
                                                 std::string(to_string(stored->treatment)) + " arm");
        }
        treatment = stored->treatment;
    } else if (requested) {
        treatment = *requested;
    } else {
        std::map<std::string, Treatment> arms;
        for (const auto& r : data_.store->snapshot()) arms.emplace(r.participant, r.treatment);
        for (const auto& [token, s] : sessions_) arms.emplace(s->participant, s->treatment);
        std::size_t ccr = 0;
        std::size_t search = 0;
        for (const auto& [p, t] : arms) (t == Treatment::Ccr ? ccr : search) += 1;
        treatment = search < ccr ? Treatment::Search : Treatment::Ccr;
    }

    auto state = std::make_unique<SessionState>();
    state->token = new_token();
    state->participant = participant;
    state->treatment = treatment;
    state->next_index = stored ? stored->completed.size() : 0;
    state->last_event_ms = stored ? stored->last_timestamp_ms : 0;
    json out = {{"token", state->token}, {"participant", participant}, {"treatment", to_string(treatment)},
                {"next_index", state->next_index}, {"resumed", stored.has_value()}};
    token_of_participant_.emplace(participant, state->token);
    sessions_.emplace(state->token, std::move(state));
    return out;
}

std::vector<Suggestion> Service::open_suggestions(const SessionState& state) const {
    const auto& requirement = data_.store->requirements()[state.next_index];
    std::vector<Suggestion> ranked;
    {
        std::shared_lock lock(history_mutex_);
        ranked = recommender_.suggest(requirement, history_);
    }
    std::erase_if(ranked, [&](const Suggestion& s) { return state.task->decided.count({s.occurrence.stem, s.code}) > 0; });
    return ranked;
}

json Service::suggestion_json(const Suggestion& s) const {
    const auto* object = data_.taxonomy->find(s.code);
    json out = {{"stem", s.occurrence.stem},
                {"code", s.code},
                {"label", object ? object->label : ""},
                {"description", object ? object->description : ""},
                {"occurrence", occurrence_json(s.occurrence)},
                {"f_noun", s.f_noun},
                {"confidence", s.confidence},
                {"p_exact", component_json(s.p_exact)},
                {"p_similarity", component_json(s.p_similarity)},
                {"p_history", component_json(s.p_history)},
                {"proxy", nullptr}};
    if (s.similarity) {
        out["proxy"] = {{"word", s.similarity->proxy}, {"cosine", s.similarity->cosine},
                        {"f_proxy", s.similarity->f_proxy}};
    }
    return out;
}

json Service::accepted_json(const SessionState& state) const {
    json out = json::array();
    for (const auto& [stem, code] : state.task->accepted) out.push_back({{"stem", stem}, {"code", code}});
    return out;
}

json Service::get_task(std::string_view token) {
    auto& state = session(token);
    std::lock_guard lock(state.mutex);
    const auto& requirements = data_.store->requirements();
    if (state.next_index >= requirements.size()) {
        return {{"status", "complete"}, {"completed", state.next_index}, {"total", requirements.size()}};
    }
    if (!state.task) state.task = OpenTask{clock_(), {}, {}};
    const auto& requirement = requirements[state.next_index];

    json nouns = json::array();
    for (const auto& o : recommender_.nouns(requirement.text)) nouns.push_back(occurrence_json(o));
    json out = {{"status", "open"},
                {"index", state.next_index},
                {"total", requirements.size()},
                {"treatment", to_string(state.treatment)},
                {"requirement", {{"id", requirement.id}, {"text", requirement.text}}},
                {"opened_at_ms", state.task->opened_ms},
                {"nouns", nouns}};
    if (state.treatment == Treatment::Ccr) {
        json suggestions = json::array();
        for (const auto& s : open_suggestions(state)) suggestions.push_back(suggestion_json(s));
        out["suggestions"] = suggestions;
        out["accepted"] = accepted_json(state);
    }
    return out;
}

json Service::post_decision(std::string_view token, const json& body) {
    auto& state = session(token);
    std::lock_guard lock(state.mutex);
    if (state.treatment != Treatment::Ccr) {
        throw Error(ErrorKind::Forbidden, "decisions are only available in the ccr arm");
    }
    if (!state.task) throw Error(ErrorKind::Conflict, "no task is open; fetch a task first");
    const auto stem = string_field(body, "stem");
    const auto code = string_field(body, "code");
    const auto action = parse_action(string_field(body, "action"));

    const auto open = open_suggestions(state);
    const bool live = std::any_of(open.begin(), open.end(),
                                  [&](const Suggestion& s) { return s.occurrence.stem == stem && s.code == code; });
    if (!live) throw Error(ErrorKind::NotFound, "no open suggestion for '" + stem + "' -> '" + code + "'");

    const auto& requirement = data_.store->requirements()[state.next_index];
    const FeedbackEvent event{now_for(state), state.participant, requirement.id, stem, code, action};
    {
        std::unique_lock lock(history_mutex_);
        record_feedback(history_, event, data_.history_log);
    }
    state.task->decided.insert({stem, code});
    if (action == Action::Accept) state.task->accepted.emplace_back(stem, code);

    json suggestions = json::array();
    for (const auto& s : open_suggestions(state)) suggestions.push_back(suggestion_json(s));
    return {{"requirement_id", requirement.id}, {"accepted", accepted_json(state)}, {"suggestions", suggestions}};
}

json Service::post_annotation(std::string_view token, const json& body) {
    auto& state = session(token);
    std::lock_guard lock(state.mutex);
    if (!state.task) throw Error(ErrorKind::Conflict, "no task is open; fetch a task first");
    const auto& requirement = data_.store->requirements()[state.next_index];
    const auto requirement_id = string_field(body, "requirement_id");
    if (requirement_id != requirement.id) {
        throw Error(ErrorKind::Conflict, "requirement '" + requirement_id + "' is not the open task ('" +
                                             requirement.id + "')");
    }

    AnnotationRecord record;
    record.participant = state.participant;
    record.treatment = state.treatment;
    record.requirement_id = requirement.id;
    record.conf_correct = int_field(body, "conf_correct");
    record.conf_complete = int_field(body, "conf_complete");

    if (body.contains("associations") && !body["associations"].is_null()) {
        const auto& list = body["associations"];
        if (!list.is_array()) throw Error(ErrorKind::Validation, "field 'associations' must be an array");
        for (const auto& item : list) {
            Association a{string_field(item, "stem"), std::nullopt, string_field(item, "code")};
            if (item.contains("position") && !item["position"].is_null()) {
                if (!item["position"].is_number_integer() || item["position"].get<std::int64_t>() < 0) {
                    throw Error(ErrorKind::Validation, "association position must be a non-negative integer");
                }
                a.position = item["position"].get<std::size_t>();
            }
            record.associations.push_back(std::move(a));
        }
    } else if (state.treatment == Treatment::Ccr) {
        // Default to what was accepted, keyed by the token position of the
        // first occurrence of each stem.
        const auto tokens = text::tokenize(requirement.text);
        const auto nouns = recommender_.nouns(requirement.text);
        for (const auto& [stem, code] : state.task->accepted) {
            Association a{stem, std::nullopt, code};
            for (const auto& o : nouns) {
                if (o.stem == stem) {
                    a.position = token_position(tokens, o.token_span.begin);
                    break;
                }
            }
            record.associations.push_back(std::move(a));
        }
    }

    const auto closed_ms = now_for(state);
    if (body.contains("duration_s") && !body["duration_s"].is_null()) {
        if (!body["duration_s"].is_number()) throw Error(ErrorKind::Validation, "field 'duration_s' must be a number");
        record.duration_seconds = body["duration_s"].get<double>();
    } else {
        record.duration_seconds = static_cast<double>(std::max<std::int64_t>(0, closed_ms - state.task->opened_ms)) / 1000.0;
    }

    data_.store->append(record, closed_ms);
    state.task.reset();
    ++state.next_index;
    return {{"status", "recorded"},
            {"requirement_id", record.requirement_id},
            {"duration_s", record.duration_seconds},
            {"associations", encode_associations(record.associations)},
            {"next_index", state.next_index},
            {"complete", state.next_index >= data_.store->requirements().size()}};
}

json Service::search(std::string_view token, std::string_view query, std::optional<std::size_t> limit) {
    auto& state = session(token);
    if (state.treatment != Treatment::Search) {
        throw Error(ErrorKind::Forbidden, "taxonomy search is only available in the search arm");
    }
    const auto hits =
        search_taxonomy(*data_.taxonomy, query, limit.value_or(config_.default_search_limit), data_.index->analyzer());
    json out = json::array();
    for (const auto& hit : hits) {
        const auto& object = data_.taxonomy->at(hit.code);
        out.push_back({{"code", hit.code},
                       {"label", object.label},
                       {"description", object.description},
                       {"synonyms", object.synonyms},
                       {"matched_tokens", hit.matched_tokens},
                       {"label_matches", hit.label_matches}});
    }
    return {{"query", query}, {"hits", out}};
}

json Service::report() const {
    const auto records = data_.store->snapshot();
    return build_report(records, data_.judgments, &data_.store->requirements(), config_.report).document;
}

json Service::history_json() const {
    std::shared_lock lock(history_mutex_);
    json pairs = json::array();
    for (const auto& [key, counts] : history_.pairs()) {
        pairs.push_back({{"stem", key.first}, {"code", key.second}, {"accepts", counts.accepts},
                         {"rejects", counts.rejects},
                         {"suppressed", counts.rejects >= config_.recommender.rejection_threshold}});
    }
    return {{"pairs", pairs}, {"rejection_threshold", config_.recommender.rejection_threshold}};
}

std::string Service::export_dataset(std::optional<Treatment> filter) const {
    return data_.store->export_dataset(filter);
}

HistoryStore Service::history_snapshot() const {
    std::shared_lock lock(history_mutex_);
    return history_;
}

}  // namespace taxotrace
