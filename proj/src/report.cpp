#include "taxotrace/report.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "taxotrace/csv.hpp"
#include "taxotrace/error.hpp"
#include "taxotrace/textproc.hpp"

namespace taxotrace {
namespace {

using nlohmann::json;

constexpr std::array<Treatment, 2> kGroups = {Treatment::Ccr, Treatment::Search};

std::string number(double v) {
    return json(v).dump();
}

json test_json(const analysis::UTestResult& r) {
    json out = {{"u", r.u}, {"u_b", r.u_b}, {"n1", r.n1}, {"n2", r.n2}, {"p", r.p},
                {"method", analysis::to_string(r.method)}, {"sides", 2}};
    if (r.method == analysis::UMethod::Normal) out["z"] = r.z;
    return out;
}

/// Summaries of the non-empty groups and, when both have values, the U test
/// with ccr as the first group.
json compare_groups(const std::map<Treatment, std::vector<double>>& values, const analysis::UTestOptions& options) {
    json groups = json::array();
    for (auto group : kGroups) {
        const auto it = values.find(group);
        if (it == values.end() || it->second.empty()) continue;
        const auto summary = analysis::summarize(std::string(to_string(group)), it->second);
        groups.push_back({{"group", summary.group}, {"count", summary.count}, {"median", summary.median},
                          {"values", summary.values}});
    }
    json out = {{"groups", groups}, {"test", nullptr}};
    const auto ccr = values.find(Treatment::Ccr);
    const auto search = values.find(Treatment::Search);
    if (ccr != values.end() && search != values.end() && !ccr->second.empty() && !search->second.empty()) {
        out["test"] = test_json(analysis::mann_whitney_u(ccr->second, search->second, options));
    }
    return out;
}

json shares_json(const analysis::ConfidenceShares& s) {
    return {{"low", s.low}, {"neutral", s.neutral}, {"high", s.high}, {"count", s.count}};
}

json confidence_section(const std::vector<AnnotationRecord>& records, analysis::ConfidenceKind kind,
                        const analysis::UTestOptions& options, FigureTable& figure) {
    std::map<Treatment, std::vector<double>> values;
    std::map<Treatment, std::vector<int>> raw;
    for (const auto& r : records) {
        const int v = kind == analysis::ConfidenceKind::Correct ? r.conf_correct : r.conf_complete;
        values[r.treatment].push_back(v);
        raw[r.treatment].push_back(v);
    }
    json out = compare_groups(values, options);
    json shares = json::object();
    figure.csv = csv::join({"treatment", "low", "neutral", "high", "count"}) + "\n";
    for (auto group : kGroups) {
        if (raw[group].empty()) continue;
        const auto s = analysis::confidence_distribution(raw[group]);
        shares[std::string(to_string(group))] = shares_json(s);
        figure.csv += csv::join({std::string(to_string(group)), number(s.low), number(s.neutral), number(s.high),
                                 std::to_string(s.count)}) +
                      "\n";
    }
    out["shares"] = shares;
    return out;
}

std::string optional_number(const std::optional<double>& v) {
    return v ? number(*v) : "";
}

json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

Report build_report(const std::vector<AnnotationRecord>& records, const std::vector<analysis::Judgment>* judgments,
                    const std::vector<Requirement>* requirements, const ReportOptions& options) {
    if (records.empty()) throw Error(ErrorKind::Precondition, "the dataset is empty");

    std::map<std::string, Treatment> treatment_of;
    std::map<std::string, std::set<std::string>> done_by;
    for (const auto& r : records) {
        const auto [it, inserted] = treatment_of.emplace(r.participant, r.treatment);
        if (!inserted && it->second != r.treatment) {
            throw Error(ErrorKind::Validation, "participant '" + r.participant + "' appears in both treatments");
        }
        done_by[r.participant].insert(r.requirement_id);
    }

    // Requirement order: the requirement file when given, else lexicographic.
    std::vector<std::string> order;
    std::map<std::string, const Requirement*> text_of;
    if (requirements != nullptr) {
        for (const auto& req : *requirements) {
            order.push_back(req.id);
            text_of.emplace(req.id, &req);
        }
    }
    std::set<std::string> seen(order.begin(), order.end());
    std::set<std::string> extra;
    for (const auto& r : records) {
        if (!seen.count(r.requirement_id)) extra.insert(r.requirement_id);
    }
    order.insert(order.end(), extra.begin(), extra.end());

    std::vector<std::string> analyzed;
    for (const auto& id : order) {
        bool keep = false;
        if (options.common_requirements_only) {
            keep = std::all_of(done_by.begin(), done_by.end(), [&](const auto& p) { return p.second.count(id) > 0; });
        } else {
            keep = std::any_of(done_by.begin(), done_by.end(), [&](const auto& p) { return p.second.count(id) > 0; });
        }
        if (keep) analyzed.push_back(id);
    }
    if (analyzed.empty()) throw Error(ErrorKind::Validation, "no requirement was annotated by every participant");
    const std::set<std::string> analyzed_set(analyzed.begin(), analyzed.end());

    std::vector<AnnotationRecord> kept;
    for (const auto& r : records) {
        if (analyzed_set.count(r.requirement_id)) kept.push_back(r);
    }

    Report report;
    json& doc = report.document;
    doc["format"] = kReportFormat;
    doc["version"] = 1;
    json participants = json::object();
    for (auto group : kGroups) {
        std::size_t n = 0;
        for (const auto& [p, t] : treatment_of) n += t == group ? 1 : 0;
        participants[std::string(to_string(group))] = n;
    }
    doc["participants"] = participants;
    doc["requirements"] = analyzed;
    doc["options"] = {{"encoding", analysis::to_string(options.encoding)},
                      {"common_requirements_only", options.common_requirements_only},
                      {"u_method", analysis::to_string(options.utest.method)},
                      {"exact_cap", options.utest.exact_cap}};

    // M1
    {
        std::map<Treatment, std::vector<double>> values;
        FigureTable figure{"fig1_duration", csv::join({"requirement_id", "participant", "treatment", "duration_s"}) + "\n"};
        for (const auto& r : kept) {
            values[r.treatment].push_back(r.duration_seconds);
            figure.csv += csv::join({r.requirement_id, r.participant, std::string(to_string(r.treatment)),
                                     number(r.duration_seconds)}) +
                          "\n";
        }
        doc["m1_duration"] = compare_groups(values, options.utest);
        report.figures.push_back(std::move(figure));
    }

    // M2
    if (judgments != nullptr) {
        const auto grouped = analysis::group_judgments(*judgments);
        const auto scores = analysis::accuracy_scores(grouped, options.experts);
        std::map<std::pair<std::string, Treatment>, std::vector<double>> per_requirement;
        for (const auto& s : scores) {
            const auto instance = analysis::decode_instance(s.association);
            const auto it = treatment_of.find(instance.participant);
            if (it == treatment_of.end()) {
                throw Error(ErrorKind::Validation, "judged association '" + s.association +
                                                       "' names unknown participant '" + instance.participant + "'");
            }
            if (analyzed_set.count(s.requirement_id)) {
                per_requirement[{s.requirement_id, it->second}].push_back(s.mean_points);
            }
        }
        std::map<Treatment, std::vector<double>> values;
        FigureTable figure{"fig2_accuracy", csv::join({"requirement_id", "ccr", "search"}) + "\n"};
        json rows = json::array();
        for (const auto& id : analyzed) {
            std::map<Treatment, std::optional<double>> cell;
            for (auto group : kGroups) {
                const auto it = per_requirement.find({id, group});
                if (it == per_requirement.end()) continue;
                const auto& v = it->second;
                const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
                cell[group] = mean;
                values[group].push_back(mean);
            }
            rows.push_back({{"requirement_id", id}, {"ccr", optional_json(cell[Treatment::Ccr])},
                            {"search", optional_json(cell[Treatment::Search])}});
            figure.csv += csv::join({id, optional_number(cell[Treatment::Ccr]),
                                     optional_number(cell[Treatment::Search])}) +
                          "\n";
        }
        json section = compare_groups(values, options.utest);
        section["per_requirement"] = rows;

        std::set<std::string> experts;
        for (const auto& r : grouped) experts.insert(r.expert);
        if (experts.size() == 2) {
            const auto buckets = analysis::agreement_buckets(grouped, *experts.begin(), *experts.rbegin());
            section["agreement"] = {{"experts", experts},
                                    {"diff_0", buckets.counts[0]},
                                    {"diff_1", buckets.counts[1]},
                                    {"diff_2", buckets.counts[2]},
                                    {"diff_3", buckets.counts[3]},
                                    {"diff_gt_3", buckets.counts[4]},
                                    {"total", buckets.total()}};
        } else {
            section["agreement"] = nullptr;
        }
        doc["m2_accuracy"] = section;
        report.figures.push_back(std::move(figure));
    } else {
        doc["m2_accuracy"] = nullptr;
    }

    // M3
    {
        std::map<Treatment, std::vector<double>> values;
        FigureTable figure{"fig3_consistency", csv::join({"requirement_id", "ccr", "search"}) + "\n"};
        json rows = json::array();
        for (const auto& id : analyzed) {
            std::vector<AnnotationRecord> of_requirement;
            for (const auto& r : kept) {
                if (r.requirement_id == id) of_requirement.push_back(r);
            }
            std::size_t term_count = 0;
            if (const auto it = text_of.find(id); it != text_of.end()) {
                term_count = text::tokenize(it->second->text).size();
            }
            // Labels are assigned over both groups so numeric codes agree.
            const auto coded = analysis::code_annotations(of_requirement, term_count);
            // Without a text and without any association there is nothing to compare.
            const bool positions = !coded.empty() && !coded.front().labels.empty();
            std::map<Treatment, std::optional<double>> cell;
            for (auto group : kGroups) {
                std::vector<analysis::CodedAnnotation> members;
                for (std::size_t i = 0; i < of_requirement.size(); ++i) {
                    if (of_requirement[i].treatment == group) members.push_back(coded[i]);
                }
                if (!positions || members.size() < 2) continue;
                const auto vectors = analysis::encode_vectors(id, members, options.encoding);
                cell[group] = analysis::consistency(vectors);
                values[group].push_back(*cell[group]);
            }
            rows.push_back({{"requirement_id", id}, {"ccr", optional_json(cell[Treatment::Ccr])},
                            {"search", optional_json(cell[Treatment::Search])}});
            figure.csv += csv::join({id, optional_number(cell[Treatment::Ccr]),
                                     optional_number(cell[Treatment::Search])}) +
                          "\n";
        }
        json section = compare_groups(values, options.utest);
        section["encoding"] = analysis::to_string(options.encoding);
        section["per_requirement"] = rows;
        doc["m3_consistency"] = section;
        report.figures.push_back(std::move(figure));
    }

    // M4 is completeness and M5 correctness; figure numbering follows the
    // order correctness, completeness.
    FigureTable correctness{"fig4_correctness", ""};
    FigureTable completeness{"fig5_completeness", ""};
    doc["m4_completeness"] =
        confidence_section(kept, analysis::ConfidenceKind::Complete, options.utest, completeness);
    doc["m5_correctness"] = confidence_section(kept, analysis::ConfidenceKind::Correct, options.utest, correctness);
    report.figures.push_back(std::move(correctness));
    report.figures.push_back(std::move(completeness));
    return report;
}

void write_figures(const Report& report, const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw Error(ErrorKind::Persistence, "cannot create " + directory.string() + ": " + ec.message());
    for (const auto& figure : report.figures) {
        const auto path = directory / (figure.name + ".csv");
        std::ofstream out(path, std::ios::binary);
        out << figure.csv;
        out.flush();
        if (!out) throw Error(ErrorKind::Persistence, "cannot write " + path.string());
    }
}

}  // namespace taxotrace
