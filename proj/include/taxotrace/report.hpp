#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "taxotrace/analysis.hpp"
#include "taxotrace/annotation_store.hpp"
#include "taxotrace/requirement.hpp"

namespace taxotrace {

struct ReportOptions {
    analysis::Encoding encoding = analysis::Encoding::OneHot;
    // Keep only requirements annotated by every participant in the dataset.
    bool common_requirements_only = true;
    std::size_t experts = 2;
    analysis::UTestOptions utest;
};

/// A CSV data table behind one of the report figures.
struct FigureTable {
    std::string name;  // file stem, e.g. "fig1_duration"
    std::string csv;
};

struct Report {
    nlohmann::json document;
    std::vector<FigureTable> figures;
};

inline constexpr std::string_view kReportFormat = "taxotrace-report";

/// M1, M4 and M5 test per-record values; M2 and M3 test one value per
/// requirement and group. M2 is reported only when judgments are given.
/// Requirement texts, when known, fix the number of term positions for M3.
/// Throws Error(Precondition) for an empty dataset and propagates
/// validation errors from the judgments.
Report build_report(const std::vector<AnnotationRecord>& records, const std::vector<analysis::Judgment>* judgments,
                    const std::vector<Requirement>* requirements, const ReportOptions& options = {});

void write_figures(const Report& report, const std::filesystem::path& directory);

}  // namespace taxotrace
