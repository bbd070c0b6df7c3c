// taxotrace: index a taxonomy, batch-suggest trace links, serve the
// annotation API, and analyze experiment datasets.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"
#include "taxotrace/analysis.hpp"
#include "taxotrace/annotation_store.hpp"
#include "taxotrace/embeddings.hpp"
#include "taxotrace/error.hpp"
#include "taxotrace/history.hpp"
#include "taxotrace/http_server.hpp"
#include "taxotrace/recommender.hpp"
#include "taxotrace/report.hpp"
#include "taxotrace/service.hpp"
#include "taxotrace/taxonomy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace taxotrace;

namespace {

struct EngineOptions {
    std::string taxonomy;
    std::string index;
    std::string analyzer;
    std::string embeddings;
    std::string history;
    std::size_t k_proxies = 10;
    std::uint64_t rejection_threshold = 5;
    std::string similarity_mode = "prose";
    double min_proxy_cosine = 0.0;
};

void add_engine_options(CLI::App& cmd, EngineOptions& o) {
    cmd.add_option("--taxonomy", o.taxonomy, "Taxonomy file (JSONL)")->check(CLI::ExistingFile);
    cmd.add_option("--index", o.index, "Prebuilt noun index (from `index`)")->check(CLI::ExistingFile);
    cmd.add_option("--analyzer", o.analyzer, "Analyzer config (JSON)")->check(CLI::ExistingFile);
    cmd.add_option("--embeddings", o.embeddings, "Word vectors in word2vec text format")->check(CLI::ExistingFile);
    cmd.add_option("--history", o.history, "Feedback event log (JSONL)");
    cmd.add_option("--k", o.k_proxies, "Proxies per noun")->capture_default_str();
    cmd.add_option("--rejection-threshold", o.rejection_threshold, "Rejections that suppress a pair")
        ->capture_default_str();
    cmd.add_option("--similarity-mode", o.similarity_mode, "prose (cos/f_proxy) or literal (1/(f_proxy*cos))")
        ->check(CLI::IsMember({"prose", "literal"}))
        ->capture_default_str();
    cmd.add_option("--min-proxy-cosine", o.min_proxy_cosine, "Proxies need a cosine above this")->capture_default_str();
}

text::AnalyzerConfig load_analyzer(const std::string& path) {
    if (path.empty()) return text::AnalyzerConfig::defaults_for("en");
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open analyzer config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, path + ": " + e.what());
    }
    return text::analyzer_config_from_json(doc, fs::path(path).parent_path());
}

RecommenderConfig recommender_config(const EngineOptions& o) {
    RecommenderConfig config;
    config.k_proxies = o.k_proxies;
    config.rejection_threshold = o.rejection_threshold;
    config.similarity_mode = o.similarity_mode == "literal" ? SimilarityMode::Literal : SimilarityMode::ProseConsistent;
    config.min_proxy_cosine = o.min_proxy_cosine;
    config.validate();
    return config;
}

NounIndex load_index(const EngineOptions& o, const Taxonomy* taxonomy) {
    if (!o.index.empty()) {
        if (!o.analyzer.empty()) throw Error(ErrorKind::Precondition, "--analyzer conflicts with --index");
        std::ifstream in(o.index);
        if (!in) throw Error(ErrorKind::Parse, "cannot open index " + o.index);
        try {
            return NounIndex::from_json(json::parse(in));
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::Parse, o.index + ": " + e.what());
        }
    }
    if (taxonomy == nullptr) throw Error(ErrorKind::Precondition, "give --index or --taxonomy");
    return NounIndex::build(*taxonomy, load_analyzer(o.analyzer));
}

HistoryStore load_history(const std::string& path) {
    if (path.empty() || !fs::exists(path)) return {};
    return replay(EventLog::read_file(path));
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::Persistence, "cannot write " + path);
}

json component(const Component& c) {
    return c.present() ? json(c.value) : json(nullptr);
}

json suggestion_json(const Suggestion& s) {
    json out = {{"stem", s.occurrence.stem},
                {"surface", s.occurrence.surface},
                {"begin", s.occurrence.span.begin},
                {"end", s.occurrence.span.end},
                {"source", s.occurrence.source == text::OccurrenceSource::WholeToken ? "whole-token" : "compound-part"},
                {"code", s.code},
                {"f_noun", s.f_noun},
                {"p_exact", component(s.p_exact)},
                {"p_similarity", component(s.p_similarity)},
                {"p_history", component(s.p_history)},
                {"confidence", s.confidence},
                {"proxy", nullptr}};
    if (s.similarity) {
        out["proxy"] = {{"word", s.similarity->proxy}, {"cosine", s.similarity->cosine},
                        {"f_proxy", s.similarity->f_proxy}};
    }
    return out;
}

int run_index(const EngineOptions& o, const std::string& out) {
    if (o.taxonomy.empty()) throw Error(ErrorKind::Precondition, "index needs --taxonomy");
    const auto taxonomy = load_taxonomy_file(o.taxonomy);
    const auto index = NounIndex::build(taxonomy, load_analyzer(o.analyzer));
    write_text(out, index.to_json().dump(2) + "\n");
    std::cerr << "indexed " << taxonomy.size() << " objects into " << index.size() << " stems\n";
    return 0;
}

int run_suggest(const EngineOptions& o, const std::string& requirements_path, const std::string& out) {
    std::optional<Taxonomy> taxonomy;
    if (!o.taxonomy.empty()) taxonomy = load_taxonomy_file(o.taxonomy);
    const auto index = load_index(o, taxonomy ? &*taxonomy : nullptr);
    std::optional<EmbeddingStore> embeddings;
    if (!o.embeddings.empty()) embeddings = load_embeddings_file(o.embeddings);
    const auto history = load_history(o.history);
    const Recommender recommender(index, embeddings ? &*embeddings : nullptr, recommender_config(o));

    json requirements = json::array();
    for (const auto& req : import_requirements_file(requirements_path)) {
        json suggestions = json::array();
        for (const auto& s : recommender.suggest(req, history)) suggestions.push_back(suggestion_json(s));
        requirements.push_back({{"id", req.id}, {"suggestions", suggestions}});
    }
    const json doc = {{"format", "taxotrace-suggestions"}, {"version", 1}, {"requirements", requirements}};
    write_text(out, doc.dump(2) + "\n");
    return 0;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
    if (g_server != nullptr) g_server->stop();
}

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string requirements;
    std::string store;
    std::string judgments;
};

int run_serve(const EngineOptions& o, const ServeOptions& s) {
    if (o.taxonomy.empty()) throw Error(ErrorKind::Precondition, "serve needs --taxonomy");
    const auto taxonomy = load_taxonomy_file(o.taxonomy);
    const auto index = load_index(o, &taxonomy);
    std::optional<EmbeddingStore> embeddings;
    if (!o.embeddings.empty()) embeddings = load_embeddings_file(o.embeddings);
    auto history = load_history(o.history);
    std::unique_ptr<EventLog> log;
    if (!o.history.empty()) log = EventLog::open(o.history);
    std::optional<fs::path> store_path;
    if (!s.store.empty()) store_path = s.store;
    AnnotationStore store(import_requirements_file(s.requirements), store_path);
    std::optional<std::vector<analysis::Judgment>> judgments;
    if (!s.judgments.empty()) judgments = analysis::import_judgments_file(s.judgments);

    ServiceConfig config;
    config.recommender = recommender_config(o);
    ServiceData data{&taxonomy, &index, embeddings ? &*embeddings : nullptr, &store, log.get(),
                     judgments ? &*judgments : nullptr};
    Service service(data, std::move(history), config);

    httplib::Server server;
    register_routes(server, service);
    g_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    std::cerr << "listening on http://" << s.host << ":" << s.port << "/v1\n";
    if (!server.listen(s.host, s.port)) throw Error(ErrorKind::Precondition, "cannot listen on port " + std::to_string(s.port));
    return 0;
}

struct AnalyzeOptions {
    std::string dataset;
    std::string judgments;
    std::string requirements;
    std::string out;
    std::string figures;
    std::string encoding = "one-hot";
    std::string method = "auto";
    std::uint64_t exact_cap = 200'000;
    bool all_requirements = false;
};

int run_analyze(const AnalyzeOptions& a) {
    const auto records = import_dataset_file(a.dataset);
    std::optional<std::vector<analysis::Judgment>> judgments;
    if (!a.judgments.empty()) judgments = analysis::import_judgments_file(a.judgments);
    std::optional<std::vector<Requirement>> requirements;
    if (!a.requirements.empty()) requirements = import_requirements_file(a.requirements);

    ReportOptions options;
    options.encoding = analysis::parse_encoding(a.encoding);
    options.common_requirements_only = !a.all_requirements;
    options.utest.method = analysis::parse_umethod(a.method);
    options.utest.exact_cap = a.exact_cap;
    const auto report = build_report(records, judgments ? &*judgments : nullptr,
                                     requirements ? &*requirements : nullptr, options);
    write_text(a.out, report.document.dump(2) + "\n");
    if (!a.figures.empty()) write_figures(report, a.figures);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Taxonomy trace-link recommender and experiment analysis"};
    app.require_subcommand(1);

    EngineOptions engine;
    std::string out;

    auto* index_cmd = app.add_subcommand("index", "Build the noun index of a taxonomy");
    add_engine_options(*index_cmd, engine);
    index_cmd->add_option("--out,-o", out, "Output file ('-' for stdout)")->required();

    auto* suggest_cmd = app.add_subcommand("suggest", "Rank taxonomy objects for each requirement");
    std::string requirements_file;
    suggest_cmd->add_option("requirements", requirements_file, "Requirements file (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    add_engine_options(*suggest_cmd, engine);
    suggest_cmd->add_option("--out,-o", out, "Output file ('-' for stdout)")->required();

    auto* serve_cmd = app.add_subcommand("serve", "Serve the annotation API under /v1");
    ServeOptions serve;
    add_engine_options(*serve_cmd, engine);
    serve_cmd->add_option("--host", serve.host)->capture_default_str();
    serve_cmd->add_option("--port", serve.port)->capture_default_str();
    serve_cmd->add_option("--requirements", serve.requirements, "Requirements file (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    serve_cmd->add_option("--store", serve.store, "Annotation ledger (dataset CSV, appended)");
    serve_cmd->add_option("--judgments", serve.judgments, "Expert judgments for /v1/report")->check(CLI::ExistingFile);

    auto* analyze_cmd = app.add_subcommand("analyze", "Compute M1-M5 and U tests over a dataset");
    AnalyzeOptions analyze;
    analyze_cmd->add_option("--dataset", analyze.dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
    analyze_cmd->add_option("--judgments", analyze.judgments, "Judgment CSV")->check(CLI::ExistingFile);
    analyze_cmd->add_option("--requirements", analyze.requirements, "Requirements file (JSONL)")
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--out,-o", analyze.out, "Report file ('-' for stdout)")->capture_default_str();
    analyze_cmd->add_option("--figures", analyze.figures, "Directory for the figure data tables");
    analyze_cmd->add_option("--encoding", analyze.encoding, "Consistency encoding")
        ->check(CLI::IsMember({"one-hot", "numeric"}))
        ->capture_default_str();
    analyze_cmd->add_option("--method", analyze.method, "U-test p-value method")
        ->check(CLI::IsMember({"auto", "exact", "normal"}))
        ->capture_default_str();
    analyze_cmd->add_option("--exact-cap", analyze.exact_cap, "Largest permutation count for the exact test")
        ->capture_default_str();
    analyze_cmd->add_flag("--all-requirements", analyze.all_requirements,
                          "Keep requirements not annotated by every participant");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*index_cmd) return run_index(engine, out);
        if (*suggest_cmd) return run_suggest(engine, requirements_file, out);
        if (*serve_cmd) return run_serve(engine, serve);
        if (*analyze_cmd) return run_analyze(analyze);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
