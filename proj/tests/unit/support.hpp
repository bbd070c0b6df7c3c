#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "taxotrace/embeddings.hpp"
#include "taxotrace/taxonomy.hpp"
#include "taxotrace/textproc.hpp"

namespace testsupport {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("taxotrace-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::filesystem::path data_dir() {
    return std::filesystem::path(TAXOTRACE_TEST_DATA);
}

/// English defaults with the identity stemmer, as used by the bridge fixture.
inline taxotrace::text::AnalyzerConfig identity_en() {
    auto config = taxotrace::text::AnalyzerConfig::defaults_for("en");
    config.stemmer = taxotrace::text::StemmerKind::Identity;
    return config;
}

/// The five-object bridge/tunnel taxonomy from tests/data/e2e.
inline taxotrace::Taxonomy bridge_taxonomy() {
    return taxotrace::load_taxonomy_file(data_dir() / "e2e" / "taxonomy.jsonl");
}

inline taxotrace::EmbeddingStore bridge_embeddings() {
    return taxotrace::load_embeddings_file(data_dir() / "e2e" / "embeddings.txt");
}

}  // namespace testsupport
