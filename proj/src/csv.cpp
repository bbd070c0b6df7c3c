#include "taxotrace/csv.hpp"

#include <istream>

#include "taxotrace/error.hpp"

namespace taxotrace::csv {

std::string escape(std::string_view field) {
    const bool needs_quotes =
        field.find_first_of(",\"\r\n") != std::string_view::npos ||
        (!field.empty() && (field.front() == ' ' || field.back() == ' ' || field.front() == '\t' ||
                            field.back() == '\t'));
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += ',';
        out += escape(fields[i]);
    }
    return out;
}

bool Reader::next(std::vector<std::string>& row) {
    row.clear();
    std::string line;
    // Skip blank lines between records.
    do {
        if (!std::getline(in_, line)) return false;
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
    } while (line.empty());
    row_line_ = line_;

    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    while (true) {
        if (i == line.size()) {
            if (!quoted) break;
            // Quoted field continues on the next physical line.
            if (!std::getline(in_, line)) {
                throw Error(ErrorKind::Parse, "line " + std::to_string(row_line_) + ": unterminated quoted field");
            }
            ++line_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            field += '\n';
            i = 0;
            continue;
        }
        const char c = line[i++];
        if (quoted) {
            if (c == '"') {
                if (i < line.size() && line[i] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    row.push_back(std::move(field));
    return true;
}

}  // namespace taxotrace::csv
