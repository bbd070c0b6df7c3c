#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace taxotrace::csv {

/// RFC 4180 quoting: the field is wrapped in double quotes (with inner quotes
/// doubled) when it contains a comma, quote, CR, LF, or edge whitespace.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Streaming RFC 4180 reader; quoted fields may span lines.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// False at end of input. Throws Error(Parse) on an unterminated quote.
    bool next(std::vector<std::string>& row);

    /// Line on which the last returned row started (1-based).
    std::size_t line() const { return row_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t row_line_ = 0;
};

}  // namespace taxotrace::csv
