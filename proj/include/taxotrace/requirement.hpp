#pragma once

#include <string>

namespace taxotrace {

struct Requirement {
    std::string id;
    std::string text;

    friend bool operator==(const Requirement&, const Requirement&) = default;
};

}  // namespace taxotrace
