#pragma once

#include <stdexcept>
#include <string>

namespace trackae {

// File/data problems: unreadable input, malformed header, corrupt checkpoint.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical aborts: non-finite loss, diverged training.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace trackae
