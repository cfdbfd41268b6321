#ifndef SPECNN_ERRORS_HPP
#define SPECNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace specnn {

// Dimension / length mismatches between operands.
struct shape_error : std::invalid_argument {
    explicit shape_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid parameter values (bad ranges, out-of-range labels, ...).
struct domain_error : std::invalid_argument {
    explicit domain_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed files (IDX containers, model JSON).
struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing or unreadable files.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace specnn

#endif
