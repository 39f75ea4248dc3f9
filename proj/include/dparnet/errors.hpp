#ifndef DPARNET_ERRORS_HPP
#define DPARNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dparnet {

// Exit-code contract used by the CLI: 2 config, 3 I/O, 4 numeric.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : IoError {
    explicit FormatError(const std::string& msg) : IoError(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dparnet

#endif
