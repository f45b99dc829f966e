#pragma once

#include <stdexcept>
#include <string>

namespace softlab {

// Failure categories map to distinct process exit codes in the CLI.
enum class ErrorKind { validation = 2, io = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

inline Error validation_error(const std::string& msg) {
    return Error(ErrorKind::validation, msg);
}
inline Error io_error(const std::string& msg) {
    return Error(ErrorKind::io, msg);
}
inline Error numeric_error(const std::string& msg) {
    return Error(ErrorKind::numeric, msg);
}

}  // namespace softlab
