#pragma once

#include <stdexcept>
#include <string>

namespace wmm {

// Error category, mapped to process exit codes by the CLI
// (validation -> 2, estimation -> 3, io -> 4).
enum class ErrorKind { Validation, Estimation, Io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error validation_error(std::string message) {
    return Error(ErrorKind::Validation, std::move(message));
}

inline Error estimation_error(std::string message) {
    return Error(ErrorKind::Estimation, std::move(message));
}

inline Error io_error(std::string message) {
    return Error(ErrorKind::Io, std::move(message));
}

} // namespace wmm
