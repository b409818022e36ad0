#pragma once

#include <stdexcept>
#include <string>

namespace octave {

// Error categories are stable strings; the CLI prints them in a single
// machine-parsable line and maps them to exit codes.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const { return category_; }

private:
    std::string category_;
};

inline Error domain_error(const std::string& message) {
    return Error("domain-error", message);
}

inline Error io_error(const std::string& message) {
    return Error("io-error", message);
}

inline Error config_error(const std::string& message) {
    return Error("config-invalid", message);
}

}  // namespace octave
