#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace flowplan {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    IoError(const std::filesystem::path& path, const std::string& what)
        : std::runtime_error(path.string() + ": " + what), path_(path) {}
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

/// Malformed or wrong-version serialized data.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite value encountered during a forward/inverse pass or a training step.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Environment generation could not reach the requested obstacle ratio.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace flowplan
