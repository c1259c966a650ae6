#pragma once

#include <stdexcept>
#include <string>

namespace labclean {

/// Base for every error the toolkit raises. `exit_code()` maps the error to
/// the CLI contract: 1 for usage/config problems, 2 for data problems.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 2; }
};

/// A record constructor rejected a field.
class ValidationError : public Error {
public:
    ValidationError(std::string field, std::string value, std::string reason)
        : Error(field + ": " + reason + " (got '" + value + "')"),
          field_(std::move(field)), value_(std::move(value)), reason_(std::move(reason)) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& value() const noexcept { return value_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string field_;
    std::string value_;
    std::string reason_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& path, const std::string& what = "cannot open file")
        : Error(what + ": " + path), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class HeaderError : public Error {
public:
    using Error::Error;
};

class UndecodableInput : public Error {
public:
    UndecodableInput(std::size_t byte_offset, const std::string& where)
        : Error("invalid UTF-8 at byte " + std::to_string(byte_offset) + " in " + where),
          offset_(byte_offset) {}
    std::size_t byte_offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class FinalExceedsInitial : public Error {
public:
    FinalExceedsInitial(long long initial, long long final_count)
        : Error("final count " + std::to_string(final_count) + " exceeds initial " +
                std::to_string(initial)) {}
};

class InvalidSpec : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

}  // namespace labclean
