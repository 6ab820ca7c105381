#pragma once

#include <stdexcept>
#include <string>

namespace coldqs {

// Exit codes surfaced by the CLI. Library code throws; only tools/ maps to codes.
enum class ExitCode : int {
    ok = 0,
    validation = 1,
    transport = 2,
    trainer_hook = 3,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::validation; }
    virtual const char* kind() const noexcept { return "error"; }
};

// Input data or configuration violates a contract.
class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation"; }
};

// An operation was called outside its precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "precondition"; }
};

class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what), attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }
    ExitCode exit_code() const noexcept override { return ExitCode::transport; }
    const char* kind() const noexcept override { return "transport"; }

private:
    int attempts_;
};

class TrainerHookError : public Error {
public:
    TrainerHookError(const std::string& what, int status)
        : Error(what), status_(status) {}
    int status() const noexcept { return status_; }
    ExitCode exit_code() const noexcept override { return ExitCode::trainer_hook; }
    const char* kind() const noexcept override { return "trainer_hook"; }

private:
    int status_;
};

// Model text could not be read as the mandated structured output.
class ParseError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "parse"; }
};

}  // namespace coldqs
