#pragma once

#include <stdexcept>
#include <string>

namespace notchlab {

// Failure classes map one-to-one onto CLI exit codes; library code throws,
// the CLI catches and translates.
enum class ErrorKind {
    Usage,       // bad command line
    Parse,       // malformed scenario or trace file
    Validation,  // parameter, geometry, plan or model constraint violated
    Numeric,     // diagnostic failures: non-unimodal cost, undefined normalization
    Io,          // filesystem problems
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) { throw Error(ErrorKind::Usage, msg); }
[[noreturn]] inline void throw_parse(const std::string& msg) { throw Error(ErrorKind::Parse, msg); }
[[noreturn]] inline void throw_validation(const std::string& msg) { throw Error(ErrorKind::Validation, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorKind::Numeric, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorKind::Io, msg); }

inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return 1;
        case ErrorKind::Parse: return 2;
        case ErrorKind::Validation: return 3;
        case ErrorKind::Numeric: return 4;
        case ErrorKind::Io: return 5;
    }
    return 1;
}

}  // namespace notchlab
