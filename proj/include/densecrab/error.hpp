#pragma once

#include <stdexcept>
#include <string>

namespace densecrab {

/// Error categories surfaced by the CLI as machine-parseable one-liners.
enum class ErrKind {
    io,         // file open / read / write failure
    parse,      // malformed text input (jsonl, tsv, config, run file)
    format,     // bad magic or unsupported version in a binary artifact
    truncated,  // binary artifact ends before its header promises
    invalid,    // bad argument or violated precondition
    config,     // invalid or incomplete run configuration
};

const char* err_kind_name(ErrKind kind);

class Error : public std::runtime_error {
  public:
    Error(ErrKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrKind kind() const { return kind_; }

  private:
    ErrKind kind_;
};

[[noreturn]] inline void fail(ErrKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace densecrab
