#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddsrecon {

/// Invalid input from the outside world: documents, capture files, CLI args.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure, carrying the byte offset where it was detected.
class ParseError : public InputError {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : InputError(message + " (byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace ddsrecon
