#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace signtopic {

// Bad caller input: wrong dimensions, out-of-range parameters, empty groups.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Image bytes could not be decoded. offset() is the byte position where
// decoding stopped.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Components that do not fit together (template/pyramid dims, model groups).
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset layout or annotation problems.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model file cannot be read back.
class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// An image reached the sign stage with nothing to encode.
class ClassificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace signtopic
