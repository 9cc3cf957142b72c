#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace radapt {

// Bad arguments to a library call (maps to CLI exit code 1 or 2 depending on
// where it surfaced).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed data file; row is 1-based and counts the header line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t row, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(row) + ": " + what),
        path_(path),
        row_(row) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t row() const noexcept { return row_; }

 private:
  std::string path_;
  std::size_t row_;
};

class FileError : public std::runtime_error {
 public:
  FileError(const std::string& path, const std::string& what)
      : std::runtime_error(what + ": " + path), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace radapt
