#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cqa {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Schema or CSV ingestion failure. `what()` names the file and line.
class IngestError : public Error {
public:
  IngestError(const std::string &file, std::size_t line, const std::string &msg)
      : Error(file + ":" + std::to_string(line) + ": " + msg), file_(file), line_(line) {}

  const std::string &file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

private:
  std::string file_;
  std::size_t line_;
};

/// Syntax error in query / constraint / schema text, with a 0-based offset.
class ParseError : public Error {
public:
  ParseError(std::size_t position, const std::string &msg)
      : Error("parse error at offset " + std::to_string(position) + ": " + msg), position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

/// Query or constraint that parses but does not fit the schema (arity, kinds, safety).
class ValidationError : public Error {
public:
  using Error::Error;
};

class SolverError : public Error {
public:
  using Error::Error;
};

} // namespace cqa
