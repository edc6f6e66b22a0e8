#pragma once

#include <stdexcept>
#include <string>

namespace conec {

// Process exit codes used by the command-line tool.
enum class ExitCode : int { kSuccess = 0, kUsage = 1, kData = 2, kNumeric = 3 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kData; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kUsage; }
};

// Malformed or missing input data.
class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kNumeric; }
};

class EmptyVocabularyError : public DataError {
 public:
  using DataError::DataError;
};

// A parse failure tied to a line of an input file.
class MalformedLineError : public DataError {
 public:
  MalformedLineError(const std::string& what, std::size_t line);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MissingWordError : public DataError {
 public:
  using DataError::DataError;
};

class UnresolvableWordError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateLabelsError : public DataError {
 public:
  using DataError::DataError;
};

class LengthMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class MissingStoreError : public DataError {
 public:
  using DataError::DataError;
};

// Checkpoint failures. Each is distinct so callers can tell them apart.
class CorruptHeaderError : public DataError {
 public:
  using DataError::DataError;
};

class VersionMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedFileError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace conec
