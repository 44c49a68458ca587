#pragma once

#include <stdexcept>
#include <string>

namespace sgf {

// Base of every error the toolkit raises. Subclasses name the failure kind;
// the CLI maps them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SGF_DEFINE_ERROR(Name)        \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  };

SGF_DEFINE_ERROR(ArgumentError)
SGF_DEFINE_ERROR(ValidationError)
SGF_DEFINE_ERROR(NotFoundError)
SGF_DEFINE_ERROR(IoError)
SGF_DEFINE_ERROR(FormatError)
SGF_DEFINE_ERROR(DecodeError)
SGF_DEFINE_ERROR(LoadError)
SGF_DEFINE_ERROR(AdapterError)
SGF_DEFINE_ERROR(ConfigError)
SGF_DEFINE_ERROR(TrainingError)
SGF_DEFINE_ERROR(UndefinedMetricError)
SGF_DEFINE_ERROR(EmptyHistoryError)
SGF_DEFINE_ERROR(EmptyInputError)
SGF_DEFINE_ERROR(MissingPrerequisiteError)

#undef SGF_DEFINE_ERROR

// Raised when no overlay field could be recognized; keeps the raw OCR text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw_text)
      : Error(what), raw_text_(std::move(raw_text)) {}
  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

}  // namespace sgf
