#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace facetset {

// Base of every error thrown by the library. Callers that only need a
// message can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  IoError(std::string path, std::string what, std::size_t line = 0)
      : Error(compose(path, what, line)), path_(std::move(path)), line_(line) {}
  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string compose(const std::string& path, const std::string& what, std::size_t line) {
    std::string msg = path;
    if (line > 0) msg += ":" + std::to_string(line);
    return msg + ": " + what;
  }
  std::string path_;
  std::size_t line_;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus contains no tokens") {}
};

class UnknownEntity : public Error {
 public:
  explicit UnknownEntity(std::string entity)
      : Error("unknown entity '" + entity + "'"), entity_(std::move(entity)) {}
  const std::string& entity() const noexcept { return entity_; }

 private:
  std::string entity_;
};

class IncompatibleIndex : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateVector : public Error {
 public:
  explicit DegenerateVector(std::string label)
      : Error("zero-norm vector under cosine similarity: " + label), label_(std::move(label)) {}
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

class NoEmbeddableContext : public Error {
 public:
  explicit NoEmbeddableContext(const std::string& seed)
      : Error("no embeddable skip-gram for seed '" + seed + "'") {}
};

class NoCoherentFacet : public Error {
 public:
  // diagnostics is a serialized JSON report of the fusion fold.
  NoCoherentFacet(const std::string& what, std::string diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

class EmptyExpansion : public Error {
 public:
  using Error::Error;
};

class ScorerUnavailable : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string offending_line)
      : Error(what + ": " + offending_line), line_(std::move(offending_line)) {}
  const std::string& offending_line() const noexcept { return line_; }

 private:
  std::string line_;
};

// Malformed gold/prediction documents. pointer is an RFC 6901 JSON pointer.
class SchemaError : public Error {
 public:
  SchemaError(std::string pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace facetset
