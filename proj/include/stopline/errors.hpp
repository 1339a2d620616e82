#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace stopline {

// Every failure the library reports derives from Error and carries a stable
// machine-readable kind string (used for the JSON error records of the CLI).
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

class SyntaxError : public Error {
public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected, const std::string& what)
      : Error("SyntaxError", what), offset_(offset), expected_(std::move(expected)) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class UnknownIdentifier : public Error {
public:
  UnknownIdentifier(std::string name, std::size_t offset)
      : Error("UnknownIdentifier", "unknown identifier '" + name + "' at offset " + std::to_string(offset)),
        name_(std::move(name)), offset_(offset) {}
  const std::string& name() const noexcept { return name_; }
  std::size_t offset() const noexcept { return offset_; }

private:
  std::string name_;
  std::size_t offset_;
};

class DomainError : public Error {
public:
  DomainError(std::string subexpr, const std::string& what)
      : Error("DomainError", what + " in '" + subexpr + "'"), subexpr_(std::move(subexpr)) {}
  const std::string& subexpression() const noexcept { return subexpr_; }

private:
  std::string subexpr_;
};

class NonDifferentiable : public Error {
public:
  explicit NonDifferentiable(const std::string& node)
      : Error("NonDifferentiable", "no derivative registered for '" + node + "'") {}
};

class KinkAtPoint : public Error {
public:
  explicit KinkAtPoint(double x)
      : Error("KinkAtPoint", "evaluation point x=" + std::to_string(x) + " is a flagged kink"), x_(x) {}
  double x() const noexcept { return x_; }

private:
  double x_;
};

class SchemaError : public Error {
public:
  SchemaError(std::string path, const std::string& what)
      : Error("SchemaError", path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

// Generic kind-tagged error for the remaining contract failures
// (BadDomain, PsorDiverged, NoSignChange, SchemaError, ...).
inline Error make_error(const std::string& kind, const std::string& what) { return Error(kind, what); }

}  // namespace stopline
