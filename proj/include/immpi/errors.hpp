#pragma once

#include <stdexcept>
#include <string>

namespace immpi {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidCamera : public Error {
 public:
  using Error::Error;
};

class DegenerateHomography : public Error {
 public:
  DegenerateHomography(const std::string& what, int plane_index = -1)
      : Error(what), plane_index_(plane_index) {}

  // -1 when the failing homography was not tied to an MPI plane.
  int plane_index() const noexcept { return plane_index_; }

 private:
  int plane_index_;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

// Optimization produced a non-finite loss.
class Divergence : public Error {
 public:
  Divergence(const std::string& what, int iteration) : Error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

// I/O errors carry the offending path and, where meaningful, a line number.
class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path, int line = 0)
      : Error(compose(what, path, line)), path_(std::move(path)), line_(line) {}

  const std::string& path() const noexcept { return path_; }
  int line() const noexcept { return line_; }

 private:
  static std::string compose(const std::string& what, const std::string& path, int line) {
    std::string out = path.empty() ? std::string("<memory>") : path;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + what;
  }

  std::string path_;
  int line_;
};

class ParseError : public IoError {
 public:
  using IoError::IoError;
};

class BadMagic : public IoError {
 public:
  using IoError::IoError;
};

class UnsupportedVersion : public IoError {
 public:
  UnsupportedVersion(const std::string& what, std::string path, unsigned version)
      : IoError(what, std::move(path)), version_(version) {}
  unsigned version() const noexcept { return version_; }

 private:
  unsigned version_;
};

class TruncatedFile : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace immpi
