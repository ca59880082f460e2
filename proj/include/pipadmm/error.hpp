#ifndef PIPADMM_ERROR_HPP_
#define PIPADMM_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pipadmm {

//! Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! A precondition on an argument value was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

//! Vector or matrix sizes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

//! The requested loss/regularizer/solver combination is not supported by this code path.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

//! Malformed textual input. `line()` is 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

//! Malformed binary message. `offset()` is the byte offset where decoding failed.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset) : Error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

//! A worker reported a failure, or the master timed out waiting for one.
class ClusterError : public Error {
 public:
  ClusterError(const std::string& what, int shard_index) : Error(what), shard_index_(shard_index) {}
  //! 1-based index of the offending shard, 0 when not attributable to one shard.
  int shard_index() const noexcept { return shard_index_; }

 private:
  int shard_index_;
};

//! An internal consistency check failed (for example a negative H-seminorm).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace pipadmm

#endif  // PIPADMM_ERROR_HPP_
