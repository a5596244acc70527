#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace graphex {

using ItemId = std::uint32_t;
using UserId = std::uint32_t;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated a precondition (bad dimension, duplicate id, unknown item).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t offset = 0)
      : Error(what + " (line " + std::to_string(line) + ", offset " +
              std::to_string(offset) + ")"),
        line_(line),
        offset_(offset) {}

  std::size_t line() const { return line_; }
  std::size_t offset() const { return offset_; }

 private:
  std::size_t line_;
  std::size_t offset_;
};

// Retrieval was asked to match for a user with no positive history.
class ColdStartError : public Error {
 public:
  using Error::Error;
};

// Not enough items to compute a statistic (e.g. fewer than two in a window).
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace graphex
