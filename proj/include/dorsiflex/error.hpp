#pragma once

#include <stdexcept>
#include <string>

namespace dorsiflex {

/// Invalid argument or precondition violation on an operation.
struct ParamError : std::invalid_argument {
  explicit ParamError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed file content; message carries the file and line when known.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Value outside the span it must lie in (e.g. annotation past recording end).
struct RangeError : std::runtime_error {
  explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure: unreadable, unwritable, truncated.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dorsiflex
