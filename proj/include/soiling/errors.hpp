/* Copyright 2026 The Soiling Coverage Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace soiling {

// Broad failure categories. The CLI maps them onto exit codes.
enum class ErrorKind {
  kValidation,  // bad input content: annotations, tiling, shapes, CSV rows
  kIo,          // missing files, unwritable outputs
  kNumeric,     // non-finite losses, divergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidAnnotationError : public Error {
 public:
  explicit InvalidAnnotationError(const std::string& what)
      : Error(ErrorKind::kValidation, "invalid annotation: " + what) {}
};

class TilingError : public Error {
 public:
  TilingError(int height, int width, int vtiles, int htiles);
};

class ParseError : public Error {
 public:
  // line == 0 means the location is unknown.
  ParseError(const std::string& source, std::size_t line,
             const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::kValidation, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::kValidation, "dimension mismatch: " + what) {}
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(ErrorKind::kIo, path + ": " + what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::kNumeric, what) {}
};

// Process exit code for an error category (1 validation, 2 I/O, 3 numeric).
int exit_code_for(ErrorKind kind);

}  // namespace soiling
