#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace perfkit {

/// Malformed input file. Carries the 1-based line and the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t line, std::string field, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": field '" + field + "': " + what),
        file_(std::move(file)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string field_;
};

class DimensionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class EmptyMaskError : public std::invalid_argument {
 public:
  EmptyMaskError() : std::invalid_argument("mask contains no voxels") {}
};

/// Invalid or unknown configuration entry; `key()` is the JSON path, e.g. "priors.spatial.a_theta1".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Fatal numerical failure inside the sampler, tied to a voxel.
class SamplerError : public std::runtime_error {
 public:
  SamplerError(std::size_t voxel, const std::string& what)
      : std::runtime_error("voxel " + std::to_string(voxel) + ": " + what), voxel_(voxel) {}
  std::size_t voxel() const { return voxel_; }

 private:
  std::size_t voxel_;
};

}  // namespace perfkit
