#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace skb {

using NodeId = std::int64_t;
using QueryId = std::int64_t;

// Malformed input files, bad paths, refused overwrites. CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration (bad preset name, inconsistent parameters). CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// External scorer / embedder endpoint failures. CLI exit code 3.
class EndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything else (bad arguments to library calls, evaluation failures). CLI exit code 1.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace skb
