// Copyright 2026 The sepbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEPBENCH_ERRORS_HPP_
#define SEPBENCH_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace sepbench {

// Error taxonomy. Kinds in the kIo group map to CLI exit code 2,
// everything else to exit code 1.
enum class Errc {
  kIo,                // missing / unreadable / unwritable files
  kFormat,            // malformed file contents
  kUnsupportedCodec,  // recognizable container, unsupported encoding
  kPrecondition,      // caller violated an operation precondition
  kConfig,            // invalid analysis configuration
  kShape,             // mismatched lengths / dimensions
  kDomain,            // scalar argument outside its domain
  kDegenerateSignal,  // silent or zero input where energy is required
  kDegenerateVector,  // zero vector where a direction is required
  kInvalidArgument,   // inconsistent argument combination
  kAsset,             // template / data asset failed validation
  kInsufficientPool,  // event pool too small for the preset
  kMissingCaption,    // clip with no caption available
  kIncompletePair,    // imitation lacking its full variant set
  kData,              // non-finite or otherwise unusable payload values
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const { return code_; }

  // True for errors caused by the environment (exit code 2) rather than
  // by arguments or data shapes (exit code 1).
  bool is_io() const {
    return code_ == Errc::kIo || code_ == Errc::kFormat ||
           code_ == Errc::kUnsupportedCodec;
  }

 private:
  Errc code_;
};

[[noreturn]] inline void throw_error(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) throw_error(code, what);
}

}  // namespace sepbench

#endif  // SEPBENCH_ERRORS_HPP_
