// Copyright 2026 The Prosody Bench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROSODY_ERROR_HPP
#define PROSODY_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace prosody {

enum class ErrorKind {
  // audio_io
  UnsupportedFormat,
  ChannelMismatch,
  CorruptHeader,
  IoError,
  // ipu_segmenter / feature_extractor
  ClipTooShort,
  IpuOutOfBounds,
  IpuTooShort,
  SchemaMismatch,
  // corpus
  DuplicateUtteranceId,
  EmptyTable,
  ParseError,
  // trees
  DegenerateInput,
  SingleClassInput,
  NonFiniteFeature,
  DimensionMismatch,
  UnfittedModel,
  // eval_harness
  InsufficientSpeakers,
  SingleLanguageTable,
  LengthMismatch,
  Empty,
  // importance
  MethodMismatch,
  // synth_corpus
  ProfileOutOfRange,
  // cli
  ConfigError,
  MissingInput,
  InvalidArgument,
  Internal,
};

std::string_view to_string(ErrorKind kind);

/// Process exit code for an error kind: 2 config, 3 data, 4 internal.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace prosody

#endif  // PROSODY_ERROR_HPP
