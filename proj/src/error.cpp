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

#include "prosody/error.hpp"

namespace prosody {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::ChannelMismatch: return "ChannelMismatch";
    case ErrorKind::CorruptHeader: return "CorruptHeader";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ClipTooShort: return "ClipTooShort";
    case ErrorKind::IpuOutOfBounds: return "IpuOutOfBounds";
    case ErrorKind::IpuTooShort: return "IpuTooShort";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::DuplicateUtteranceId: return "DuplicateUtteranceId";
    case ErrorKind::EmptyTable: return "EmptyTable";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::SingleClassInput: return "SingleClassInput";
    case ErrorKind::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnfittedModel: return "UnfittedModel";
    case ErrorKind::InsufficientSpeakers: return "InsufficientSpeakers";
    case ErrorKind::SingleLanguageTable: return "SingleLanguageTable";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::Empty: return "Empty";
    case ErrorKind::MethodMismatch: return "MethodMismatch";
    case ErrorKind::ProfileOutOfRange: return "ProfileOutOfRange";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::MissingInput:
    case ErrorKind::InvalidArgument:
      return 2;
    case ErrorKind::Internal:
      return 4;
    default:
      return 3;
  }
}

}  // namespace prosody
