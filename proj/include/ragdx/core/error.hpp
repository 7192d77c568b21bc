// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragdx {

/// Error categories surfaced by every module. The CLI maps each category
/// onto a process exit code, so new entries must also be added there.
enum class Errc {
  AllZero,
  NonFinite,
  DimensionMismatch,
  LengthMismatch,
  InvalidArgument,
  EmptyIndex,
  DuplicateRecord,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  IoError,
  ParseError,
  RemoteUnavailable,
  RemoteMalformedResponse,
  OpenQuestionUnsupported,
  CorruptCache,
  VocabMismatch,
  CacheMiss,
  DivergedLoss,
  UnsupportedMode,
  UnsupportedTask,
  MissingCandidates,
  ChoiceOutOfRange,
  EmptyEvalSet,
  InfeasibleRate,
  ConfigInvalid,
  ArtifactMissing,
  InvariantViolation,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ragdx
