// Copyright 2026 The ragdx Authors
// SPDX-License-Identifier: Apache-2.0

#include "ragdx/core/error.hpp"

namespace ragdx {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::AllZero: return "AllZero";
    case Errc::NonFinite: return "NonFinite";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::EmptyIndex: return "EmptyIndex";
    case Errc::DuplicateRecord: return "DuplicateRecord";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::RemoteUnavailable: return "RemoteUnavailable";
    case Errc::RemoteMalformedResponse: return "RemoteMalformedResponse";
    case Errc::OpenQuestionUnsupported: return "OpenQuestionUnsupported";
    case Errc::CorruptCache: return "CorruptCache";
    case Errc::VocabMismatch: return "VocabMismatch";
    case Errc::CacheMiss: return "CacheMiss";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::UnsupportedMode: return "UnsupportedMode";
    case Errc::UnsupportedTask: return "UnsupportedTask";
    case Errc::MissingCandidates: return "MissingCandidates";
    case Errc::ChoiceOutOfRange: return "ChoiceOutOfRange";
    case Errc::EmptyEvalSet: return "EmptyEvalSet";
    case Errc::InfeasibleRate: return "InfeasibleRate";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::ArtifactMissing: return "ArtifactMissing";
    case Errc::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

}  // namespace ragdx
