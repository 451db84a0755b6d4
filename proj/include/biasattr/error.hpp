#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biasattr {

enum class ErrorKind {
    // corpus
    MissingColumn,
    MalformedRow,
    EmptySentence,
    CorpusUnreadable,
    // provider
    ProviderUnreachable,
    ProtocolMismatch,
    TokenizerFailure,
    IndexOutOfRange,
    VocabMismatch,
    CacheCorrupt,
    // align
    DegeneratePair,
    // infotheory
    EmptyProbeList,
    EmptyCorpus,
    // semtag
    MalformedLexiconRow,
    UnknownTagCode,
    OffsetMismatch,
    // plumbing
    ConfigError,
    IoFailure,
    InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a categorized error kind. Every failure the library
/// reports to callers goes through this type.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace biasattr
