#include "biasattr/error.hpp"

namespace biasattr {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::MalformedRow: return "MalformedRow";
        case ErrorKind::EmptySentence: return "EmptySentence";
        case ErrorKind::CorpusUnreadable: return "CorpusUnreadable";
        case ErrorKind::ProviderUnreachable: return "ProviderUnreachable";
        case ErrorKind::ProtocolMismatch: return "ProtocolMismatch";
        case ErrorKind::TokenizerFailure: return "TokenizerFailure";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::VocabMismatch: return "VocabMismatch";
        case ErrorKind::CacheCorrupt: return "CacheCorrupt";
        case ErrorKind::DegeneratePair: return "DegeneratePair";
        case ErrorKind::EmptyProbeList: return "EmptyProbeList";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::MalformedLexiconRow: return "MalformedLexiconRow";
        case ErrorKind::UnknownTagCode: return "UnknownTagCode";
        case ErrorKind::OffsetMismatch: return "OffsetMismatch";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace biasattr
