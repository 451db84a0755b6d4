#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "biasattr/corpus.hpp"
#include "biasattr/provider.hpp"

namespace biasattr {

struct SharedToken {
    std::size_t more = 0;  // index into tok_more
    std::size_t less = 0;  // index into tok_less
    bool operator==(const SharedToken&) const = default;
};

/// Token decomposition of one prompt pair: the shared (unmodified) tokens U
/// as index pairs, and the modified index sets of each sentence.
struct PairAlignment {
    Tokenization tok_more;
    Tokenization tok_less;
    std::vector<SharedToken> shared;
    std::vector<std::size_t> modified_more;
    std::vector<std::size_t> modified_less;
};

/// Index pairs of a longest common subsequence of `more` and `less`.
/// Among equally long subsequences the one matching as early as possible in
/// `more` wins (a match is taken whenever the current heads agree).
std::vector<SharedToken> longest_common_subsequence(std::span<const TokenId> more, std::span<const TokenId> less);

/// Builds the alignment from two tokenizations.
/// Throws Error{TokenizerFailure} on an empty tokenization and
/// Error{DegeneratePair} when nothing is shared.
PairAlignment align_tokens(Tokenization tok_more, Tokenization tok_less);

/// Tokenizes both sentences through `provider` and aligns them.
PairAlignment align_pair(const PromptPair& pair, Provider& provider);

struct ProbeOptions {
    bool skip_punct = false;
};

struct PlannedProbe {
    SharedToken token;
    LogProbQuery more;
    LogProbQuery less;
};

struct SkippedProbe {
    SharedToken token;
    std::string reason;
};

struct ProbePlan {
    std::vector<PlannedProbe> probes;
    std::vector<SkippedProbe> skipped;

    std::size_t query_count() const { return 2 * probes.size(); }
};

/// Plans two gold-probability queries per shared token.
///
/// Each query holds the full, unmodified sentence with target_index on the
/// probed token. The provider masks that position (masked models) or keeps
/// only the prefix before it (causal models, BOS when the prefix is empty).
/// Causal models without a BOS token cannot score position 0, so such tokens
/// are skipped. Zero-width tokens (special tokens such as [CLS]) are never
/// probed. With `skip_punct`, shared tokens made only of ASCII punctuation
/// are skipped as well.
ProbePlan plan_probes(const PairAlignment& alignment, const ModelInfo& info, const ProbeOptions& options = {});

/// True when the piece consists only of ASCII punctuation, ignoring
/// tokenizer joiner markers ("▁", "Ġ", "##").
bool is_punctuation_piece(std::string_view piece);

}  // namespace biasattr
