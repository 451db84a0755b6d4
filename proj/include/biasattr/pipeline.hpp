#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biasattr/align.hpp"
#include "biasattr/corpus.hpp"
#include "biasattr/infotheory.hpp"
#include "biasattr/provider.hpp"

namespace biasattr {

/// Everything computed for one pair. A pair is all-or-nothing: either
/// `score` is set, or `skip_reason` says why the pair was dropped.
struct PairOutcome {
    PromptPair pair;
    std::optional<PairAlignment> alignment;
    std::vector<SkippedProbe> skipped_probes;
    std::optional<PairScore> score;
    std::string skip_reason;

    bool scored() const { return score.has_value(); }
};

/// Aligns, probes and scores one pair. Library errors (tokenizer, provider,
/// degenerate pair, nothing probeable) become a skip reason; anything else
/// propagates.
PairOutcome evaluate_pair(const PromptPair& pair, Provider& provider, const ModelInfo& info,
                          const ProbeOptions& options = {});

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const PairOutcome&)>;

/// Scores every pair on an OpenMP team of `parallelism` threads, one pair per
/// task. Output order matches input order regardless of scheduling, and
/// queries within a pair are issued sequentially. `progress` is called under
/// a lock.
std::vector<PairOutcome> evaluate_pairs(std::span<const PromptPair> pairs, Provider& provider, const ModelInfo& info,
                                        const ProbeOptions& options, int parallelism, const ProgressFn& progress = {});

namespace reference {

/// Serial loop over pairs; the parallel driver must agree with it exactly.
std::vector<PairOutcome> evaluate_pairs(std::span<const PromptPair> pairs, Provider& provider, const ModelInfo& info,
                                        const ProbeOptions& options);

}  // namespace reference

}  // namespace biasattr
