#include "biasattr/pipeline.hpp"

#include <exception>
#include <mutex>

#include "biasattr/error.hpp"

namespace biasattr {

namespace {

PairScore score_alignment(const PromptPair& pair, const PairAlignment& alignment, const ProbePlan& plan,
                          Provider& provider) {
    std::vector<ProbeResult> results;
    results.reserve(plan.probes.size());
    for (const auto& probe : plan.probes) {
        const double p_more = gold_probability(provider.logprobs(probe.more).gold_logprob);
        const double p_less = gold_probability(provider.logprobs(probe.less).gold_logprob);
        results.push_back(make_probe_result(alignment.tok_more.pieces[probe.token.more],
                                            alignment.tok_more.offsets[probe.token.more], probe.token.more,
                                            probe.token.less, p_more, p_less));
    }
    return pair_score(pair.pair_id, std::move(results));
}

}  // namespace

PairOutcome evaluate_pair(const PromptPair& pair, Provider& provider, const ModelInfo& info,
                          const ProbeOptions& options) {
    PairOutcome outcome;
    outcome.pair = pair;
    try {
        outcome.alignment = align_pair(pair, provider);
        const auto plan = plan_probes(*outcome.alignment, info, options);
        outcome.skipped_probes = plan.skipped;
        outcome.score = score_alignment(pair, *outcome.alignment, plan, provider);
    } catch (const Error& e) {
        outcome.score.reset();
        outcome.skip_reason = e.what();
    }
    return outcome;
}

std::vector<PairOutcome> evaluate_pairs(std::span<const PromptPair> pairs, Provider& provider, const ModelInfo& info,
                                        const ProbeOptions& options, int parallelism, const ProgressFn& progress) {
    if (parallelism < 1) throw Error(ErrorKind::ConfigError, "parallelism must be at least 1");
    std::vector<PairOutcome> outcomes(pairs.size());
    std::mutex progress_mutex;
    std::size_t done = 0;
    std::exception_ptr failure;
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(parallelism)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            outcomes[k] = evaluate_pair(pairs[k], provider, info, options);
            std::lock_guard lock(progress_mutex);
            ++done;
            if (progress) progress(done, pairs.size(), outcomes[k]);
        } catch (...) {
            std::lock_guard lock(progress_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return outcomes;
}

namespace reference {

std::vector<PairOutcome> evaluate_pairs(std::span<const PromptPair> pairs, Provider& provider, const ModelInfo& info,
                                        const ProbeOptions& options) {
    std::vector<PairOutcome> outcomes;
    outcomes.reserve(pairs.size());
    for (const auto& pair : pairs) outcomes.push_back(evaluate_pair(pair, provider, info, options));
    return outcomes;
}

}  // namespace reference

}  // namespace biasattr
