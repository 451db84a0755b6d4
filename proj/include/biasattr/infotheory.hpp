#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "biasattr/provider.hpp"

namespace biasattr {

/// Probability vector over vocabulary ids. Construction rejects negative or
/// non-finite entries and totals further than 1e-3 from 1, then renormalizes.
class Distribution {
public:
    static constexpr double kSumTolerance = 1e-3;

    explicit Distribution(std::vector<double> probs);

    /// exp() of a log-probability vector, e.g. a provider's full distribution.
    static Distribution from_logprobs(std::span<const double> logprobs);
    static Distribution one_hot(std::size_t size, std::size_t index);

    std::span<const double> probs() const { return probs_; }
    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }

private:
    std::vector<double> probs_;
};

/// Shannon entropy in bits. Zero-probability terms contribute nothing.
double entropy(const Distribution& d);

/// Jensen-Shannon distance, base 2, in [0, 1]. Throws
/// Error{InvalidArgument} when the vocabularies differ. Data-parallel over
/// the vocabulary (OpenMP); see `reference::jsd_distance` for the serial form.
double jsd_distance(const Distribution& p, const Distribution& q);

/// Jensen-Shannon distance between a distribution with gold-token mass
/// `p_gold` and the one-hot gold distribution. Independent of how the
/// remaining mass is spread, so only the gold probability is needed.
/// `p_gold` outside [0, 1] by less than 1e-9 is clamped; anything else
/// throws Error{InvalidArgument}.
double gold_distance(double p_gold);

/// Probability from a natural-log gold probability, clamped to [1e-12, 1].
double gold_probability(double gold_logprob);

/// b(u): gold distance under the biased condition minus under the less
/// biased one. Negative when the token is likelier in the biased sentence.
double token_bias(double p_more, double p_less);

struct ProbeResult {
    std::string token_piece;
    CharSpan word_span;  // span of the token in sent_more
    std::size_t more_index = 0;
    std::size_t less_index = 0;
    double p_more = 0.0;
    double p_less = 0.0;
    double d_more = 0.0;
    double d_less = 0.0;
    double b = 0.0;
};

/// Fills distances and b from the two gold probabilities.
ProbeResult make_probe_result(std::string piece, CharSpan span, std::size_t more_index, std::size_t less_index,
                              double p_more, double p_less);

struct PairScore {
    std::int64_t pair_id = 0;
    std::vector<ProbeResult> probes;
    double s_jsd = 0.0;
    bool prefers_biased = false;  // s_jsd < 0; exact ties count as not biased
};

/// Mean b(u) over the probes. Throws Error{EmptyProbeList}.
PairScore pair_score(std::int64_t pair_id, std::vector<ProbeResult> probes);

/// Percentage of pairs preferring the biased sentence.
/// Throws Error{EmptyCorpus}.
double model_bias(std::span<const PairScore> scores);

/// Flips the more/less roles: probabilities swap, every b(u) and s_jsd negate.
PairScore swap_roles(const PairScore& score);

namespace reference {

/// Serial Jensen-Shannon distance, kept as the baseline for the parallel
/// kernel in tests and benchmarks.
double jsd_distance(const Distribution& p, const Distribution& q);
double entropy(const Distribution& d);

}  // namespace reference

}  // namespace biasattr
