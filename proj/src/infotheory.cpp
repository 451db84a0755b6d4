#include "biasattr/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biasattr/error.hpp"

namespace biasattr {

namespace {

// Below this vocabulary size the OpenMP team costs more than the sum.
constexpr std::size_t kParallelThreshold = 1 << 13;

double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

// Contribution of one vocabulary entry to 2 * JSD(p || q), in the
// KL-to-midpoint form: p log2(p / m) + q log2(q / m), m = (p + q) / 2.
double jsd_term(double p, double q) {
    const double sum = p + q;
    double term = 0.0;
    if (p > 0.0) term += p * std::log2(2.0 * p / sum);
    if (q > 0.0) term += q * std::log2(2.0 * q / sum);
    return term;
}

double finish_distance(double twice_divergence) {
    const double divergence = std::clamp(0.5 * twice_divergence, 0.0, 1.0);
    return std::sqrt(divergence);
}

void require_same_vocab(const Distribution& p, const Distribution& q) {
    if (p.size() != q.size()) {
        throw Error(ErrorKind::InvalidArgument, "distributions cover different vocabularies (" +
                                                    std::to_string(p.size()) + " vs " + std::to_string(q.size()) + ")");
    }
}

}  // namespace

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw Error(ErrorKind::InvalidArgument, "distribution is empty");
    double total = 0.0;
    for (double x : probs_) {
        if (!std::isfinite(x) || x < 0.0) throw Error(ErrorKind::InvalidArgument, "probability is negative or not finite");
        total += x;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
        throw Error(ErrorKind::InvalidArgument, "probabilities sum to " + std::to_string(total));
    }
    if (total != 1.0) {
        for (double& x : probs_) x /= total;
    }
}

Distribution Distribution::from_logprobs(std::span<const double> logprobs) {
    std::vector<double> probs(logprobs.size());
    std::transform(logprobs.begin(), logprobs.end(), probs.begin(), [](double lp) { return std::exp(lp); });
    return Distribution(std::move(probs));
}

Distribution Distribution::one_hot(std::size_t size, std::size_t index) {
    if (index >= size) throw Error(ErrorKind::IndexOutOfRange, "one-hot index outside the vocabulary");
    std::vector<double> probs(size, 0.0);
    probs[index] = 1.0;
    return Distribution(std::move(probs));
}

double entropy(const Distribution& d) {
    const auto probs = d.probs();
    const auto n = static_cast<std::ptrdiff_t>(probs.size());
    double acc = 0.0;
#pragma omp parallel for reduction(+ : acc) schedule(static) if (probs.size() >= kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) acc -= xlog2x(probs[static_cast<std::size_t>(i)]);
    return std::max(acc, 0.0);
}

double jsd_distance(const Distribution& p, const Distribution& q) {
    require_same_vocab(p, q);
    const auto ps = p.probs();
    const auto qs = q.probs();
    const auto n = static_cast<std::ptrdiff_t>(ps.size());
    double acc = 0.0;
#pragma omp parallel for reduction(+ : acc) schedule(static) if (ps.size() >= kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        acc += jsd_term(ps[static_cast<std::size_t>(i)], qs[static_cast<std::size_t>(i)]);
    }
    return finish_distance(acc);
}

namespace reference {

double entropy(const Distribution& d) {
    double acc = 0.0;
    for (double x : d.probs()) acc -= xlog2x(x);
    return std::max(acc, 0.0);
}

double jsd_distance(const Distribution& p, const Distribution& q) {
    require_same_vocab(p, q);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += jsd_term(p[i], q[i]);
    return finish_distance(acc);
}

}  // namespace reference

double gold_distance(double p_gold) {
    constexpr double kSlack = 1e-9;
    if (std::isnan(p_gold) || p_gold < -kSlack || p_gold > 1.0 + kSlack) {
        throw Error(ErrorKind::InvalidArgument, "gold probability " + std::to_string(p_gold) + " outside [0, 1]");
    }
    const double p = std::clamp(p_gold, 0.0, 1.0);
    const double half_sum = (1.0 + p) / 2.0;
    const double divergence = (xlog2x(p) + (1.0 - p)) / 2.0 - half_sum * std::log2(half_sum);
    return std::min(std::sqrt(std::max(divergence, 0.0)), 1.0);
}

double gold_probability(double gold_logprob) {
    if (std::isnan(gold_logprob)) throw Error(ErrorKind::InvalidArgument, "gold log-probability is NaN");
    return std::min(std::max(std::exp(gold_logprob), 1e-12), 1.0);
}

double token_bias(double p_more, double p_less) { return gold_distance(p_more) - gold_distance(p_less); }

ProbeResult make_probe_result(std::string piece, CharSpan span, std::size_t more_index, std::size_t less_index,
                              double p_more, double p_less) {
    ProbeResult r;
    r.token_piece = std::move(piece);
    r.word_span = span;
    r.more_index = more_index;
    r.less_index = less_index;
    r.p_more = p_more;
    r.p_less = p_less;
    r.d_more = gold_distance(p_more);
    r.d_less = gold_distance(p_less);
    r.b = r.d_more - r.d_less;
    return r;
}

PairScore pair_score(std::int64_t pair_id, std::vector<ProbeResult> probes) {
    if (probes.empty()) {
        throw Error(ErrorKind::EmptyProbeList, "pair " + std::to_string(pair_id) + " has no probed tokens");
    }
    PairScore score;
    score.pair_id = pair_id;
    double sum = 0.0;
    for (const auto& p : probes) sum += p.b;
    score.s_jsd = sum / static_cast<double>(probes.size());
    score.prefers_biased = score.s_jsd < 0.0;
    score.probes = std::move(probes);
    return score;
}

double model_bias(std::span<const PairScore> scores) {
    if (scores.empty()) throw Error(ErrorKind::EmptyCorpus, "no scored pairs");
    const auto biased = std::count_if(scores.begin(), scores.end(), [](const PairScore& s) { return s.prefers_biased; });
    return 100.0 * static_cast<double>(biased) / static_cast<double>(scores.size());
}

PairScore swap_roles(const PairScore& score) {
    std::vector<ProbeResult> probes;
    probes.reserve(score.probes.size());
    for (const auto& p : score.probes) {
        ProbeResult r = p;
        std::swap(r.p_more, r.p_less);
        std::swap(r.d_more, r.d_less);
        std::swap(r.more_index, r.less_index);
        r.b = r.d_more - r.d_less;
        probes.push_back(std::move(r));
    }
    return pair_score(score.pair_id, std::move(probes));
}

}  // namespace biasattr
