// Parallel kernels against their serial references.
//
//   JsdParallel / JsdSerial       vocabulary-sized JS distance (OpenMP reduction)
//   PairsParallel / PairsSerial   per-pair driver over a provider with simulated
//                                 round-trip latency, the regime of a real bridge

#include <benchmark/benchmark.h>

#include <biasattr/fixture_provider.hpp>
#include <biasattr/infotheory.hpp>
#include <biasattr/pipeline.hpp>

#include <chrono>
#include <random>
#include <thread>

using namespace biasattr;

namespace {

std::pair<Distribution, Distribution> random_pair(std::size_t n) {
    std::mt19937_64 rng(n);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sp += (p[i] = e(rng));
        sq += (q[i] = e(rng));
    }
    for (std::size_t i = 0; i < n; ++i) {
        p[i] /= sp;
        q[i] /= sq;
    }
    return {Distribution(std::move(p)), Distribution(std::move(q))};
}

void JsdParallel(benchmark::State& state) {
    const auto [p, q] = random_pair(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(jsd_distance(p, q));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void JsdSerial(benchmark::State& state) {
    const auto [p, q] = random_pair(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(reference::jsd_distance(p, q));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

// 30k-250k covers the vocabularies of common masked and causal models.
BENCHMARK(JsdParallel)->Arg(30522)->Arg(50265)->Arg(128000)->Arg(250002);
BENCHMARK(JsdSerial)->Arg(30522)->Arg(50265)->Arg(128000)->Arg(250002);

class SlowProvider final : public Provider {
public:
    SlowProvider(Provider& inner, std::chrono::microseconds delay) : inner_(inner), delay_(delay) {}
    ModelInfo model_info() override { return inner_.model_info(); }
    Tokenization tokenize(std::string_view text) override { return inner_.tokenize(text); }
    LogProbAnswer logprobs(const LogProbQuery& query) override {
        std::this_thread::sleep_for(delay_);
        return inner_.logprobs(query);
    }

private:
    Provider& inner_;
    std::chrono::microseconds delay_;
};

struct PairWorkload {
    std::vector<PromptPair> pairs;
    FixtureProvider fixture;

    PairWorkload() : fixture(build()) {}

    nlohmann::json build() {
        const char* subjects[] = {"Women", "Men", "Girls", "Boys", "Mothers", "Fathers", "Lesbians", "Gay men"};
        const char* rest = " are too emotional to be good scientists and engineers at work.";
        nlohmann::json vocab = {{"[MASK]", 0}};
        for (int i = 0; i < 64; ++i) {
            PromptPair p;
            p.pair_id = i;
            p.sent_more = std::string(subjects[i % 8]) + rest;
            p.sent_less = std::string(subjects[(i + 1) % 8]) + rest;
            for (const auto* s : {&p.sent_more, &p.sent_less}) {
                for (const auto& [piece, span] : word_level_pieces(*s)) {
                    if (!vocab.contains(piece)) vocab[piece] = static_cast<int>(vocab.size());
                }
            }
            pairs.push_back(std::move(p));
        }
        return {{"model", {{"v", 1}, {"model_id", "bench"}, {"vocab_size", vocab.size()}, {"paradigm", "masked"},
                           {"mask_token_id", 0}}},
                {"tokenizer", {{"vocab", vocab}}},
                {"default_gold_logprob", -0.7}};
    }
};

void PairsParallel(benchmark::State& state) {
    PairWorkload w;
    SlowProvider slow(w.fixture, std::chrono::microseconds(200));
    const auto info = slow.model_info();
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate_pairs(w.pairs, slow, info, {}, static_cast<int>(state.range(0))));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.pairs.size()));
}

void PairsSerial(benchmark::State& state) {
    PairWorkload w;
    SlowProvider slow(w.fixture, std::chrono::microseconds(200));
    const auto info = slow.model_info();
    for (auto _ : state) benchmark::DoNotOptimize(reference::evaluate_pairs(w.pairs, slow, info, {}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.pairs.size()));
}

BENCHMARK(PairsParallel)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(PairsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
