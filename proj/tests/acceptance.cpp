// Acceptance gate: one line per criterion, exit 0 only when none fail.
// A criterion whose input data is absent prints SKIP; run with
// `--only <name>` to check a single criterion (exit 77 when skipped).

#include <biasattr/cache.hpp>
#include <biasattr/error.hpp>
#include <biasattr/fixture_provider.hpp>
#include <biasattr/pipeline.hpp>
#include <biasattr/run.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace biasattr;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

const fs::path kData = BIASATTR_TEST_DATA;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(6);
    ss << x;
    return ss.str();
}

struct ScratchDir {
    fs::path path = fs::temp_directory_path() / ("biasattr-acceptance-" + std::to_string(::getpid()));
    ScratchDir() {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(n);
    double s = 0;
    for (auto& x : v) s += (x = e(rng));
    for (auto& x : v) x /= s;
    return v;
}

Outcome math_core() {
    std::vector<std::string> failures;
    auto near = [&](const char* what, double got, double want) {
        if (std::abs(got - want) > 1e-5) failures.push_back(std::string(what) + "=" + fmt(got));
    };
    near("H(.5,.25,.25)", entropy(Distribution({0.5, 0.25, 0.25})), 1.5);
    near("H(one-hot)", entropy(Distribution::one_hot(4, 2)), 0.0);
    near("JSD(p,p)", jsd_distance(Distribution({0.5, 0.5}), Distribution({0.5, 0.5})), 0.0);
    near("JSD(disjoint)", jsd_distance(Distribution({1.0, 0.0}), Distribution({0.0, 1.0})), 1.0);
    near("JSD(half,hot)", jsd_distance(Distribution({0.5, 0.5}), Distribution({1.0, 0.0})), 0.557922);
    near("gold_distance(.5)", gold_distance(0.5), 0.557922);
    near("gold_distance(1)", gold_distance(1.0), 0.0);
    near("gold_distance(0)", gold_distance(0.0), 1.0);

    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (std::size_t n : {2u, 16u, 1000u}) {
        for (int i = 0; i < 1000; ++i) {
            Distribution p(random_simplex(rng, n));
            const std::size_t g = rng() % n;
            worst = std::max(worst, std::abs(jsd_distance(p, Distribution::one_hot(n, g)) - gold_distance(p[g])));
        }
    }
    if (worst >= 1e-9) failures.push_back("closed-form max error " + fmt(worst));

    int metric_violations = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 2 + rng() % 64;
        Distribution p(random_simplex(rng, n)), q(random_simplex(rng, n)), r(random_simplex(rng, n));
        const double pq = jsd_distance(p, q), qr = jsd_distance(q, r), pr = jsd_distance(p, r);
        const bool ok = pq == jsd_distance(q, p) && pq >= 0.0 && pq <= 1.0 && jsd_distance(p, p) < 1e-7 &&
                        pr <= pq + qr + 1e-12;
        if (!ok) ++metric_violations;
    }
    if (metric_violations) failures.push_back(std::to_string(metric_violations) + " metric violations");

    if (!failures.empty()) {
        std::string d;
        for (const auto& f : failures) d += (d.empty() ? "" : "; ") + f;
        return {Verdict::Fail, d};
    }
    return {Verdict::Pass, "closed-form max error " + fmt(worst) + ", 1000 metric triples"};
}

Outcome attribution_semantics() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100000; ++i) {
        const double a = u(rng), b = u(rng);
        const double t = token_bias(a, b);
        if ((t < 0) != (a > b) || token_bias(b, a) != -t) {
            return {Verdict::Fail, "sign law broken at p_more=" + fmt(a) + " p_less=" + fmt(b)};
        }
    }

    // Swap the sentences of every fixture pair and rescore through the provider.
    auto fx = FixtureProvider::from_file((kData / "pipeline" / "fixture.json").string());
    auto pairs = load_corpus((kData / "pipeline" / "corpus.csv").string()).pairs;
    auto swapped_pairs = pairs;
    for (auto& p : swapped_pairs) std::swap(p.sent_more, p.sent_less);
    const auto info = fx.model_info();
    auto forward = evaluate_pairs(pairs, fx, info, {}, 2);
    auto backward = evaluate_pairs(swapped_pairs, fx, info, {}, 2);
    std::vector<PairScore> fs_, bs_, synthetic_swapped;
    for (std::size_t i = 0; i < forward.size(); ++i) {
        if (!forward[i].scored() || !backward[i].scored()) return {Verdict::Fail, "fixture pair not scored"};
        const auto& f = *forward[i].score;
        const auto& b = *backward[i].score;
        if (b.s_jsd != -f.s_jsd) return {Verdict::Fail, "S_JSD not antisymmetric for pair " + std::to_string(f.pair_id)};
        for (std::size_t k = 0; k < f.probes.size(); ++k) {
            if (b.probes[k].b != -f.probes[k].b) return {Verdict::Fail, "b(u) not antisymmetric"};
        }
        fs_.push_back(f);
        bs_.push_back(b);
    }
    double worst_b = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<PairScore> scores;
        for (int i = 0; i < 25; ++i) {
            std::vector<ProbeResult> probes;
            for (int k = 0; k < 1 + static_cast<int>(rng() % 6); ++k) {
                probes.push_back(make_probe_result("t", {0, 1}, 0, 0, u(rng), u(rng)));
            }
            scores.push_back(pair_score(i, std::move(probes)));
        }
        std::vector<PairScore> swapped;
        bool has_tie = false;
        for (const auto& s : scores) {
            has_tie |= s.s_jsd == 0.0;
            swapped.push_back(swap_roles(s));
        }
        if (has_tie) continue;
        worst_b = std::max(worst_b, std::abs(model_bias(swapped) - (100.0 - model_bias(scores))));
    }
    if (std::abs(model_bias(bs_) - (100.0 - model_bias(fs_))) > 1e-9 || worst_b > 1e-9) {
        return {Verdict::Fail, "B(swapped) != 100 - B"};
    }

    const std::vector<double> published{-0.0406, -0.0458, 0.0585, 0.0506, -0.1974, 0.0375, -0.0211, -0.0021, -0.0120};
    std::vector<ProbeResult> probes;
    for (double b : published) {
        ProbeResult p;
        p.b = b;
        probes.push_back(p);
    }
    // pair_score averages the stored b values; distances are not needed here.
    const auto score = pair_score(0, probes);
    if (std::abs(score.s_jsd - -0.01916) > 1e-4 || !score.prefers_biased) {
        return {Verdict::Fail, "published-pair mean " + fmt(score.s_jsd)};
    }
    return {Verdict::Pass, "published-pair S_JSD " + fmt(score.s_jsd) + " (prefers biased), B fixture " +
                               fmt(model_bias(fs_)) + " -> swapped " + fmt(model_bias(bs_))};
}

Outcome pipeline_determinism() {
    ScratchDir tmp;
    const std::string expected = slurp(kData / "pipeline" / "expected_pairs.jsonl");
    if (expected.empty()) return {Verdict::Fail, "expected_pairs.jsonl missing"};
    RunConfig cfg;
    cfg.corpus_path = (kData / "pipeline" / "corpus.csv").string();
    cfg.provider_spec = "fixture:" + (kData / "pipeline" / "fixture.json").string();
    cfg.cache_dir = tmp.path / "cache";
    cfg.quiet = true;
    std::uint64_t warm_queries = 0;
    for (int parallelism : {1, 8}) {
        cfg.parallelism = parallelism;
        cfg.output_dir = tmp.path / ("run" + std::to_string(parallelism));
        const auto m = run_eval(cfg);
        if (slurp(cfg.output_dir / "pairs.jsonl") != expected) {
            return {Verdict::Fail, "pairs.jsonl differs at parallelism " + std::to_string(parallelism)};
        }
        if (parallelism == 8) {
            warm_queries = m.provider_stats.at("inner_logprob_calls") + m.provider_stats.at("inner_tokenize_calls");
        }
    }
    if (warm_queries != 0) return {Verdict::Fail, "warm cache issued " + std::to_string(warm_queries) + " queries"};
    return {Verdict::Pass, "byte-identical at parallelism 1 and 8; warm run issued 0 queries"};
}

Outcome causal_prefix() {
    ScratchDir tmp;
    RunConfig cfg;
    cfg.corpus_path = (kData / "causal" / "corpus.csv").string();
    cfg.provider_spec = "fixture:" + (kData / "causal" / "causal_fixture.json").string();
    cfg.output_dir = tmp.path / "run";
    cfg.lexicon_path = (kData / "lexicon" / "lexicon.tsv").string();
    cfg.labels_path = (kData / "lexicon" / "labels.tsv").string();
    cfg.min_count = 0;
    cfg.quiet = true;
    run_eval(cfg);
    const auto lex = load_lexicon(*cfg.lexicon_path, *cfg.labels_path);

    std::size_t prefix_tokens = 0;
    std::vector<WordAttribution> prefix_words;
    for (const auto& rec : load_run(cfg.output_dir)) {
        const std::size_t edit = std::min(rec.alignment.modified_more.front(), rec.alignment.modified_less.front());
        for (const auto& p : rec.score.probes) {
            if (p.more_index < edit && p.less_index < edit) {
                ++prefix_tokens;
                if (p.b != 0.0) return {Verdict::Fail, "prefix token '" + p.token_piece + "' has b=" + fmt(p.b)};
            }
        }
        for (const auto& w : tag_words(rec.pair, rec.alignment, rec.score.probes, lex)) {
            if (w.span.end <= rec.alignment.tok_more.offsets[edit].start) prefix_words.push_back(w);
        }
    }
    if (prefix_tokens == 0) return {Verdict::Fail, "fixture has no prefix tokens"};

    const auto fields = aggregate_fields(prefix_words, {.min_count = 0});
    for (const auto& f : fields) {
        if (f.pct_zero != 100.0) return {Verdict::Fail, "tag " + f.tag + " has pct_zero " + fmt(f.pct_zero)};
    }
    // The run's own table must show the same words in the zero column.
    const auto all_fields = aggregate_fields(
        [&] {
            std::vector<WordAttribution> all;
            for (const auto& rec : load_run(cfg.output_dir)) {
                for (auto& w : tag_words(rec.pair, rec.alignment, rec.score.probes, lex)) all.push_back(std::move(w));
            }
            return all;
        }(),
        {.min_count = 0});
    for (const auto& f : fields) {
        auto it = std::find_if(all_fields.begin(), all_fields.end(), [&](const FieldAggregate& a) { return a.tag == f.tag; });
        if (it == all_fields.end() || it->pct_zero <= 0.0) return {Verdict::Fail, "tag " + f.tag + " missing from zero column"};
    }
    const auto csv = slurp(cfg.output_dir / "semantic_fields.csv");
    if (csv.find("Pronouns,1,0.0,100.0,0.0") == std::string::npos) {
        return {Verdict::Fail, "semantic_fields.csv lacks the zero-column row for the prefix pronoun"};
    }
    return {Verdict::Pass, std::to_string(prefix_tokens) + " prefix tokens at b=0, " + std::to_string(fields.size()) +
                               " tags fully in the zero column"};
}

Outcome corpus_counts() {
    fs::path path = kData / "crows_pairs_anonymized.csv";
    if (const char* env = std::getenv("BIASATTR_CROWS_PAIRS"); env && *env) path = env;
    if (!fs::exists(path)) {
        return {Verdict::Skip, "released CrowS-Pairs CSV not found at " + path.string() +
                                   " (set BIASATTR_CROWS_PAIRS)"};
    }
    const auto corpus = load_corpus(path.string());
    const auto gender = filter_pairs(corpus, {BiasType::Gender}).pairs.size();
    const auto orientation = filter_pairs(corpus, {BiasType::SexualOrientation}).pairs.size();
    const auto both = filter_pairs(corpus, {BiasType::Gender, BiasType::SexualOrientation}).pairs.size();
    const std::string detail = std::to_string(gender) + " gender + " + std::to_string(orientation) +
                               " sexual-orientation = " + std::to_string(both) + " of " +
                               std::to_string(corpus.pairs.size());
    const bool ok = gender == 159 && orientation == 72 && both == 231;
    return {ok ? Verdict::Pass : Verdict::Fail, detail};
}

Outcome semantic_aggregation() {
    ScratchDir tmp;
    RunConfig cfg;
    cfg.corpus_path = (kData / "pipeline" / "corpus.csv").string();
    cfg.provider_spec = "fixture:" + (kData / "pipeline" / "fixture.json").string();
    cfg.output_dir = tmp.path / "run";
    cfg.quiet = true;
    run_eval(cfg);
    const auto lex = load_lexicon((kData / "lexicon" / "lexicon.tsv").string(), (kData / "lexicon" / "labels.tsv").string());
    std::vector<WordAttribution> words;
    for (const auto& rec : load_run(cfg.output_dir)) {
        for (auto& w : tag_words(rec.pair, rec.alignment, rec.score.probes, lex)) words.push_back(std::move(w));
    }
    // Replicate to corpus scale so the 30-token threshold bites.
    std::mt19937_64 rng(5);
    std::vector<WordAttribution> corpus_words;
    for (int rep = 0; rep < 30; ++rep) {
        for (const auto& w : words) {
            if (rng() % 3) corpus_words.push_back(w);
        }
    }
    std::size_t previous = SIZE_MAX, at_30 = 0;
    double worst = 0.0;
    for (std::size_t min_count = 0; min_count <= 60; ++min_count) {
        for (bool primary : {false, true}) {
            const auto rows = aggregate_fields(corpus_words, {min_count, primary});
            for (const auto& r : rows) worst = std::max(worst, std::abs(r.pct_up + r.pct_zero + r.pct_down - 100.0));
            if (!primary) {
                if (rows.size() > previous) return {Verdict::Fail, "raising min_count added tags at " + std::to_string(min_count)};
                previous = rows.size();
                if (min_count == 30) at_30 = rows.size();
            }
        }
    }
    if (worst > 0.01) return {Verdict::Fail, "percentages off by " + fmt(worst)};
    return {Verdict::Pass, "max |sum-100| " + fmt(worst) + ", " + std::to_string(at_30) + " tags at min_count 30"};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {"math-core", math_core},
        {"attribution-semantics", attribution_semantics},
        {"pipeline-determinism", pipeline_determinism},
        {"causal-prefix", causal_prefix},
        {"corpus-counts", corpus_counts},
        {"semantic-aggregation", semantic_aggregation},
    };
    std::string only;
    if (argc == 3 && std::string(argv[1]) == "--only") only = argv[2];

    int failed = 0, skipped = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && only != c.name) continue;
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Verdict::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
        std::cout << tag << "  " << c.name << "  " << o.detail << '\n';
        failed += o.verdict == Verdict::Fail;
        skipped += o.verdict == Verdict::Skip;
    }
    if (ran == 0) {
        std::cerr << "unknown criterion '" << only << "'\n";
        return 2;
    }
    if (failed) return 1;
    return !only.empty() && skipped ? 77 : 0;
}
