#include <algorithm>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "biasattr/cache.hpp"
#include "biasattr/run.hpp"

using namespace biasattr;

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* value = std::getenv(name);
    return value && *value ? std::string(value) : std::move(fallback);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"biasattr: token-level bias attribution for paired-sentence benchmarks"};
    app.require_subcommand(1);

    RunConfig config;
    std::string dimensions = "gender,sexual-orientation";
    std::string cache_dir = env_or("BIASATTR_CACHE", "");
    std::string lexicon, labels;

    auto* eval = app.add_subcommand("eval", "Score a corpus against a model and write a run directory");
    eval->add_option("--corpus", config.corpus_path, "CrowS-Pairs CSV")->required();
    eval->add_option("--provider", config.provider_spec, "http://host:port or fixture:<path>")->required();
    eval->add_option("--out", config.output_dir, "Run directory to create")->required();
    eval->add_option("--dimensions", dimensions, "Comma-separated bias dimensions")->capture_default_str();
    eval->add_option("--cache-dir", cache_dir, "Answer cache (default: $BIASATTR_CACHE)");
    eval->add_option("--parallelism,-j", config.parallelism, "Pairs scored concurrently")->capture_default_str();
    eval->add_flag("--skip-punct", config.skip_punct, "Do not probe punctuation tokens");
    eval->add_option("--min-count", config.min_count, "Minimum tokens per semantic field")->capture_default_str();
    eval->add_flag("--primary-tag-only", config.primary_tag_only, "Count each word under its first tag only");
    eval->add_option("--lexicon", lexicon, "Semantic lexicon TSV (form<TAB>tags)");
    eval->add_option("--labels", labels, "Tag label TSV (code<TAB>label)");
    eval->add_flag("--quiet,-q", config.quiet, "Only log warnings");

    std::string corpus_path, provider_spec;
    std::int64_t pair_id = 0;
    bool skip_punct = false;
    auto* inspect = app.add_subcommand("inspect", "Print the alignment and probe plan of one pair as JSON");
    inspect->add_option("--corpus", corpus_path, "CrowS-Pairs CSV")->required();
    inspect->add_option("--provider", provider_spec, "http://host:port or fixture:<path>")->required();
    inspect->add_option("--pair", pair_id, "Pair id")->required();
    inspect->add_option("--cache-dir", cache_dir, "Answer cache (default: $BIASATTR_CACHE)");
    inspect->add_flag("--skip-punct", skip_punct, "Do not probe punctuation tokens");

    std::string results;
    std::size_t min_count = 30;
    bool primary_only = false;
    auto* semtag = app.add_subcommand("semtag", "Semantic field analysis of an existing run");
    semtag->add_option("--lexicon", lexicon, "Semantic lexicon TSV")->required();
    semtag->add_option("--labels", labels, "Tag label TSV")->required();
    semtag->add_option("--results", results, "Run directory")->required();
    semtag->add_option("--min-count", min_count, "Minimum tokens per semantic field")->capture_default_str();
    semtag->add_flag("--primary-tag-only", primary_only, "Count each word under its first tag only");

    auto* report = app.add_subcommand("report", "Re-render summaries and attribution tables from pairs.jsonl");
    report->add_option("--results", results, "Run directory")->required();
    report->add_option("--lexicon", lexicon, "Semantic lexicon TSV");
    report->add_option("--labels", labels, "Tag label TSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*eval) {
            config.dimensions = parse_dimensions(dimensions);
            if (!cache_dir.empty()) config.cache_dir = cache_dir;
            if (!lexicon.empty()) config.lexicon_path = lexicon;
            if (!labels.empty()) config.labels_path = labels;
            const auto manifest = run_eval(config);
            std::cout << config.output_dir.string() << " (" << manifest.n_scored << "/" << manifest.n_pairs
                      << " pairs scored)\n";
        } else if (*inspect) {
            std::shared_ptr<Provider> provider = make_provider(provider_spec);
            if (!cache_dir.empty()) provider = std::make_shared<CachedProvider>(provider, cache_dir);
            const auto corpus = load_corpus(corpus_path);
            const auto it = std::find_if(corpus.pairs.begin(), corpus.pairs.end(),
                                         [&](const PromptPair& p) { return p.pair_id == pair_id; });
            if (it == corpus.pairs.end()) {
                throw Error(ErrorKind::ConfigError, "no pair with id " + std::to_string(pair_id));
            }
            std::cout << inspect_pair(*it, *provider, {skip_punct}).dump(2) << '\n';
        } else if (*semtag) {
            const auto lex = load_lexicon(lexicon, labels);
            const auto fields = run_semtag(results, lex, {min_count, primary_only});
            std::cout << emit_semantic_fields(fields, ReportFormat::Markdown);
        } else if (*report) {
            if (lexicon.empty() != labels.empty()) {
                throw Error(ErrorKind::ConfigError, "--lexicon and --labels must be given together");
            }
            std::optional<Lexicon> lex;
            if (!lexicon.empty()) lex = load_lexicon(lexicon, labels);
            const auto summary = rerender_report(results, lex ? &*lex : nullptr);
            std::cout << emit_summary(summary, ReportFormat::Markdown);
        }
    } catch (const Error& e) {
        std::cerr << "biasattr: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "biasattr: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
