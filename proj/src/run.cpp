#include "biasattr/run.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "biasattr/cache.hpp"
#include "biasattr/digest.hpp"

namespace biasattr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::shared_ptr<spdlog::logger> logger() {
    static auto log = [] {
        auto l = spdlog::get("biasattr");
        return l ? l : spdlog::stderr_color_mt("biasattr");
    }();
    return log;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out << text;
    if (!out.flush()) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool is_previous_run(const fs::path& dir) {
    if (!fs::exists(dir)) return true;
    if (!fs::is_directory(dir)) return false;
    return fs::is_empty(dir) || fs::exists(dir / "manifest.json");
}

json alignment_record(const PromptPair& pair, const PairAlignment& a, const PairScore& score,
                      const std::vector<SkippedProbe>& skipped) {
    json shared = json::array();
    for (const auto& s : a.shared) shared.push_back({s.more, s.less});
    json probes = json::array();
    for (const auto& p : score.probes) probes.push_back({p.more_index, p.less_index});
    json skipped_json = json::array();
    for (const auto& s : skipped) {
        skipped_json.push_back({{"more", s.token.more}, {"less", s.token.less}, {"reason", s.reason}});
    }
    return {{"pair_id", pair.pair_id},
            {"bias_type", to_string(pair.bias_type)},
            {"direction", to_string(pair.direction)},
            {"sent_more", pair.sent_more},
            {"sent_less", pair.sent_less},
            {"tok_more", wire::to_json(a.tok_more)},
            {"tok_less", wire::to_json(a.tok_less)},
            {"shared", shared},
            {"modified_more", a.modified_more},
            {"modified_less", a.modified_less},
            {"probes", probes},
            {"skipped_probes", skipped_json}};
}

std::vector<WordAttribution> word_tags(const PairRecord& rec, const Lexicon* lexicon, std::size_t& warnings) {
    if (!lexicon) return {};
    try {
        return tag_words(rec.pair, rec.alignment, rec.score.probes, *lexicon);
    } catch (const Error& e) {
        ++warnings;
        logger()->warn("pair {}: {}", rec.pair.pair_id, e.what());
        return {};
    }
}

// Writes everything derived from the scored records: summaries, attribution
// tables, semantic fields (with a lexicon) and finally the manifest, which
// lists the digest of every artifact in the directory.
void write_derived(const fs::path& dir, const std::vector<PairRecord>& records, RunManifest& manifest,
                   const Lexicon* lexicon, const AggregateOptions& agg) {
    manifest.config.min_count = agg.min_count;
    manifest.config.primary_tag_only = agg.primary_tag_only;
    const std::string hash = manifest.hash();

    std::vector<PairScore> scores;
    std::map<std::int64_t, BiasType> dimension_of;
    for (const auto& r : records) {
        scores.push_back(r.score);
        dimension_of[r.pair.pair_id] = r.pair.bias_type;
    }
    std::set<BiasType> dims;
    for (const auto& d : manifest.dimensions) {
        if (auto t = parse_bias_type(d)) dims.insert(*t);
    }
    const auto summary = summarize(scores, dimension_of, dims, manifest.model_id);
    write_text(dir / "summary.csv", emit_summary(summary, ReportFormat::Csv, hash));
    write_text(dir / "summary.md", emit_summary(summary, ReportFormat::Markdown, hash));
    write_text(dir / "summary.json", emit_summary(summary, ReportFormat::Json, hash));

    std::size_t warnings = 0;
    std::vector<WordAttribution> all_words;
    std::error_code ec;
    fs::remove_all(dir / "attributions", ec);
    for (const auto& r : records) {
        auto words = word_tags(r, lexicon, warnings);
        write_text(dir / "attributions" / (std::to_string(r.pair.pair_id) + ".md"),
                   emit_attribution_table(r.score, words, ReportFormat::Markdown, hash));
        all_words.insert(all_words.end(), std::make_move_iterator(words.begin()), std::make_move_iterator(words.end()));
    }
    if (lexicon) {
        const auto fields = aggregate_fields(all_words, agg);
        write_text(dir / "semantic_fields.csv", emit_semantic_fields(fields, ReportFormat::Csv, hash));
        write_text(dir / "semantic_fields.md", emit_semantic_fields(fields, ReportFormat::Markdown, hash));
        manifest.provider_stats["semtag_offset_warnings"] = warnings;
    }

    manifest.artifacts.clear();
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
        manifest.artifacts[fs::relative(entry.path(), dir).generic_string()] = digest::sha256_hex(read_text(entry.path()));
    }
    write_text(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
}

Tokenization tokenization_field(const json& j, const char* name) { return wire::tokenization_from_json(j.at(name)); }

}  // namespace

void RunConfig::validate() const {
    if (parallelism < 1) throw Error(ErrorKind::ConfigError, "parallelism must be at least 1");
    if (corpus_path.empty()) throw Error(ErrorKind::ConfigError, "--corpus is required");
    if (provider_spec.empty()) throw Error(ErrorKind::ConfigError, "--provider is required");
    if (output_dir.empty()) throw Error(ErrorKind::ConfigError, "--out is required");
    if (dimensions.empty()) throw Error(ErrorKind::ConfigError, "dimension filter is empty");
    if (lexicon_path.has_value() != labels_path.has_value()) {
        throw Error(ErrorKind::ConfigError, "--lexicon and --labels must be given together");
    }
    if (cache_dir && fs::weakly_canonical(*cache_dir) == fs::weakly_canonical(output_dir)) {
        throw Error(ErrorKind::ConfigError, "output directory must differ from the cache directory");
    }
    if (!is_previous_run(output_dir)) {
        throw Error(ErrorKind::ConfigError,
                    "output directory '" + output_dir.string() + "' exists and is not an earlier run directory");
    }
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ConfigError:
        case ErrorKind::MalformedLexiconRow:
        case ErrorKind::UnknownTagCode:
            return 2;
        case ErrorKind::ProviderUnreachable:
        case ErrorKind::ProtocolMismatch:
        case ErrorKind::VocabMismatch:
            return 3;
        case ErrorKind::MissingColumn:
        case ErrorKind::MalformedRow:
        case ErrorKind::EmptySentence:
        case ErrorKind::CorpusUnreadable:
        case ErrorKind::EmptyCorpus:
            return 4;
        default:
            return 1;
    }
}

RunManifest run_eval(const RunConfig& config) {
    config.validate();
    std::shared_ptr<Provider> provider = make_provider(config.provider_spec);
    return run_eval(config, *provider);
}

RunManifest run_eval(const RunConfig& config, Provider& inner) {
    config.validate();
    if (config.quiet) logger()->set_level(spdlog::level::warn);

    std::optional<Lexicon> lexicon;
    if (config.lexicon_path) lexicon = load_lexicon(*config.lexicon_path, *config.labels_path);

    const Corpus corpus = filter_pairs(load_corpus(config.corpus_path), config.dimensions);

    CountingProvider counting(inner);
    Provider* provider = &counting;
    std::optional<CachedProvider> cached;
    if (config.cache_dir) {
        cached.emplace(std::shared_ptr<Provider>(&counting, [](Provider*) {}), *config.cache_dir);
        provider = &*cached;
    }
    const ModelInfo info = provider->model_info();
    logger()->info("model {} ({}), {} pairs", info.model_id, to_string(info.paradigm), corpus.pairs.size());

    const ProbeOptions probe_options{config.skip_punct};
    auto outcomes = evaluate_pairs(corpus.pairs, *provider, info, probe_options, config.parallelism,
                                   [&](std::size_t done, std::size_t total, const PairOutcome& o) {
                                       if (o.scored()) {
                                           logger()->info("[{}/{}] pair {}: S_JSD {:.6f}", done, total,
                                                          o.pair.pair_id, o.score->s_jsd);
                                       } else {
                                           logger()->warn("[{}/{}] pair {} skipped: {}", done, total,
                                                          o.pair.pair_id, o.skip_reason);
                                       }
                                   });

    RunManifest manifest;
    manifest.model_id = info.model_id;
    manifest.paradigm = info.paradigm;
    manifest.corpus_checksum = corpus.checksum;
    for (BiasType d : kAllBiasTypes) {
        if (config.dimensions.contains(d)) manifest.dimensions.emplace_back(to_string(d));
    }
    manifest.timestamp = utc_timestamp();
    manifest.config.skip_punct = config.skip_punct;
    manifest.config.min_count = config.min_count;
    manifest.config.primary_tag_only = config.primary_tag_only;
    manifest.n_pairs = corpus.pairs.size();

    std::vector<PairRecord> records;
    std::string alignments;
    for (auto& o : outcomes) {
        if (!o.scored()) {
            manifest.skipped.push_back({o.pair.pair_id, o.skip_reason});
            continue;
        }
        alignments += alignment_record(o.pair, *o.alignment, *o.score, o.skipped_probes).dump() + "\n";
        records.push_back({std::move(o.pair), std::move(*o.alignment), std::move(*o.score)});
    }
    manifest.n_scored = records.size();
    if (records.empty()) throw Error(ErrorKind::EmptyCorpus, "no pair could be scored");

    manifest.provider_stats["inner_model_info_calls"] = counting.info_calls();
    manifest.provider_stats["inner_tokenize_calls"] = counting.tokenize_calls();
    manifest.provider_stats["inner_logprob_calls"] = counting.logprob_calls();
    if (cached) {
        const auto stats = cached->stats();
        manifest.provider_stats["cache_hits"] = stats.hits;
        manifest.provider_stats["cache_misses"] = stats.misses;
        manifest.provider_stats["cache_corrupt"] = stats.corrupt;
    }

    // Stage next to the destination so the final rename stays on one filesystem.
    std::vector<PairScore> scores;
    scores.reserve(records.size());
    for (const auto& r : records) scores.push_back(r.score);

    const fs::path out = fs::absolute(config.output_dir);
    std::mt19937_64 rng{std::random_device{}()};
    const fs::path staging = out.parent_path() / ("." + out.filename().string() + ".staging-" + std::to_string(rng() % 1000000007));
    std::error_code ec;
    try {
        fs::create_directories(staging);
        write_text(staging / "pairs.jsonl", emit_jsonl(scores));
        write_text(staging / "alignments.jsonl", alignments);
        write_derived(staging, records, manifest, lexicon ? &*lexicon : nullptr,
                      {config.min_count, config.primary_tag_only});
        if (fs::exists(out)) fs::remove_all(out);
        fs::rename(staging, out);
    } catch (const fs::filesystem_error& e) {
        fs::remove_all(staging, ec);
        throw Error(ErrorKind::IoFailure, e.what());
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
    logger()->info("B = {:.2f} over {} scored pairs ({} skipped)", model_bias(scores), records.size(),
                   manifest.skipped.size());
    return manifest;
}

nlohmann::json load_manifest(const fs::path& run_dir) {
    try {
        return json::parse(read_text(run_dir / "manifest.json"));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("manifest.json is not JSON: ") + e.what());
    }
}

std::vector<PairRecord> load_run(const fs::path& run_dir) {
    std::map<std::int64_t, PairScore> scores;
    for (auto& s : parse_jsonl(read_text(run_dir / "pairs.jsonl"))) scores.emplace(s.pair_id, std::move(s));

    std::vector<PairRecord> records;
    std::istringstream lines(read_text(run_dir / "alignments.jsonl"));
    std::size_t line_no = 0;
    for (std::string line; std::getline(lines, line);) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            PairRecord rec;
            rec.pair.pair_id = j.at("pair_id").get<std::int64_t>();
            rec.pair.sent_more = j.at("sent_more").get<std::string>();
            rec.pair.sent_less = j.at("sent_less").get<std::string>();
            const auto type = parse_bias_type(j.at("bias_type").get<std::string>());
            if (!type) throw Error(ErrorKind::InvalidArgument, "unknown bias_type");
            rec.pair.bias_type = *type;
            rec.pair.direction = j.at("direction").get<std::string>() == "stereo" ? Direction::Stereo : Direction::AntiStereo;
            rec.alignment.tok_more = tokenization_field(j, "tok_more");
            rec.alignment.tok_less = tokenization_field(j, "tok_less");
            for (const auto& s : j.at("shared")) rec.alignment.shared.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
            rec.alignment.modified_more = j.at("modified_more").get<std::vector<std::size_t>>();
            rec.alignment.modified_less = j.at("modified_less").get<std::vector<std::size_t>>();

            auto it = scores.find(rec.pair.pair_id);
            if (it == scores.end()) throw Error(ErrorKind::InvalidArgument, "pair missing from pairs.jsonl");
            rec.score = std::move(it->second);
            scores.erase(it);
            const auto& probe_index = j.at("probes");
            if (probe_index.size() != rec.score.probes.size()) {
                throw Error(ErrorKind::InvalidArgument, "probe count differs from pairs.jsonl");
            }
            for (std::size_t k = 0; k < probe_index.size(); ++k) {
                auto& p = rec.score.probes[k];
                p.more_index = probe_index[k].at(0).get<std::size_t>();
                p.less_index = probe_index[k].at(1).get<std::size_t>();
                if (p.more_index >= rec.alignment.tok_more.size()) throw Error(ErrorKind::InvalidArgument, "probe index out of range");
                p.word_span = rec.alignment.tok_more.offsets[p.more_index];
            }
            records.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::InvalidArgument, "alignments.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!scores.empty()) throw Error(ErrorKind::InvalidArgument, "pairs.jsonl has pairs without alignment records");
    std::sort(records.begin(), records.end(), [](const PairRecord& a, const PairRecord& b) { return a.pair.pair_id < b.pair.pair_id; });
    return records;
}

json inspect_pair(const PromptPair& pair, Provider& provider, const ProbeOptions& options) {
    const auto info = provider.model_info();
    const auto alignment = align_pair(pair, provider);
    const auto plan = plan_probes(alignment, info, options);
    json shared = json::array();
    for (const auto& s : alignment.shared) {
        shared.push_back({{"more", s.more}, {"less", s.less}, {"piece", alignment.tok_more.pieces[s.more]}});
    }
    json probes = json::array();
    for (const auto& p : plan.probes) {
        probes.push_back({{"piece", alignment.tok_more.pieces[p.token.more]},
                          {"more", wire::to_json(p.more, PayloadEncoding::Json)},
                          {"less", wire::to_json(p.less, PayloadEncoding::Json)}});
    }
    json skipped = json::array();
    for (const auto& s : plan.skipped) skipped.push_back({{"more", s.token.more}, {"less", s.token.less}, {"reason", s.reason}});
    return {{"pair_id", pair.pair_id},
            {"bias_type", to_string(pair.bias_type)},
            {"sent_more", pair.sent_more},
            {"sent_less", pair.sent_less},
            {"model_id", info.model_id},
            {"paradigm", to_string(info.paradigm)},
            {"tok_more", wire::to_json(alignment.tok_more)},
            {"tok_less", wire::to_json(alignment.tok_less)},
            {"shared", shared},
            {"modified_more", alignment.modified_more},
            {"modified_less", alignment.modified_less},
            {"plan", {{"queries", plan.query_count()}, {"probes", probes}, {"skipped", skipped}}}};
}

std::vector<FieldAggregate> run_semtag(const fs::path& run_dir, const Lexicon& lexicon, const AggregateOptions& options) {
    auto manifest = RunManifest::from_json(load_manifest(run_dir));
    const auto records = load_run(run_dir);
    write_derived(run_dir, records, manifest, &lexicon, options);

    std::size_t warnings = 0;
    std::vector<WordAttribution> words;
    for (const auto& r : records) {
        auto w = word_tags(r, &lexicon, warnings);
        words.insert(words.end(), w.begin(), w.end());
    }
    return aggregate_fields(words, options);
}

Summary rerender_report(const fs::path& run_dir, const Lexicon* lexicon) {
    auto manifest = RunManifest::from_json(load_manifest(run_dir));
    const auto records = load_run(run_dir);
    write_derived(run_dir, records, manifest, lexicon, {manifest.config.min_count, manifest.config.primary_tag_only});

    std::vector<PairScore> scores;
    std::map<std::int64_t, BiasType> dimension_of;
    for (const auto& r : records) {
        scores.push_back(r.score);
        dimension_of[r.pair.pair_id] = r.pair.bias_type;
    }
    std::set<BiasType> dims;
    for (const auto& d : manifest.dimensions) {
        if (auto t = parse_bias_type(d)) dims.insert(*t);
    }
    return summarize(scores, dimension_of, dims, manifest.model_id);
}

}  // namespace biasattr
