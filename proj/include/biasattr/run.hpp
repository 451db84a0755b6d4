#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "biasattr/corpus.hpp"
#include "biasattr/error.hpp"
#include "biasattr/pipeline.hpp"
#include "biasattr/report.hpp"
#include "biasattr/semtag.hpp"

namespace biasattr {

struct RunConfig {
    std::string corpus_path;
    std::set<BiasType> dimensions{BiasType::Gender, BiasType::SexualOrientation};
    std::string provider_spec;
    std::optional<std::filesystem::path> cache_dir;
    std::filesystem::path output_dir;
    int parallelism = 4;
    bool skip_punct = false;
    std::size_t min_count = 30;
    bool primary_tag_only = false;
    std::optional<std::string> lexicon_path;
    std::optional<std::string> labels_path;
    bool quiet = false;

    /// Throws Error{ConfigError} on parallelism < 1, a missing corpus or
    /// provider, output dir equal to the cache dir, or half a lexicon.
    void validate() const;
};

/// Process exit code for an error: 2 config, 3 provider, 4 corpus, 1 other.
int exit_code_for(ErrorKind kind);

/// Full evaluation: load and filter the corpus, score pairs through the
/// (optionally cached) provider, tag words when a lexicon is given, and write
/// the run directory. Files are assembled in a sibling staging directory and
/// moved into place at the end, so a failed run leaves no partial output.
RunManifest run_eval(const RunConfig& config);

/// Same as run_eval with an already-built provider (tests, embedding).
RunManifest run_eval(const RunConfig& config, Provider& provider);

/// One scored pair as persisted in a run directory.
struct PairRecord {
    PromptPair pair;
    PairAlignment alignment;
    PairScore score;
};

/// Reads pairs.jsonl and alignments.jsonl back from a run directory.
std::vector<PairRecord> load_run(const std::filesystem::path& run_dir);
nlohmann::json load_manifest(const std::filesystem::path& run_dir);

/// Alignment and probe plan of one pair, as printed by `biasattr inspect`.
nlohmann::json inspect_pair(const PromptPair& pair, Provider& provider, const ProbeOptions& options);

/// Recomputes word tags and semantic field tables for an existing run and
/// rewrites semantic_fields.*, attributions/ and the manifest.
std::vector<FieldAggregate> run_semtag(const std::filesystem::path& run_dir, const Lexicon& lexicon,
                                       const AggregateOptions& options);

/// Re-renders summary.* and attributions/ from the persisted JSONL. With a
/// lexicon the attribution tables carry tags and semantic_fields.* is
/// rewritten too.
Summary rerender_report(const std::filesystem::path& run_dir, const Lexicon* lexicon = nullptr);

}  // namespace biasattr
