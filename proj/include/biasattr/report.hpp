#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "biasattr/corpus.hpp"
#include "biasattr/infotheory.hpp"
#include "biasattr/provider.hpp"
#include "biasattr/semtag.hpp"

namespace biasattr {

inline constexpr std::string_view kEngineVersion = "1.0.0";

enum class ReportFormat { Markdown, Csv, Json };

/// Shortest round-trip decimal form of a double, laid out like Python's
/// repr(): fixed notation for exponents in [-4, 16), scientific otherwise,
/// and always a fractional part or exponent ("1.0", "4.109e-05").
std::string format_double(double value);

struct RunConfigSnapshot {
    int log_base = 2;
    std::string tie_rule = "s_jsd < 0 is biased; ties are not";
    bool skip_punct = false;
    std::size_t min_count = 30;
    bool primary_tag_only = false;
    std::string lcs_tiebreak = "leftmost-in-more";
};

struct SkippedPair {
    std::int64_t pair_id = 0;
    std::string reason;
};

/// Describes one run. The hash covers everything that determines the
/// results (model, corpus, dimensions, engine version, configuration) and
/// leaves out the timestamp, parallelism and bookkeeping fields.
struct RunManifest {
    std::string model_id;
    Paradigm paradigm = Paradigm::Masked;
    std::string corpus_checksum;
    std::vector<std::string> dimensions;
    std::string engine_version{kEngineVersion};
    std::string timestamp;
    RunConfigSnapshot config;

    std::size_t n_pairs = 0;
    std::size_t n_scored = 0;
    std::vector<SkippedPair> skipped;
    std::map<std::string, std::uint64_t> provider_stats;
    std::map<std::string, std::string> artifacts;  // file name -> sha256

    std::string hash() const;
    nlohmann::json to_json() const;
    /// Throws Error{InvalidArgument} on a malformed manifest.
    static RunManifest from_json(const nlohmann::json& j);
};

/// One row per probed token: piece, b(u), direction, semantic field labels.
/// Markdown prints b(u) with 4 decimals (scientific below 1e-4); CSV and
/// JSON carry the full value.
std::string emit_attribution_table(const PairScore& score, std::span<const WordAttribution> tags, ReportFormat format,
                                   const std::string& manifest_hash = {});

/// "more bias" for b < 0, "less bias" for b > 0, "neutral" otherwise.
std::string_view direction_label(double b);

struct SummaryRow {
    std::string dimension;  // benchmark spelling, or "all"
    std::size_t n_pairs = 0;
    std::size_t n_biased = 0;
    std::optional<double> bias_score;  // unset when n_pairs == 0
};

struct Summary {
    std::string model_id;
    std::vector<SummaryRow> rows;  // requested dimensions in order, then "all"
};

/// B per dimension and overall. Throws Error{EmptyCorpus} if `scores` is
/// empty or a score's pair id is missing from `dimension_of`.
Summary summarize(std::span<const PairScore> scores, const std::map<std::int64_t, BiasType>& dimension_of,
                  const std::set<BiasType>& dimensions, std::string model_id);

/// Markdown rounds to 2 decimals in the one-row-per-model table layout;
/// CSV and JSON keep full precision.
std::string emit_summary(const Summary& summary, ReportFormat format, const std::string& manifest_hash = {});

/// One compact JSON object per pair, ordered by pair id:
/// {"pair_id","s_jsd","prefers_biased","probes":[{"piece","p_more","p_less","b"}]}
std::string emit_jsonl(std::span<const PairScore> scores);

/// Inverse of emit_jsonl. Distances are recomputed from the probabilities.
/// Throws Error{InvalidArgument} with the line number on malformed input.
std::vector<PairScore> parse_jsonl(std::string_view text);

/// Semantic field table: tag_label, n_tokens, pct_up, pct_zero, pct_down.
std::string emit_semantic_fields(std::span<const FieldAggregate> fields, ReportFormat format,
                                 const std::string& manifest_hash = {});

}  // namespace biasattr
