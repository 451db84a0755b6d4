#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace biasattr {

enum class BiasType {
    Gender,
    SexualOrientation,
    RaceColor,
    Religion,
    Age,
    Nationality,
    Disability,
    PhysicalAppearance,
    Socioeconomic,
};

inline constexpr BiasType kAllBiasTypes[] = {
    BiasType::Gender,      BiasType::SexualOrientation, BiasType::RaceColor,
    BiasType::Religion,    BiasType::Age,               BiasType::Nationality,
    BiasType::Disability,  BiasType::PhysicalAppearance, BiasType::Socioeconomic,
};

/// Benchmark spelling, e.g. "sexual-orientation".
std::string_view to_string(BiasType type);
std::optional<BiasType> parse_bias_type(std::string_view text);

/// Parses a comma-separated dimension list ("gender,sexual-orientation").
/// Throws Error{ConfigError} on unknown names or an empty list.
std::set<BiasType> parse_dimensions(std::string_view csv);

enum class Direction { Stereo, AntiStereo };

std::string_view to_string(Direction direction);

struct PromptPair {
    std::int64_t pair_id = 0;
    std::string sent_more;
    std::string sent_less;
    BiasType bias_type = BiasType::Gender;
    // Carried as metadata only; sent_more is always the biased condition.
    Direction direction = Direction::Stereo;
};

struct Corpus {
    std::vector<PromptPair> pairs;
    std::string source_path;
    std::string checksum;  // sha256 hex of the raw bytes
};

/// Parses CrowS-Pairs style CSV (RFC 4180 quoting, embedded commas and
/// newlines allowed). Required columns: sent_more, sent_less,
/// stereo_antistereo, bias_type. The pair id comes from an `id`/`pair_id`
/// column or the unnamed leading index column; without either, rows are
/// numbered from 0. Unknown columns are ignored.
Corpus parse_corpus(std::string_view raw_csv, std::string source_path = {});

/// Reads and parses a corpus file. Throws Error{CorpusUnreadable} if unreadable.
Corpus load_corpus(const std::string& path);

/// Pairs whose bias_type is in `dimensions`, order preserved.
/// Throws Error{InvalidArgument} if `dimensions` is empty.
Corpus filter_pairs(const Corpus& corpus, const std::set<BiasType>& dimensions);

namespace csv {

/// Splits CSV text into records. Each record carries the 1-based line number
/// where it starts. Throws Error{MalformedRow} on unterminated quotes or
/// stray characters after a closing quote.
struct Record {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<Record> split_records(std::string_view text);

}  // namespace csv

}  // namespace biasattr
