#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "biasattr/align.hpp"
#include "biasattr/corpus.hpp"
#include "biasattr/infotheory.hpp"

namespace biasattr {

/// Tag reserved for words missing from the lexicon.
inline constexpr std::string_view kUnmatchedTag = "Z99";
inline constexpr std::string_view kUnmatchedLabel = "Unmatched";

/// Single-word semantic field lexicon. Keys are ASCII case-folded; the first
/// tag of an entry is its primary tag.
struct Lexicon {
    std::unordered_map<std::string, std::vector<std::string>> entries;
    std::map<std::string, std::string> tag_labels;

    /// Tags for a surface form, or {Z99} when unknown.
    std::vector<std::string> lookup(std::string_view word) const;
    std::string label(const std::string& code) const;
};

/// Parses `form<TAB>tag1 tag2 ...` rows and `code<TAB>label` rows. Blank lines
/// and lines starting with '#' are ignored; a repeated form keeps its first
/// row. Tag codes carrying USAS modifier suffixes (G2.1-, S2.1f, A5.1+) fall
/// back to the unsuffixed code when only that one has a label.
/// Throws Error{MalformedLexiconRow} (with line number) and
/// Error{UnknownTagCode}.
Lexicon parse_lexicon(std::string_view lexicon_tsv, std::string_view labels_tsv);
Lexicon load_lexicon(const std::string& lexicon_path, const std::string& labels_path);

struct Word {
    std::string text;
    CharSpan span;
};

/// Words of a sentence: maximal runs without whitespace or punctuation, where
/// an apostrophe or hyphen between two word characters stays inside the word.
std::vector<Word> split_words(std::string_view sentence);

struct WordAttribution {
    std::string word;
    CharSpan span;
    std::vector<std::string> tags;
    std::vector<std::string> labels;  // parallel to tags
    double b_word = 0.0;              // sum of b(u) over the word's tokens
};

/// Word-level attribution for sent_more. A word is reported only when every
/// token overlapping it is shared and probed; words touching a modified or
/// skipped token are left out. Throws Error{OffsetMismatch} when the token
/// offsets miss a non-space character of the sentence.
std::vector<WordAttribution> tag_words(const PromptPair& pair, const PairAlignment& alignment,
                                       std::span<const ProbeResult> probes, const Lexicon& lexicon);

struct FieldAggregate {
    std::string tag;
    std::string tag_label;
    std::size_t n_tokens = 0;
    double pct_up = 0.0;    // b_word < 0
    double pct_zero = 0.0;  // b_word == 0
    double pct_down = 0.0;  // b_word > 0
};

struct AggregateOptions {
    std::size_t min_count = 30;
    bool primary_tag_only = false;
};

/// Groups word instances by tag (a multi-tag word counts under each tag
/// unless primary_tag_only), drops tags seen fewer than min_count times and
/// sorts by pct_up descending, then by label.
std::vector<FieldAggregate> aggregate_fields(std::span<const WordAttribution> attributions,
                                             const AggregateOptions& options = {});

}  // namespace biasattr
