#include "biasattr/semtag.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "biasattr/error.hpp"

namespace biasattr {

namespace {

std::string ascii_fold(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view strip_cr(std::string_view line) {
    if (line.ends_with('\r')) line.remove_suffix(1);
    return line;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = strip_cr(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        ++line_no;
        if (!line.empty() && !line.starts_with('#') && line.find_first_not_of(" \t") != std::string_view::npos) {
            fn(line_no, line);
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string item; in >> item;) out.push_back(item);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// USAS codes may carry trailing modifiers: +/- polarity, f/m/n gender,
// c/i multiword markers, % and @ rarity flags.
std::string resolve_code(const std::string& code, const std::map<std::string, std::string>& labels) {
    if (labels.contains(code)) return code;
    std::string base = code;
    while (!base.empty() && std::string_view("+-fmnci%@").find(base.back()) != std::string_view::npos) {
        base.pop_back();
        if (labels.contains(base)) return base;
    }
    return {};
}

bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

}  // namespace

std::vector<std::string> Lexicon::lookup(std::string_view word) const {
    if (auto it = entries.find(ascii_fold(word)); it != entries.end()) return it->second;
    return {std::string(kUnmatchedTag)};
}

std::string Lexicon::label(const std::string& code) const {
    if (auto it = tag_labels.find(code); it != tag_labels.end()) return it->second;
    return code == kUnmatchedTag ? std::string(kUnmatchedLabel) : code;
}

Lexicon parse_lexicon(std::string_view lexicon_tsv, std::string_view labels_tsv) {
    Lexicon lex;
    for_each_line(labels_tsv, [&](std::size_t line_no, std::string_view line) {
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab == 0 || tab + 1 >= line.size()) {
            throw Error(ErrorKind::MalformedLexiconRow, "labels line " + std::to_string(line_no) + ": expected code<TAB>label");
        }
        lex.tag_labels.emplace(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
    });
    lex.tag_labels.emplace(std::string(kUnmatchedTag), std::string(kUnmatchedLabel));

    for_each_line(lexicon_tsv, [&](std::size_t line_no, std::string_view line) {
        const std::string where = "lexicon line " + std::to_string(line_no);
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab == 0 || line.find('\t', tab + 1) != std::string_view::npos) {
            throw Error(ErrorKind::MalformedLexiconRow, where + ": expected form<TAB>tags");
        }
        auto tags = split_ws(line.substr(tab + 1));
        if (tags.empty()) throw Error(ErrorKind::MalformedLexiconRow, where + ": no tags");
        for (auto& tag : tags) {
            auto resolved = resolve_code(tag, lex.tag_labels);
            if (resolved.empty()) throw Error(ErrorKind::UnknownTagCode, where + ": tag '" + tag + "' has no label");
            tag = std::move(resolved);
        }
        // Suffix folding can map two codes onto one field.
        std::vector<std::string> unique;
        for (auto& tag : tags) {
            if (std::find(unique.begin(), unique.end(), tag) == unique.end()) unique.push_back(std::move(tag));
        }
        lex.entries.emplace(ascii_fold(line.substr(0, tab)), std::move(unique));
    });
    return lex;
}

Lexicon load_lexicon(const std::string& lexicon_path, const std::string& labels_path) {
    return parse_lexicon(read_file(lexicon_path), read_file(labels_path));
}

std::vector<Word> split_words(std::string_view sentence) {
    std::vector<Word> words;
    std::size_t i = 0;
    const std::size_t n = sentence.size();
    while (i < n) {
        if (!is_word_char(static_cast<unsigned char>(sentence[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n) {
            const auto c = static_cast<unsigned char>(sentence[j]);
            if (is_word_char(c)) {
                ++j;
            } else if ((c == '\'' || c == '-') && j + 1 < n && is_word_char(static_cast<unsigned char>(sentence[j + 1]))) {
                ++j;
            } else {
                break;
            }
        }
        words.push_back({std::string(sentence.substr(i, j - i)), {i, j}});
        i = j;
    }
    return words;
}

std::vector<WordAttribution> tag_words(const PromptPair& pair, const PairAlignment& alignment,
                                       std::span<const ProbeResult> probes, const Lexicon& lexicon) {
    const auto& sentence = pair.sent_more;
    const auto& offsets = alignment.tok_more.offsets;

    std::vector<bool> covered(sentence.size(), false);
    for (const auto& span : offsets) {
        if (span.end > sentence.size()) {
            throw Error(ErrorKind::OffsetMismatch, "token offset past the end of pair " + std::to_string(pair.pair_id));
        }
        std::fill(covered.begin() + static_cast<std::ptrdiff_t>(span.start),
                  covered.begin() + static_cast<std::ptrdiff_t>(span.end), true);
    }
    for (std::size_t i = 0; i < sentence.size(); ++i) {
        if (!covered[i] && !std::isspace(static_cast<unsigned char>(sentence[i]))) {
            throw Error(ErrorKind::OffsetMismatch, "character " + std::to_string(i) + " of pair " +
                                                       std::to_string(pair.pair_id) + " is not covered by any token");
        }
    }

    std::unordered_map<std::size_t, double> bias_by_token;
    for (const auto& p : probes) bias_by_token.emplace(p.more_index, p.b);

    std::vector<WordAttribution> out;
    for (auto& word : split_words(sentence)) {
        bool complete = true;
        bool any = false;
        double sum = 0.0;
        for (std::size_t t = 0; t < offsets.size(); ++t) {
            const auto& span = offsets[t];
            if (span.start >= word.span.end || span.end <= word.span.start) continue;
            any = true;
            auto it = bias_by_token.find(t);
            if (it == bias_by_token.end()) {
                complete = false;
                break;
            }
            sum += it->second;
        }
        if (!any || !complete) continue;
        WordAttribution wa;
        wa.tags = lexicon.lookup(word.text);
        for (const auto& tag : wa.tags) wa.labels.push_back(lexicon.label(tag));
        wa.word = std::move(word.text);
        wa.span = word.span;
        wa.b_word = sum;
        out.push_back(std::move(wa));
    }
    return out;
}

std::vector<FieldAggregate> aggregate_fields(std::span<const WordAttribution> attributions,
                                             const AggregateOptions& options) {
    struct Counts {
        std::string label;
        std::size_t up = 0, zero = 0, down = 0;
    };
    std::map<std::string, Counts> by_tag;
    for (const auto& wa : attributions) {
        const std::size_t n_tags = options.primary_tag_only ? std::min<std::size_t>(1, wa.tags.size()) : wa.tags.size();
        for (std::size_t k = 0; k < n_tags; ++k) {
            auto& c = by_tag[wa.tags[k]];
            if (c.label.empty()) c.label = k < wa.labels.size() ? wa.labels[k] : wa.tags[k];
            if (wa.b_word < 0.0) {
                ++c.up;
            } else if (wa.b_word > 0.0) {
                ++c.down;
            } else {
                ++c.zero;
            }
        }
    }

    std::vector<FieldAggregate> out;
    for (const auto& [tag, c] : by_tag) {
        const std::size_t n = c.up + c.zero + c.down;
        if (n < options.min_count || n == 0) continue;
        const double total = static_cast<double>(n);
        out.push_back({tag, c.label, n, 100.0 * static_cast<double>(c.up) / total,
                       100.0 * static_cast<double>(c.zero) / total, 100.0 * static_cast<double>(c.down) / total});
    }
    std::stable_sort(out.begin(), out.end(), [](const FieldAggregate& a, const FieldAggregate& b) {
        if (a.pct_up != b.pct_up) return a.pct_up > b.pct_up;
        return a.tag_label < b.tag_label;
    });
    return out;
}

}  // namespace biasattr
