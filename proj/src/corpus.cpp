#include "biasattr/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "biasattr/digest.hpp"
#include "biasattr/error.hpp"

namespace biasattr {

namespace {

constexpr std::string_view kWhitespace = " \t\r\n\f\v";

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(kWhitespace);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(kWhitespace);
    return s.substr(first, last - first + 1);
}

}  // namespace

std::string_view to_string(BiasType type) {
    switch (type) {
        case BiasType::Gender: return "gender";
        case BiasType::SexualOrientation: return "sexual-orientation";
        case BiasType::RaceColor: return "race-color";
        case BiasType::Religion: return "religion";
        case BiasType::Age: return "age";
        case BiasType::Nationality: return "nationality";
        case BiasType::Disability: return "disability";
        case BiasType::PhysicalAppearance: return "physical-appearance";
        case BiasType::Socioeconomic: return "socioeconomic";
    }
    return "unknown";
}

std::optional<BiasType> parse_bias_type(std::string_view text) {
    text = trim(text);
    for (BiasType t : kAllBiasTypes) {
        if (to_string(t) == text) return t;
    }
    return std::nullopt;
}

std::set<BiasType> parse_dimensions(std::string_view csv) {
    std::set<BiasType> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const auto comma = csv.find(',', pos);
        const auto item = trim(csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (!item.empty()) {
            auto t = parse_bias_type(item);
            if (!t) throw Error(ErrorKind::ConfigError, "unknown bias dimension '" + std::string(item) + "'");
            out.insert(*t);
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw Error(ErrorKind::ConfigError, "dimension list is empty");
    return out;
}

std::string_view to_string(Direction direction) {
    return direction == Direction::Stereo ? "stereo" : "antistereo";
}

namespace csv {

std::vector<Record> split_records(std::string_view text) {
    // Strip a UTF-8 byte order mark.
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<Record> records;
    Record current;
    std::string field;
    std::size_t line = 1;
    current.line = line;
    bool in_quotes = false;
    bool after_quote = false;  // just closed a quoted field
    bool record_has_content = false;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        after_quote = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(current));
        current = Record{};
        record_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == ',') {
            end_field();
            record_has_content = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (record_has_content || !field.empty() || after_quote) {
                end_record();
            } else {
                // Blank line.
                current.fields.clear();
            }
            ++line;
            current.line = line;
        } else if (c == '"') {
            if (!field.empty() || after_quote) {
                throw Error(ErrorKind::MalformedRow,
                            "row at line " + std::to_string(current.line) + ": quote inside unquoted field");
            }
            in_quotes = true;
            record_has_content = true;
        } else {
            if (after_quote) {
                throw Error(ErrorKind::MalformedRow, "row at line " + std::to_string(current.line) +
                                                         ": characters after closing quote");
            }
            field.push_back(c);
            record_has_content = true;
        }
    }
    if (in_quotes) {
        throw Error(ErrorKind::MalformedRow,
                    "row at line " + std::to_string(current.line) + ": unterminated quoted field");
    }
    if (record_has_content || !field.empty() || after_quote) end_record();
    return records;
}

}  // namespace csv

Corpus parse_corpus(std::string_view raw_csv, std::string source_path) {
    Corpus corpus;
    corpus.source_path = std::move(source_path);
    corpus.checksum = digest::sha256_hex(raw_csv);

    auto records = csv::split_records(raw_csv);
    if (records.empty()) throw Error(ErrorKind::MissingColumn, "corpus has no header row");

    const auto& header = records.front().fields;
    std::map<std::string, std::size_t, std::less<>> column;
    for (std::size_t i = 0; i < header.size(); ++i) {
        column.emplace(std::string(trim(header[i])), i);
    }
    auto require = [&](std::string_view name) {
        auto it = column.find(name);
        if (it == column.end()) throw Error(ErrorKind::MissingColumn, "header lacks column '" + std::string(name) + "'");
        return it->second;
    };
    const std::size_t col_more = require("sent_more");
    const std::size_t col_less = require("sent_less");
    const std::size_t col_dir = require("stereo_antistereo");
    const std::size_t col_type = require("bias_type");
    std::optional<std::size_t> col_id;
    for (std::string_view name : {"pair_id", "id", ""}) {
        if (auto it = column.find(name); it != column.end()) {
            col_id = it->second;
            break;
        }
    }

    std::unordered_set<std::int64_t> seen_ids;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string where = "row " + std::to_string(r) + " (line " + std::to_string(rec.line) + ")";
        if (rec.fields.size() != header.size()) {
            throw Error(ErrorKind::MalformedRow, where + ": expected " + std::to_string(header.size()) +
                                                     " fields, found " + std::to_string(rec.fields.size()));
        }
        PromptPair pair;
        if (col_id) {
            const auto text = trim(rec.fields[*col_id]);
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), pair.pair_id);
            if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
                throw Error(ErrorKind::MalformedRow, where + ": pair id '" + std::string(text) + "' is not an integer");
            }
        } else {
            pair.pair_id = static_cast<std::int64_t>(r - 1);
        }
        if (!seen_ids.insert(pair.pair_id).second) {
            throw Error(ErrorKind::MalformedRow, where + ": duplicate pair id " + std::to_string(pair.pair_id));
        }
        pair.sent_more = std::string(trim(rec.fields[col_more]));
        pair.sent_less = std::string(trim(rec.fields[col_less]));
        if (pair.sent_more.empty() || pair.sent_less.empty()) {
            throw Error(ErrorKind::EmptySentence, where + ": empty sentence");
        }
        const auto type = parse_bias_type(rec.fields[col_type]);
        if (!type) {
            throw Error(ErrorKind::MalformedRow, where + ": unknown bias_type '" + rec.fields[col_type] + "'");
        }
        pair.bias_type = *type;
        const auto dir = trim(rec.fields[col_dir]);
        if (dir == "stereo") {
            pair.direction = Direction::Stereo;
        } else if (dir == "antistereo") {
            pair.direction = Direction::AntiStereo;
        } else {
            throw Error(ErrorKind::MalformedRow, where + ": unknown direction '" + std::string(dir) + "'");
        }
        corpus.pairs.push_back(std::move(pair));
    }
    return corpus;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::CorpusUnreadable, "cannot open corpus '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_corpus(buffer.str(), path);
}

Corpus filter_pairs(const Corpus& corpus, const std::set<BiasType>& dimensions) {
    if (dimensions.empty()) throw Error(ErrorKind::InvalidArgument, "dimension filter is empty");
    Corpus out;
    out.source_path = corpus.source_path;
    out.checksum = corpus.checksum;
    std::copy_if(corpus.pairs.begin(), corpus.pairs.end(), std::back_inserter(out.pairs),
                 [&](const PromptPair& p) { return dimensions.contains(p.bias_type); });
    return out;
}

}  // namespace biasattr
