#include "biasattr/fixture_provider.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include "biasattr/error.hpp"

namespace biasattr {

using nlohmann::json;

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

std::string ascii_lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::vector<std::pair<std::string, CharSpan>> word_level_pieces(std::string_view text) {
    std::vector<std::pair<std::string, CharSpan>> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
        } else if (is_punct(c)) {
            out.emplace_back(std::string(1, text[i]), CharSpan{i, i + 1});
            ++i;
        } else {
            std::size_t j = i;
            while (j < text.size() && !is_space(static_cast<unsigned char>(text[j])) &&
                   !is_punct(static_cast<unsigned char>(text[j]))) {
                ++j;
            }
            out.emplace_back(std::string(text.substr(i, j - i)), CharSpan{i, j});
            i = j;
        }
    }
    return out;
}

FixtureProvider::FixtureProvider(const json& fixture) {
    try {
        info_ = wire::model_info_from_json(fixture.at("model"));
        const auto& tokenizer = fixture.at("tokenizer");
        lowercase_ = tokenizer.value("lowercase", false);
        for (const auto& [piece, id] : tokenizer.at("vocab").items()) {
            vocab_.emplace(piece, id.get<TokenId>());
        }
        if (auto it = tokenizer.find("unk_token_id"); it != tokenizer.end() && !it->is_null()) {
            unk_id_ = it->get<TokenId>();
        }
        if (auto it = fixture.find("answers"); it != fixture.end()) {
            for (const auto& [key, answer] : it->items()) answers_.emplace(key, wire::answer_from_json(answer));
        }
        if (auto it = fixture.find("default_gold_logprob"); it != fixture.end() && !it->is_null()) {
            default_logprob_ = it->get<double>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("malformed fixture: ") + e.what());
    }
    for (const auto& [piece, id] : vocab_) {
        if (id < 0 || id >= info_.vocab_size) {
            throw Error(ErrorKind::ConfigError, "fixture vocab id for '" + piece + "' exceeds vocab_size");
        }
    }
}

FixtureProvider FixtureProvider::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open fixture '" + path + "'");
    try {
        return FixtureProvider(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ConfigError, "fixture '" + path + "' is not valid JSON: " + e.what());
    }
}

Tokenization FixtureProvider::tokenize(std::string_view text) {
    if (text.empty()) throw Error(ErrorKind::TokenizerFailure, "cannot tokenize empty text");
    Tokenization tok;
    for (auto& [piece, span] : word_level_pieces(text)) {
        const std::string lookup = lowercase_ ? ascii_lower(piece) : piece;
        auto it = vocab_.find(lookup);
        if (it != vocab_.end()) {
            tok.ids.push_back(it->second);
        } else if (unk_id_) {
            tok.ids.push_back(*unk_id_);
        } else {
            throw Error(ErrorKind::TokenizerFailure, "piece '" + piece + "' is not in the fixture vocabulary");
        }
        tok.pieces.push_back(std::move(piece));
        tok.offsets.push_back(span);
    }
    if (tok.ids.empty()) throw Error(ErrorKind::TokenizerFailure, "text has no tokens");
    return tok;
}

LogProbAnswer FixtureProvider::logprobs(const LogProbQuery& query) {
    check_query(query, info_);
    LogProbAnswer answer;
    if (auto it = answers_.find(canonical_key(query)); it != answers_.end()) {
        answer = it->second;
    } else if (default_logprob_) {
        answer.gold_logprob = *default_logprob_;
    } else {
        throw Error(ErrorKind::InvalidArgument, "fixture has no answer for query " + canonical_key(query));
    }
    if (query.detail == Detail::GoldProb) {
        answer.distribution.reset();
    } else if (!answer.distribution) {
        const auto n = static_cast<std::size_t>(info_.vocab_size);
        const double gold = std::exp(answer.gold_logprob);
        const double rest = n > 1 ? std::log((1.0 - gold) / static_cast<double>(n - 1))
                                  : -std::numeric_limits<double>::infinity();
        std::vector<double> dist(n, rest);
        dist[static_cast<std::size_t>(query.ids[query.target_index])] = answer.gold_logprob;
        answer.distribution = std::move(dist);
    }
    check_answer(answer, query, info_);
    return answer;
}

}  // namespace biasattr
