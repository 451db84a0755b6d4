#pragma once

#include <optional>
#include <string>
#include <unordered_map>

#include "biasattr/provider.hpp"

namespace biasattr {

/// Provider backed by a JSON fixture file. Used by tests and offline demos.
///
/// File layout:
///   {
///     "model":     { ModelInfo wire fields },
///     "tokenizer": { "vocab": {"piece": id, ...}, "unk_token_id": id?, "lowercase": bool? },
///     "answers":   { "<canonical_key>": {"gold_logprob": x, "distribution": [...]?}, ... },
///     "default_gold_logprob": x?
///   }
///
/// The tokenizer is word level: text splits at whitespace, and every ASCII
/// punctuation character becomes its own piece. Queries that are not in
/// `answers` fall back to `default_gold_logprob`, or fail with
/// Error{InvalidArgument} when no default is set. Full-distribution queries
/// without a stored vector get one synthesized: gold mass on the gold id, the
/// remainder spread evenly over the other ids.
class FixtureProvider final : public Provider {
public:
    explicit FixtureProvider(const nlohmann::json& fixture);
    static FixtureProvider from_file(const std::string& path);

    ModelInfo model_info() override { return info_; }
    Tokenization tokenize(std::string_view text) override;
    LogProbAnswer logprobs(const LogProbQuery& query) override;

private:
    ModelInfo info_;
    std::unordered_map<std::string, TokenId> vocab_;
    std::optional<TokenId> unk_id_;
    bool lowercase_ = false;
    std::unordered_map<std::string, LogProbAnswer> answers_;
    std::optional<double> default_logprob_;
};

/// Splits text the way the fixture tokenizer does; exposed for tests.
std::vector<std::pair<std::string, CharSpan>> word_level_pieces(std::string_view text);

}  // namespace biasattr
