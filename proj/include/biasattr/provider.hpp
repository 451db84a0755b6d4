#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace biasattr {

using TokenId = std::int32_t;

enum class Paradigm { Masked, Causal };
enum class Detail { GoldProb, FullDistribution };
enum class PayloadEncoding { Json, F32le };

std::string_view to_string(Paradigm p);
std::string_view to_string(Detail d);
std::string_view to_string(PayloadEncoding e);
Paradigm parse_paradigm(std::string_view text);
Detail parse_detail(std::string_view text);
PayloadEncoding parse_encoding(std::string_view text);

struct ModelInfo {
    std::string model_id;
    std::int64_t vocab_size = 0;
    Paradigm paradigm = Paradigm::Masked;
    std::optional<TokenId> mask_token_id;
    std::optional<TokenId> bos_token_id;

    /// Throws Error{ProtocolMismatch} if the invariants do not hold.
    void validate() const;
};

struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    bool operator==(const CharSpan&) const = default;
};

struct Tokenization {
    std::vector<TokenId> ids;
    std::vector<std::string> pieces;
    std::vector<CharSpan> offsets;

    std::size_t size() const { return ids.size(); }
    /// Throws Error{TokenizerFailure} if lengths differ or offsets overlap,
    /// run backwards, or fall outside `text_length`.
    void validate(std::size_t text_length) const;
};

struct LogProbQuery {
    std::vector<TokenId> ids;
    std::size_t target_index = 0;
    Paradigm paradigm = Paradigm::Masked;
    Detail detail = Detail::GoldProb;

    bool operator==(const LogProbQuery&) const = default;
};

struct LogProbAnswer {
    double gold_logprob = 0.0;  // natural log
    std::optional<std::vector<double>> distribution;
};

/// Canonical text form of a query. Causal queries drop every id after the
/// target, since the answer depends only on the prefix and the gold token.
/// This string keys both fixture answers and cache records.
std::string canonical_key(const LogProbQuery& query);

/// Source of tokenizations and log-probabilities for one model.
/// Implementations must be safe for concurrent calls.
class Provider {
public:
    virtual ~Provider() = default;

    virtual ModelInfo model_info() = 0;
    virtual Tokenization tokenize(std::string_view text) = 0;
    virtual LogProbAnswer logprobs(const LogProbQuery& query) = 0;
};

/// Forwards to another provider and counts the calls that reach it.
class CountingProvider final : public Provider {
public:
    explicit CountingProvider(Provider& inner) : inner_(inner) {}

    ModelInfo model_info() override {
        ++info_calls_;
        return inner_.model_info();
    }
    Tokenization tokenize(std::string_view text) override {
        ++tokenize_calls_;
        return inner_.tokenize(text);
    }
    LogProbAnswer logprobs(const LogProbQuery& query) override {
        ++logprob_calls_;
        return inner_.logprobs(query);
    }

    std::uint64_t info_calls() const { return info_calls_.load(); }
    std::uint64_t tokenize_calls() const { return tokenize_calls_.load(); }
    std::uint64_t logprob_calls() const { return logprob_calls_.load(); }

private:
    Provider& inner_;
    std::atomic<std::uint64_t> info_calls_{0};
    std::atomic<std::uint64_t> tokenize_calls_{0};
    std::atomic<std::uint64_t> logprob_calls_{0};
};

/// Checks a query against the model before it is sent.
/// Throws Error{IndexOutOfRange} / Error{InvalidArgument}.
void check_query(const LogProbQuery& query, const ModelInfo& info);

/// Checks an answer: VocabMismatch on wrong distribution length,
/// InvalidArgument on a positive or NaN gold log-probability.
void check_answer(const LogProbAnswer& answer, const LogProbQuery& query, const ModelInfo& info);

/// Builds a provider from a CLI spec: `http://host:port` or `fixture:<path>`.
/// Throws Error{ConfigError} for unrecognised specs.
std::unique_ptr<Provider> make_provider(const std::string& spec);

// Wire (de)serialization shared by the HTTP client, fixture files and cache.
namespace wire {

inline constexpr int kProtocolVersion = 1;

nlohmann::json to_json(const ModelInfo& info);
ModelInfo model_info_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Tokenization& tok);
Tokenization tokenization_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LogProbQuery& query, PayloadEncoding encoding);
LogProbQuery query_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LogProbAnswer& answer, PayloadEncoding encoding);
LogProbAnswer answer_from_json(const nlohmann::json& j);

}  // namespace wire

}  // namespace biasattr
