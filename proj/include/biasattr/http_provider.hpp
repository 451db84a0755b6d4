#pragma once

#include <mutex>
#include <optional>
#include <string>

#include "biasattr/error.hpp"
#include "biasattr/provider.hpp"

namespace biasattr {

/// Client for a model bridge speaking the v1 HTTP+JSON protocol:
///   GET  /v1/model     -> ModelInfo
///   POST /v1/tokenize  {text} -> {ids, pieces, offsets}
///   POST /v1/logprobs  {ids, target_index, paradigm, detail, encoding}
///                      -> {gold_logprob, distribution?}
/// A fresh connection is opened per request, so concurrent calls are safe.
class HttpProvider final : public Provider {
public:
    /// `base_url` like "http://localhost:8808".
    explicit HttpProvider(std::string base_url, PayloadEncoding encoding = PayloadEncoding::F32le,
                          int timeout_seconds = 300);

    ModelInfo model_info() override;
    Tokenization tokenize(std::string_view text) override;
    LogProbAnswer logprobs(const LogProbQuery& query) override;

private:
    nlohmann::json get(const std::string& path, ErrorKind failure) const;
    nlohmann::json post(const std::string& path, const nlohmann::json& body, ErrorKind failure) const;

    std::string base_url_;
    PayloadEncoding encoding_;
    int timeout_seconds_;
    std::once_flag info_once_;
    std::optional<ModelInfo> info_;
};

}  // namespace biasattr
