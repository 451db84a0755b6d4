#include "biasattr/http_provider.hpp"

#include <httplib.h>

namespace biasattr {

using nlohmann::json;

HttpProvider::HttpProvider(std::string base_url, PayloadEncoding encoding, int timeout_seconds)
    : base_url_(std::move(base_url)), encoding_(encoding), timeout_seconds_(timeout_seconds) {
    while (base_url_.ends_with('/')) base_url_.pop_back();
}

namespace {

json decode_response(const httplib::Result& res, const std::string& what, ErrorKind failure) {
    if (!res) {
        throw Error(ErrorKind::ProviderUnreachable, what + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 400 || res->status == 422) {
        throw Error(failure == ErrorKind::TokenizerFailure ? failure : ErrorKind::ProtocolMismatch,
                    what + ": HTTP " + std::to_string(res->status) + " " + res->body);
    }
    if (res->status != 200) {
        throw Error(failure, what + ": HTTP " + std::to_string(res->status) + " " + res->body);
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ProtocolMismatch, what + ": response is not JSON: " + e.what());
    }
}

}  // namespace

json HttpProvider::get(const std::string& path, ErrorKind failure) const {
    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(timeout_seconds_);
    return decode_response(client.Get(path), "GET " + base_url_ + path, failure);
}

json HttpProvider::post(const std::string& path, const json& body, ErrorKind failure) const {
    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(timeout_seconds_);
    return decode_response(client.Post(path, body.dump(), "application/json"), "POST " + base_url_ + path, failure);
}

ModelInfo HttpProvider::model_info() {
    std::call_once(info_once_, [this] {
        info_ = wire::model_info_from_json(get("/v1/model", ErrorKind::ProviderUnreachable));
    });
    if (!info_) throw Error(ErrorKind::ProviderUnreachable, "model info unavailable");
    return *info_;
}

Tokenization HttpProvider::tokenize(std::string_view text) {
    if (text.empty()) throw Error(ErrorKind::TokenizerFailure, "cannot tokenize empty text");
    auto tok = wire::tokenization_from_json(
        post("/v1/tokenize", {{"v", wire::kProtocolVersion}, {"text", text}}, ErrorKind::TokenizerFailure));
    tok.validate(text.size());
    if (tok.ids.empty()) throw Error(ErrorKind::TokenizerFailure, "bridge returned no tokens");
    return tok;
}

LogProbAnswer HttpProvider::logprobs(const LogProbQuery& query) {
    const auto info = model_info();
    check_query(query, info);
    auto answer =
        wire::answer_from_json(post("/v1/logprobs", wire::to_json(query, encoding_), ErrorKind::ProviderUnreachable));
    if (query.detail == Detail::GoldProb) answer.distribution.reset();
    check_answer(answer, query, info);
    return answer;
}

}  // namespace biasattr
