#include "biasattr/cache.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "biasattr/digest.hpp"
#include "biasattr/error.hpp"

namespace biasattr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kRecordVersion = 1;

std::string bits_hex(double value) {
    const auto bits = std::bit_cast<std::uint64_t>(value);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
    return buf;
}

double hex_bits(const std::string& text) {
    if (text.size() != 16) throw Error(ErrorKind::CacheCorrupt, "bad float bits");
    return std::bit_cast<double>(static_cast<std::uint64_t>(std::stoull(text, nullptr, 16)));
}

json encode_answer(const LogProbAnswer& answer) {
    json j = {{"gold_logprob", bits_hex(answer.gold_logprob)}};
    if (answer.distribution) j["distribution_f64le"] = digest::encode_f64le(*answer.distribution);
    return j;
}

LogProbAnswer decode_answer(const json& j) {
    LogProbAnswer answer;
    answer.gold_logprob = hex_bits(j.at("gold_logprob").get<std::string>());
    if (auto it = j.find("distribution_f64le"); it != j.end()) {
        answer.distribution = digest::decode_f64le(it->get<std::string>());
    }
    return answer;
}

std::string unique_suffix() {
    thread_local std::mt19937_64 rng{std::random_device{}() ^
                                     std::hash<std::thread::id>{}(std::this_thread::get_id())};
    std::ostringstream out;
    out << std::hex << rng();
    return out.str();
}

}  // namespace

CachedProvider::CachedProvider(std::shared_ptr<Provider> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
        throw Error(ErrorKind::ConfigError, "cache directory '" + dir_.string() + "' is not writable");
    }
}

ModelInfo CachedProvider::model_info() {
    std::call_once(info_once_, [this] { info_ = inner_->model_info(); });
    return *info_;
}

fs::path CachedProvider::record_path(const std::string& digest) const {
    return dir_ / digest.substr(0, 2) / (digest + ".json");
}

std::optional<json> CachedProvider::load(const std::string& kind, const std::string& key) {
    const std::string model_id = model_info().model_id;
    const auto path = record_path(digest::sha256_hex(model_id + '\n' + kind + '\n' + key));
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ++misses_;
        return std::nullopt;
    }
    try {
        const json record = json::parse(in);
        const json& payload = record.at("payload");
        if (record.at("v").get<int>() != kRecordVersion || record.at("model_id").get<std::string>() != model_id ||
            record.at("kind").get<std::string>() != kind || record.at("key").get<std::string>() != key ||
            record.at("checksum").get<std::string>() != digest::sha256_hex(payload.dump())) {
            throw Error(ErrorKind::CacheCorrupt, "record does not match its key or checksum");
        }
        ++hits_;
        return payload;
    } catch (const std::exception&) {
        ++corrupt_;
        ++misses_;
        return std::nullopt;
    }
}

void CachedProvider::store(const std::string& kind, const std::string& key, const json& payload) {
    const std::string model_id = model_info().model_id;
    const auto path = record_path(digest::sha256_hex(model_id + '\n' + kind + '\n' + key));
    const json record = {{"v", kRecordVersion},     {"model_id", model_id},
                         {"kind", kind},            {"key", key},
                         {"payload", payload},      {"checksum", digest::sha256_hex(payload.dump())}};
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    const fs::path tmp = path.string() + ".tmp." + unique_suffix();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoFailure, "cannot write cache record " + tmp.string());
        out << record.dump();
        if (!out.flush()) throw Error(ErrorKind::IoFailure, "cannot write cache record " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::IoFailure, "cannot publish cache record " + path.string());
    }
}

Tokenization CachedProvider::tokenize(std::string_view text) {
    const std::string key(text);
    if (auto payload = load("tokenize", key)) {
        try {
            return wire::tokenization_from_json(*payload);
        } catch (const Error&) {
            ++corrupt_;
        }
    }
    auto tok = inner_->tokenize(text);
    store("tokenize", key, wire::to_json(tok));
    return tok;
}

LogProbAnswer CachedProvider::logprobs(const LogProbQuery& query) {
    const std::string key = canonical_key(query) + '|' + std::string(to_string(query.detail));
    if (auto payload = load("logprobs", key)) {
        try {
            return decode_answer(*payload);
        } catch (const std::exception&) {
            ++corrupt_;
        }
    }
    auto answer = inner_->logprobs(query);
    store("logprobs", key, encode_answer(answer));
    return answer;
}

CacheStats CachedProvider::stats() const { return {hits_.load(), misses_.load(), corrupt_.load()}; }

}  // namespace biasattr
