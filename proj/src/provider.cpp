#include "biasattr/provider.hpp"

#include <algorithm>

#include <cmath>

#include "biasattr/digest.hpp"
#include "biasattr/error.hpp"
#include "biasattr/fixture_provider.hpp"
#include "biasattr/http_provider.hpp"

namespace biasattr {

using nlohmann::json;

std::string_view to_string(Paradigm p) { return p == Paradigm::Masked ? "masked" : "causal"; }
std::string_view to_string(Detail d) { return d == Detail::GoldProb ? "gold_prob" : "full_distribution"; }
std::string_view to_string(PayloadEncoding e) { return e == PayloadEncoding::Json ? "json" : "f32le"; }

Paradigm parse_paradigm(std::string_view text) {
    if (text == "masked") return Paradigm::Masked;
    if (text == "causal") return Paradigm::Causal;
    throw Error(ErrorKind::ProtocolMismatch, "unknown paradigm '" + std::string(text) + "'");
}

Detail parse_detail(std::string_view text) {
    if (text == "gold_prob") return Detail::GoldProb;
    if (text == "full_distribution") return Detail::FullDistribution;
    throw Error(ErrorKind::ProtocolMismatch, "unknown detail '" + std::string(text) + "'");
}

PayloadEncoding parse_encoding(std::string_view text) {
    if (text == "json") return PayloadEncoding::Json;
    if (text == "f32le") return PayloadEncoding::F32le;
    throw Error(ErrorKind::ProtocolMismatch, "unknown encoding '" + std::string(text) + "'");
}

void ModelInfo::validate() const {
    if (model_id.empty()) throw Error(ErrorKind::ProtocolMismatch, "model_id is empty");
    if (vocab_size <= 0) throw Error(ErrorKind::ProtocolMismatch, "vocab_size must be positive");
    if (paradigm == Paradigm::Masked && !mask_token_id) {
        throw Error(ErrorKind::ProtocolMismatch, "masked model without a mask token");
    }
    auto in_vocab = [&](std::optional<TokenId> id) { return !id || (*id >= 0 && *id < vocab_size); };
    if (!in_vocab(mask_token_id) || !in_vocab(bos_token_id)) {
        throw Error(ErrorKind::ProtocolMismatch, "special token id outside the vocabulary");
    }
}

void Tokenization::validate(std::size_t text_length) const {
    if (pieces.size() != ids.size() || offsets.size() != ids.size()) {
        throw Error(ErrorKind::TokenizerFailure, "ids, pieces and offsets differ in length");
    }
    std::size_t previous_end = 0;
    for (const auto& span : offsets) {
        if (span.start > span.end || span.end > text_length || span.start < previous_end) {
            throw Error(ErrorKind::TokenizerFailure, "token offsets overlap or leave the text");
        }
        previous_end = span.end;
    }
}

std::string canonical_key(const LogProbQuery& query) {
    std::string key(to_string(query.paradigm));
    key += ':';
    key += std::to_string(query.target_index);
    key += ':';
    const std::size_t count =
        query.paradigm == Paradigm::Causal ? std::min(query.ids.size(), query.target_index + 1) : query.ids.size();
    for (std::size_t i = 0; i < count; ++i) {
        if (i) key += ',';
        key += std::to_string(query.ids[i]);
    }
    return key;
}

void check_query(const LogProbQuery& query, const ModelInfo& info) {
    if (query.target_index >= query.ids.size()) {
        throw Error(ErrorKind::IndexOutOfRange, "target_index " + std::to_string(query.target_index) +
                                                    " outside sequence of length " + std::to_string(query.ids.size()));
    }
    if (query.paradigm != info.paradigm) {
        throw Error(ErrorKind::InvalidArgument, "query paradigm does not match the model");
    }
    if (query.paradigm == Paradigm::Causal && query.target_index == 0 && !info.bos_token_id) {
        throw Error(ErrorKind::InvalidArgument, "causal query at position 0 needs a BOS token");
    }
    for (TokenId id : query.ids) {
        if (id < 0 || id >= info.vocab_size) {
            throw Error(ErrorKind::VocabMismatch, "token id " + std::to_string(id) + " outside the vocabulary");
        }
    }
}

void check_answer(const LogProbAnswer& answer, const LogProbQuery& query, const ModelInfo& info) {
    if (std::isnan(answer.gold_logprob) || answer.gold_logprob > 1e-6) {
        throw Error(ErrorKind::InvalidArgument, "gold log-probability must be <= 0");
    }
    if (answer.distribution) {
        if (static_cast<std::int64_t>(answer.distribution->size()) != info.vocab_size) {
            throw Error(ErrorKind::VocabMismatch, "distribution has " + std::to_string(answer.distribution->size()) +
                                                      " entries, vocabulary has " + std::to_string(info.vocab_size));
        }
        const auto& lp = *answer.distribution;
        const double top = *std::max_element(lp.begin(), lp.end());
        double sum = 0.0;
        for (double x : lp) sum += std::exp(x - top);
        if (!std::isfinite(top) || std::abs(top + std::log(sum)) > 1e-3) {
            throw Error(ErrorKind::InvalidArgument, "distribution log-probabilities do not normalize");
        }
        // f32 payloads round the vector, so allow float precision on the gold entry.
        const double gold = lp[static_cast<std::size_t>(query.ids[query.target_index])];
        if (std::isfinite(answer.gold_logprob) &&
            std::abs(gold - answer.gold_logprob) > 1e-6 * std::max(1.0, std::abs(answer.gold_logprob))) {
            throw Error(ErrorKind::InvalidArgument, "distribution disagrees with gold_logprob");
        }
    }
}

std::unique_ptr<Provider> make_provider(const std::string& spec) {
    if (spec.starts_with("fixture:")) {
        return std::make_unique<FixtureProvider>(FixtureProvider::from_file(spec.substr(8)));
    }
    // Plain HTTP only: the bridge is expected on localhost or a trusted network.
    if (spec.starts_with("http://")) {
        return std::make_unique<HttpProvider>(spec);
    }
    throw Error(ErrorKind::ConfigError, "provider spec must be http://host:port or fixture:<path>, got '" + spec + "'");
}

namespace wire {

namespace {

std::optional<TokenId> optional_id(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<TokenId>();
}

}  // namespace

json to_json(const ModelInfo& info) {
    json j = {{"v", kProtocolVersion},
              {"model_id", info.model_id},
              {"vocab_size", info.vocab_size},
              {"paradigm", to_string(info.paradigm)},
              {"mask_token_id", nullptr},
              {"bos_token_id", nullptr}};
    if (info.mask_token_id) j["mask_token_id"] = *info.mask_token_id;
    if (info.bos_token_id) j["bos_token_id"] = *info.bos_token_id;
    return j;
}

ModelInfo model_info_from_json(const json& j) {
    try {
        if (j.contains("v") && j.at("v").get<int>() != kProtocolVersion) {
            throw Error(ErrorKind::ProtocolMismatch, "unsupported protocol version " + j.at("v").dump());
        }
        ModelInfo info;
        info.model_id = j.at("model_id").get<std::string>();
        info.vocab_size = j.at("vocab_size").get<std::int64_t>();
        info.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
        info.mask_token_id = optional_id(j, "mask_token_id");
        info.bos_token_id = optional_id(j, "bos_token_id");
        info.validate();
        return info;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ProtocolMismatch, std::string("bad model info: ") + e.what());
    }
}

json to_json(const Tokenization& tok) {
    json offsets = json::array();
    for (const auto& s : tok.offsets) offsets.push_back({s.start, s.end});
    return {{"ids", tok.ids}, {"pieces", tok.pieces}, {"offsets", offsets}};
}

Tokenization tokenization_from_json(const json& j) {
    try {
        Tokenization tok;
        tok.ids = j.at("ids").get<std::vector<TokenId>>();
        tok.pieces = j.at("pieces").get<std::vector<std::string>>();
        for (const auto& span : j.at("offsets")) {
            tok.offsets.push_back({span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()});
        }
        return tok;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::TokenizerFailure, std::string("bad tokenization payload: ") + e.what());
    }
}

json to_json(const LogProbQuery& query, PayloadEncoding encoding) {
    return {{"v", kProtocolVersion},
            {"ids", query.ids},
            {"target_index", query.target_index},
            {"paradigm", to_string(query.paradigm)},
            {"detail", to_string(query.detail)},
            {"encoding", to_string(encoding)}};
}

LogProbQuery query_from_json(const json& j) {
    try {
        LogProbQuery q;
        q.ids = j.at("ids").get<std::vector<TokenId>>();
        q.target_index = j.at("target_index").get<std::size_t>();
        q.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
        q.detail = parse_detail(j.value("detail", std::string("gold_prob")));
        return q;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ProtocolMismatch, std::string("bad query: ") + e.what());
    }
}

json to_json(const LogProbAnswer& answer, PayloadEncoding encoding) {
    json j = {{"gold_logprob", answer.gold_logprob}};
    if (std::isinf(answer.gold_logprob)) j["gold_logprob"] = "-inf";
    if (answer.distribution) {
        j["encoding"] = to_string(encoding);
        if (encoding == PayloadEncoding::Json) {
            j["distribution"] = *answer.distribution;
        } else {
            j["distribution"] = digest::encode_f32le(*answer.distribution);
        }
    }
    return j;
}

LogProbAnswer answer_from_json(const json& j) {
    try {
        LogProbAnswer answer;
        const auto& gold = j.at("gold_logprob");
        if (gold.is_string()) {
            if (gold.get<std::string>() != "-inf") throw Error(ErrorKind::ProtocolMismatch, "bad gold_logprob");
            answer.gold_logprob = -std::numeric_limits<double>::infinity();
        } else {
            answer.gold_logprob = gold.get<double>();
        }
        if (auto it = j.find("distribution"); it != j.end() && !it->is_null()) {
            const auto encoding = parse_encoding(j.value("encoding", std::string(it->is_string() ? "f32le" : "json")));
            if (encoding == PayloadEncoding::Json) {
                answer.distribution = it->get<std::vector<double>>();
            } else {
                try {
                    answer.distribution = digest::decode_f32le(it->get<std::string>());
                } catch (const Error& e) {
                    throw Error(ErrorKind::ProtocolMismatch, std::string("bad distribution payload: ") + e.what());
                }
            }
        }
        return answer;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ProtocolMismatch, std::string("bad logprob answer: ") + e.what());
    }
}

}  // namespace wire

}  // namespace biasattr
