#pragma once

#include <biasattr/fixture_provider.hpp>

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <unistd.h>

namespace testing {

inline std::filesystem::path data_dir() { return BIASATTR_TEST_DATA; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("biasattr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Word-level fixture whose vocabulary covers `sentences`. Ids 0 and 1 are
// [MASK] and <s>; unanswered queries get `default_logprob`.
inline nlohmann::json word_fixture(std::initializer_list<std::string> sentences, const std::string& paradigm = "masked",
                                   double default_logprob = -1.0) {
    nlohmann::json vocab = {{"[MASK]", 0}, {"<s>", 1}};
    for (const auto& s : sentences) {
        for (const auto& [piece, span] : biasattr::word_level_pieces(s)) {
            if (!vocab.contains(piece)) vocab[piece] = static_cast<int>(vocab.size());
        }
    }
    nlohmann::json model = {{"v", 1}, {"model_id", "word-" + paradigm}, {"vocab_size", vocab.size()},
                            {"paradigm", paradigm}};
    if (paradigm == "masked") model["mask_token_id"] = 0;
    else model["bos_token_id"] = 1;
    return {{"model", model}, {"tokenizer", {{"vocab", vocab}}}, {"answers", nlohmann::json::object()},
            {"default_gold_logprob", default_logprob}};
}

}  // namespace testing
