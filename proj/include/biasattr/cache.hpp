#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>

#include "biasattr/provider.hpp"

namespace biasattr {

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t corrupt = 0;  // unreadable records, treated as misses
};

/// Content-addressed disk cache in front of any provider.
///
/// Records live at `<dir>/<h[0:2]>/<h>.json`, h = sha256(model_id, kind, key).
/// Each record stores its own key and a checksum of its payload; a record that
/// fails either check counts as corrupt and is rewritten from the inner
/// provider. Writes go to a temporary file and are renamed into place, so
/// concurrent writers of one key leave a complete record behind.
///
/// Both tokenize() and logprobs() are cached. model_info() is forwarded once
/// and memoized, since the model id is part of every key.
class CachedProvider final : public Provider {
public:
    CachedProvider(std::shared_ptr<Provider> inner, std::filesystem::path dir);

    ModelInfo model_info() override;
    Tokenization tokenize(std::string_view text) override;
    LogProbAnswer logprobs(const LogProbQuery& query) override;

    CacheStats stats() const;
    const std::filesystem::path& directory() const { return dir_; }

private:
    std::filesystem::path record_path(const std::string& digest) const;
    std::optional<nlohmann::json> load(const std::string& kind, const std::string& key);
    void store(const std::string& kind, const std::string& key, const nlohmann::json& payload);

    std::shared_ptr<Provider> inner_;
    std::filesystem::path dir_;
    std::once_flag info_once_;
    std::optional<ModelInfo> info_;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
    std::atomic<std::uint64_t> corrupt_{0};
};

}  // namespace biasattr
