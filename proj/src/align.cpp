#include "biasattr/align.hpp"

#include <algorithm>
#include <cctype>

#include "biasattr/error.hpp"

namespace biasattr {

std::vector<SharedToken> longest_common_subsequence(std::span<const TokenId> more, std::span<const TokenId> less) {
    const std::size_t n = more.size();
    const std::size_t m = less.size();
    // suffix[i][j] = LCS length of more[i..] and less[j..]
    std::vector<std::uint32_t> suffix((n + 1) * (m + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return suffix[i * (m + 1) + j]; };
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = m; j-- > 0;) {
            at(i, j) = more[i] == less[j] ? at(i + 1, j + 1) + 1 : std::max(at(i + 1, j), at(i, j + 1));
        }
    }

    std::vector<SharedToken> shared;
    shared.reserve(at(0, 0));
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        if (more[i] == less[j]) {
            shared.push_back({i, j});
            ++i;
            ++j;
        } else if (at(i, j + 1) >= at(i + 1, j)) {
            // Keep the current `more` token available for a later match.
            ++j;
        } else {
            ++i;
        }
    }
    return shared;
}

PairAlignment align_tokens(Tokenization tok_more, Tokenization tok_less) {
    if (tok_more.ids.empty() || tok_less.ids.empty()) {
        throw Error(ErrorKind::TokenizerFailure, "sentence tokenized to an empty sequence");
    }
    PairAlignment out;
    out.shared = longest_common_subsequence(tok_more.ids, tok_less.ids);
    if (out.shared.empty()) throw Error(ErrorKind::DegeneratePair, "sentences share no tokens");

    std::vector<bool> in_more(tok_more.size(), false), in_less(tok_less.size(), false);
    for (const auto& s : out.shared) {
        in_more[s.more] = true;
        in_less[s.less] = true;
    }
    for (std::size_t i = 0; i < in_more.size(); ++i) {
        if (!in_more[i]) out.modified_more.push_back(i);
    }
    for (std::size_t j = 0; j < in_less.size(); ++j) {
        if (!in_less[j]) out.modified_less.push_back(j);
    }
    out.tok_more = std::move(tok_more);
    out.tok_less = std::move(tok_less);
    return out;
}

PairAlignment align_pair(const PromptPair& pair, Provider& provider) {
    auto tok_more = provider.tokenize(pair.sent_more);
    tok_more.validate(pair.sent_more.size());
    auto tok_less = provider.tokenize(pair.sent_less);
    tok_less.validate(pair.sent_less.size());
    return align_tokens(std::move(tok_more), std::move(tok_less));
}

bool is_punctuation_piece(std::string_view piece) {
    for (std::string_view marker : {"\xE2\x96\x81", "\xC4\xA0", "##"}) {
        while (piece.starts_with(marker)) piece.remove_prefix(marker.size());
    }
    if (piece.empty()) return false;
    return std::all_of(piece.begin(), piece.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x80 && std::ispunct(u);
    });
}

ProbePlan plan_probes(const PairAlignment& alignment, const ModelInfo& info, const ProbeOptions& options) {
    ProbePlan plan;
    for (const auto& token : alignment.shared) {
        const CharSpan span = alignment.tok_more.offsets[token.more];
        if (span.start == span.end) {
            plan.skipped.push_back({token, "special token"});
            continue;
        }
        if (options.skip_punct && is_punctuation_piece(alignment.tok_more.pieces[token.more])) {
            plan.skipped.push_back({token, "punctuation"});
            continue;
        }
        if (info.paradigm == Paradigm::Causal && (token.more == 0 || token.less == 0) && !info.bos_token_id) {
            plan.skipped.push_back({token, "no context before the first token and no BOS token"});
            continue;
        }
        // Queries carry the unmodified sentence; the provider applies the mask
        // or cuts the causal prefix, so the gold id stays at target_index.
        PlannedProbe probe{token,
                           {alignment.tok_more.ids, token.more, info.paradigm, Detail::GoldProb},
                           {alignment.tok_less.ids, token.less, info.paradigm, Detail::GoldProb}};
        plan.probes.push_back(std::move(probe));
    }
    return plan;
}

}  // namespace biasattr
