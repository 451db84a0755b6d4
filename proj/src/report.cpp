#include "biasattr/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "biasattr/digest.hpp"
#include "biasattr/error.hpp"

namespace biasattr {

using nlohmann::json;

std::string format_double(double value) {
    if (!std::isfinite(value)) return "null";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific);
    std::string_view sci(buf, static_cast<std::size_t>(res.ptr - buf));

    std::string sign;
    if (sci.front() == '-') {
        sign = "-";
        sci.remove_prefix(1);
    }
    const auto e = sci.find('e');
    std::string digits;
    for (char c : sci.substr(0, e)) {
        if (c != '.') digits.push_back(c);
    }
    int exponent = 0;
    const auto exp_text = sci.substr(e + 1);
    std::from_chars(exp_text.data() + (exp_text.front() == '+' ? 1 : 0), exp_text.data() + exp_text.size(), exponent);

    std::string out = sign;
    if (exponent >= -4 && exponent < 16) {
        if (exponent < 0) {
            out += "0.";
            out.append(static_cast<std::size_t>(-exponent - 1), '0');
            out += digits;
        } else {
            const auto int_len = static_cast<std::size_t>(exponent) + 1;
            if (digits.size() <= int_len) {
                out += digits;
                out.append(int_len - digits.size(), '0');
                out += ".0";
            } else {
                out += digits.substr(0, int_len);
                out += '.';
                out += digits.substr(int_len);
            }
        }
    } else {
        out += digits.substr(0, 1);
        if (digits.size() > 1) {
            out += '.';
            out += digits.substr(1);
        }
        char exp_buf[16];
        std::snprintf(exp_buf, sizeof exp_buf, "e%c%02d", exponent < 0 ? '-' : '+', std::abs(exponent));
        out += exp_buf;
    }
    return out;
}

namespace {

std::string json_string(std::string_view s) { return json(s).dump(); }

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string md_cell(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::string markdown_bias(double b) {
    if (b == 0.0 || std::abs(b) >= 1e-4) return fixed(b, 4);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", b);
    return buf;
}

std::string run_footer(const std::string& manifest_hash) {
    return manifest_hash.empty() ? std::string() : "\n<!-- run " + manifest_hash + " -->\n";
}

std::string column_title(std::string_view dimension) {
    std::string out(dimension);
    std::replace(out.begin(), out.end(), '-', ' ');
    return out;
}

}  // namespace

std::string RunManifest::hash() const {
    json identity = {{"model_id", model_id},
                     {"paradigm", to_string(paradigm)},
                     {"corpus_checksum", corpus_checksum},
                     {"dimensions", dimensions},
                     {"engine_version", engine_version},
                     {"config",
                      {{"log_base", config.log_base},
                       {"tie_rule", config.tie_rule},
                       {"skip_punct", config.skip_punct},
                       {"min_count", config.min_count},
                       {"primary_tag_only", config.primary_tag_only},
                       {"lcs_tiebreak", config.lcs_tiebreak}}}};
    return digest::sha256_hex(identity.dump());
}

json RunManifest::to_json() const {
    json skipped_json = json::array();
    for (const auto& s : skipped) skipped_json.push_back({{"pair_id", s.pair_id}, {"reason", s.reason}});
    return {{"manifest_hash", hash()},
            {"model_id", model_id},
            {"paradigm", to_string(paradigm)},
            {"corpus_checksum", corpus_checksum},
            {"dimensions", dimensions},
            {"engine_version", engine_version},
            {"timestamp", timestamp},
            {"config",
             {{"log_base", config.log_base},
              {"tie_rule", config.tie_rule},
              {"skip_punct", config.skip_punct},
              {"min_count", config.min_count},
              {"primary_tag_only", config.primary_tag_only},
              {"lcs_tiebreak", config.lcs_tiebreak}}},
            {"n_pairs", n_pairs},
            {"n_scored", n_scored},
            {"skipped", skipped_json},
            {"provider_stats", provider_stats},
            {"artifacts", artifacts}};
}

RunManifest RunManifest::from_json(const json& j) {
    try {
        RunManifest m;
        m.model_id = j.at("model_id").get<std::string>();
        m.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
        m.corpus_checksum = j.at("corpus_checksum").get<std::string>();
        m.dimensions = j.at("dimensions").get<std::vector<std::string>>();
        m.engine_version = j.at("engine_version").get<std::string>();
        m.timestamp = j.value("timestamp", std::string());
        const auto& c = j.at("config");
        m.config.log_base = c.at("log_base").get<int>();
        m.config.tie_rule = c.at("tie_rule").get<std::string>();
        m.config.skip_punct = c.at("skip_punct").get<bool>();
        m.config.min_count = c.at("min_count").get<std::size_t>();
        m.config.primary_tag_only = c.at("primary_tag_only").get<bool>();
        m.config.lcs_tiebreak = c.at("lcs_tiebreak").get<std::string>();
        m.n_pairs = j.value("n_pairs", std::size_t{0});
        m.n_scored = j.value("n_scored", std::size_t{0});
        for (const auto& s : j.value("skipped", json::array())) {
            m.skipped.push_back({s.at("pair_id").get<std::int64_t>(), s.at("reason").get<std::string>()});
        }
        m.provider_stats = j.value("provider_stats", std::map<std::string, std::uint64_t>{});
        m.artifacts = j.value("artifacts", std::map<std::string, std::string>{});
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed manifest: ") + e.what());
    }
}

std::string_view direction_label(double b) {
    if (b < 0.0) return "more bias";
    if (b > 0.0) return "less bias";
    return "neutral";
}

std::string emit_attribution_table(const PairScore& score, std::span<const WordAttribution> tags, ReportFormat format,
                                   const std::string& manifest_hash) {
    auto labels_for = [&](const ProbeResult& probe) {
        std::vector<std::string> labels;
        for (const auto& wa : tags) {
            if (wa.span.start < probe.word_span.end && probe.word_span.start < wa.span.end) {
                for (const auto& l : wa.labels) {
                    if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
                }
            }
        }
        return labels;
    };
    auto joined = [](const std::vector<std::string>& labels) {
        std::string out;
        for (const auto& l : labels) out += (out.empty() ? "" : "; ") + l;
        return out;
    };

    std::ostringstream out;
    switch (format) {
        case ReportFormat::Markdown:
            out << "Pair " << score.pair_id << ": S_JSD = " << format_double(score.s_jsd) << " ("
                << (score.prefers_biased ? "prefers the more biased sentence" : "does not prefer the more biased sentence")
                << ")\n\n";
            out << "| Token | b(u) | Direction | Tag(s) |\n|---|---|---|---|\n";
            for (const auto& p : score.probes) {
                out << "| " << md_cell(p.token_piece) << " | " << markdown_bias(p.b) << " | " << direction_label(p.b)
                    << " | " << md_cell(joined(labels_for(p))) << " |\n";
            }
            out << run_footer(manifest_hash);
            break;
        case ReportFormat::Csv:
            out << "token,b,direction,tags\n";
            for (const auto& p : score.probes) {
                out << csv_field(p.token_piece) << ',' << format_double(p.b) << ',' << direction_label(p.b) << ','
                    << csv_field(joined(labels_for(p))) << '\n';
            }
            break;
        case ReportFormat::Json: {
            json rows = json::array();
            for (const auto& p : score.probes) {
                rows.push_back({{"token", p.token_piece},
                                {"b", p.b},
                                {"direction", direction_label(p.b)},
                                {"tags", labels_for(p)}});
            }
            json doc = {{"pair_id", score.pair_id}, {"s_jsd", score.s_jsd}, {"rows", rows}};
            if (!manifest_hash.empty()) doc["manifest_hash"] = manifest_hash;
            out << doc.dump(2) << '\n';
            break;
        }
    }
    return out.str();
}

Summary summarize(std::span<const PairScore> scores, const std::map<std::int64_t, BiasType>& dimension_of,
                  const std::set<BiasType>& dimensions, std::string model_id) {
    if (scores.empty()) throw Error(ErrorKind::EmptyCorpus, "no scored pairs to summarize");
    Summary summary;
    summary.model_id = std::move(model_id);
    std::map<BiasType, SummaryRow> per_dim;
    for (BiasType d : dimensions) per_dim[d].dimension = std::string(to_string(d));
    SummaryRow all{"all", 0, 0, std::nullopt};
    for (const auto& s : scores) {
        auto it = dimension_of.find(s.pair_id);
        if (it == dimension_of.end()) {
            throw Error(ErrorKind::EmptyCorpus, "pair " + std::to_string(s.pair_id) + " has no known dimension");
        }
        auto& row = per_dim[it->second];
        if (row.dimension.empty()) row.dimension = std::string(to_string(it->second));
        ++row.n_pairs;
        ++all.n_pairs;
        if (s.prefers_biased) {
            ++row.n_biased;
            ++all.n_biased;
        }
    }
    auto finish = [](SummaryRow& row) {
        if (row.n_pairs > 0) row.bias_score = 100.0 * static_cast<double>(row.n_biased) / static_cast<double>(row.n_pairs);
    };
    for (BiasType d : kAllBiasTypes) {
        if (auto it = per_dim.find(d); it != per_dim.end()) {
            finish(it->second);
            summary.rows.push_back(it->second);
        }
    }
    finish(all);
    summary.rows.push_back(all);
    return summary;
}

std::string emit_summary(const Summary& summary, ReportFormat format, const std::string& manifest_hash) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::Markdown: {
            out << "| Model |";
            for (const auto& r : summary.rows) out << ' ' << column_title(r.dimension) << " |";
            out << "\n|---|";
            for (std::size_t i = 0; i < summary.rows.size(); ++i) out << "---|";
            out << "\n| " << md_cell(summary.model_id) << " |";
            for (const auto& r : summary.rows) out << ' ' << (r.bias_score ? fixed(*r.bias_score, 2) : "n/a") << " |";
            out << "\n| pairs |";
            for (const auto& r : summary.rows) out << ' ' << r.n_pairs << " |";
            out << '\n' << run_footer(manifest_hash);
            break;
        }
        case ReportFormat::Csv:
            out << "dimension,n_pairs,n_biased,bias_score\n";
            for (const auto& r : summary.rows) {
                out << r.dimension << ',' << r.n_pairs << ',' << r.n_biased << ','
                    << (r.bias_score ? format_double(*r.bias_score) : "") << '\n';
            }
            break;
        case ReportFormat::Json: {
            json rows = json::array();
            for (const auto& r : summary.rows) {
                rows.push_back({{"dimension", r.dimension},
                                {"n_pairs", r.n_pairs},
                                {"n_biased", r.n_biased},
                                {"bias_score", r.bias_score ? json(*r.bias_score) : json(nullptr)}});
            }
            json doc = {{"model_id", summary.model_id}, {"rows", rows}};
            if (!manifest_hash.empty()) doc["manifest_hash"] = manifest_hash;
            out << doc.dump(2) << '\n';
            break;
        }
    }
    return out.str();
}

std::string emit_jsonl(std::span<const PairScore> scores) {
    std::vector<const PairScore*> ordered;
    ordered.reserve(scores.size());
    for (const auto& s : scores) ordered.push_back(&s);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const PairScore* a, const PairScore* b) { return a->pair_id < b->pair_id; });

    std::string out;
    for (const PairScore* s : ordered) {
        out += "{\"pair_id\":" + std::to_string(s->pair_id) + ",\"s_jsd\":" + format_double(s->s_jsd) +
               ",\"prefers_biased\":" + (s->prefers_biased ? "true" : "false") + ",\"probes\":[";
        for (std::size_t i = 0; i < s->probes.size(); ++i) {
            const auto& p = s->probes[i];
            if (i) out += ',';
            out += "{\"piece\":" + json_string(p.token_piece) + ",\"p_more\":" + format_double(p.p_more) +
                   ",\"p_less\":" + format_double(p.p_less) + ",\"b\":" + format_double(p.b) + '}';
        }
        out += "]}\n";
    }
    return out;
}

std::vector<PairScore> parse_jsonl(std::string_view text) {
    std::vector<PairScore> scores;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const json j = json::parse(line);
            PairScore s;
            s.pair_id = j.at("pair_id").get<std::int64_t>();
            s.s_jsd = j.at("s_jsd").get<double>();
            s.prefers_biased = j.at("prefers_biased").get<bool>();
            for (const auto& p : j.at("probes")) {
                ProbeResult r;
                r.token_piece = p.at("piece").get<std::string>();
                r.p_more = p.at("p_more").get<double>();
                r.p_less = p.at("p_less").get<double>();
                r.d_more = gold_distance(r.p_more);
                r.d_less = gold_distance(r.p_less);
                r.b = p.at("b").get<double>();
                s.probes.push_back(std::move(r));
            }
            scores.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::InvalidArgument, "pairs.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return scores;
}

std::string emit_semantic_fields(std::span<const FieldAggregate> fields, ReportFormat format,
                                 const std::string& manifest_hash) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::Markdown:
            out << "| Semantic field | n | \xE2\x86\x91 bias | \xE2\x88\x98 bias | \xE2\x86\x93 bias |\n|---|---|---|---|---|\n";
            for (const auto& f : fields) {
                out << "| " << md_cell(f.tag_label) << " | " << f.n_tokens << " | " << fixed(f.pct_up, 2) << " | "
                    << fixed(f.pct_zero, 2) << " | " << fixed(f.pct_down, 2) << " |\n";
            }
            out << run_footer(manifest_hash);
            break;
        case ReportFormat::Csv:
            out << "tag_label,n_tokens,pct_up,pct_zero,pct_down\n";
            for (const auto& f : fields) {
                out << csv_field(f.tag_label) << ',' << f.n_tokens << ',' << format_double(f.pct_up) << ','
                    << format_double(f.pct_zero) << ',' << format_double(f.pct_down) << '\n';
            }
            break;
        case ReportFormat::Json: {
            json rows = json::array();
            for (const auto& f : fields) {
                rows.push_back({{"tag", f.tag},
                                {"tag_label", f.tag_label},
                                {"n_tokens", f.n_tokens},
                                {"pct_up", f.pct_up},
                                {"pct_zero", f.pct_zero},
                                {"pct_down", f.pct_down}});
            }
            json doc = {{"fields", rows}};
            if (!manifest_hash.empty()) doc["manifest_hash"] = manifest_hash;
            out << doc.dump(2) << '\n';
            break;
        }
    }
    return out.str();
}

}  // namespace biasattr
