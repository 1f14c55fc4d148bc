#include "patchprobe/provider.hpp"

#include "patchprobe/errors.hpp"
#include "patchprobe/localize.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

// httplib is pulled in translation-unit-locally: it is heavy and only the
// remote transport needs it.
#include <httplib.h>

namespace patchprobe {

using nlohmann::json;

const char* provider_mode_name(ProviderMode mode) {
    switch (mode) {
    case ProviderMode::Remote: return "remote";
    case ProviderMode::Replay: return "replay";
    case ProviderMode::Heuristic: return "heuristic";
    }
    return "heuristic";
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

ProviderClient::ProviderClient(ProviderConfig cfg) : cfg_(std::move(cfg)) {}

std::string ProviderClient::label() const {
    if (cfg_.mode == ProviderMode::Remote) {
        return std::string("remote:") + cfg_.model_name;
    }
    return provider_mode_name(cfg_.mode);
}

std::string ProviderClient::query(const Prompt& prompt, ProviderUsage* usage,
                                  std::ostream* audit) const {
    if (usage != nullptr) ++usage->prompts_sent;
    if (audit != nullptr) {
        *audit << "=== prompt (" << sha256_hex(prompt.rendered_text) << ") ===\n"
               << prompt.rendered_text << "\n";
    }
    std::string response;
    switch (cfg_.mode) {
    case ProviderMode::Remote:
        response = query_remote(prompt);
        break;
    case ProviderMode::Replay:
        response = query_replay(prompt);
        break;
    case ProviderMode::Heuristic:
        response = query_heuristic(prompt);
        break;
    }
    if (usage != nullptr) ++usage->responses_received;
    if (audit != nullptr) {
        *audit << "=== response ===\n" << response << "\n";
    }
    return response;
}

namespace {

// "https://host:port/path" -> (base, path)
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme = endpoint.find("://");
    std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    auto path_start = endpoint.find('/', host_start);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

} // namespace

std::string ProviderClient::query_remote(const Prompt& prompt) const {
    if (cfg_.endpoint.empty()) {
        throw Error(ErrorCode::TransportError, "remote mode requires an endpoint");
    }
    auto [base, path] = split_endpoint(cfg_.endpoint);

    json body = {
        {"model", cfg_.model_name},
        {"temperature", cfg_.temperature},
        {"messages", json::array({json{{"role", "user"}, {"content", prompt.rendered_text}}})},
    };
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        const char* key = std::getenv(cfg_.api_key_env.c_str());
        if (key != nullptr && *key != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    bool rate_limited = false;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        httplib::Client client(base);
        client.set_read_timeout(120, 0);
        client.set_connection_timeout(15, 0);
        auto result = client.Post(path, headers, payload, "application/json");
        if (!result) continue; // connect/transport failure -> retry
        if (result->status == 429) {
            rate_limited = true;
            continue;
        }
        if (result->status >= 500) continue;
        if (result->status != 200) {
            throw Error(ErrorCode::TransportError,
                        "provider returned status " + std::to_string(result->status));
        }
        try {
            json parsed = json::parse(result->body);
            return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            throw Error(ErrorCode::TransportError, "provider response was not chat-completion JSON");
        }
    }
    if (rate_limited) {
        throw Error(ErrorCode::RateLimited, "provider rate limit persisted across retries");
    }
    throw Error(ErrorCode::TransportError,
                "no successful response after " + std::to_string(cfg_.max_retries + 1) +
                    " attempts to " + cfg_.endpoint);
}

std::string ProviderClient::query_replay(const Prompt& prompt) const {
    const std::string key = sha256_hex(prompt.rendered_text);
    const std::string path = cfg_.replay_dir + "/" + key + ".txt";
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ReplayMiss, "no canned response " + key + ".txt in " +
                                               cfg_.replay_dir);
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

namespace {

// Lines arrive as "N: text"; returns (number, text-with-suffix) pairs.
std::vector<std::pair<int, std::string>> parse_numbered_block(const std::string& block) {
    std::vector<std::pair<int, std::string>> out;
    std::stringstream ss(block);
    std::string line;
    while (std::getline(ss, line)) {
        std::size_t colon = line.find(": ");
        if (colon == std::string::npos || colon == 0) continue;
        bool numeric = true;
        for (std::size_t i = 0; i < colon; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(line[i]))) {
                numeric = false;
                break;
            }
        }
        if (!numeric) continue;
        out.emplace_back(std::atoi(line.substr(0, colon).c_str()), line.substr(colon + 2));
    }
    return out;
}

constexpr const char* kPatchSuffix = " //patch_code";

std::string strip_patch_suffix(const std::string& text, bool* had_suffix = nullptr) {
    if (text.size() >= std::strlen(kPatchSuffix) &&
        text.compare(text.size() - std::strlen(kPatchSuffix), std::string::npos, kPatchSuffix) ==
            0) {
        if (had_suffix != nullptr) *had_suffix = true;
        return text.substr(0, text.size() - std::strlen(kPatchSuffix));
    }
    if (had_suffix != nullptr) *had_suffix = false;
    return text;
}

std::string heuristic_localization_answer(const Prompt& prompt) {
    auto src_it = prompt.placeholders_filled.find("source_code");
    auto pseudo_it = prompt.placeholders_filled.find("pseudo_code");
    if (src_it == prompt.placeholders_filled.end() ||
        pseudo_it == prompt.placeholders_filled.end()) {
        return "{}";
    }
    auto src_lines = parse_numbered_block(src_it->second);
    auto pseudo_lines = parse_numbered_block(pseudo_it->second);

    std::vector<int> slice_numbers;
    std::vector<std::string> slice_texts;
    for (const auto& [number, text] : src_lines) {
        bool marked = false;
        std::string bare = strip_patch_suffix(text, &marked);
        if (marked) {
            slice_numbers.push_back(number);
            slice_texts.push_back(bare);
        }
    }
    std::vector<int> pseudo_numbers;
    std::vector<std::string> pseudo_texts;
    for (const auto& [number, text] : pseudo_lines) {
        pseudo_numbers.push_back(number);
        pseudo_texts.push_back(text);
    }

    LineMapping positional = heuristic_localize(slice_texts, pseudo_texts);

    LineMapping mapping;
    for (const auto& [src_pos, pseudo_positions] : positional.pairs) {
        std::vector<int> mapped;
        for (int p : pseudo_positions) {
            mapped.push_back(pseudo_numbers[static_cast<std::size_t>(p - 1)]);
        }
        mapping.pairs.emplace_back(slice_numbers[static_cast<std::size_t>(src_pos - 1)],
                                   std::move(mapped));
    }
    for (int src_pos : positional.unmatched_source_lines) {
        mapping.unmatched_source_lines.push_back(
            slice_numbers[static_cast<std::size_t>(src_pos - 1)]);
    }
    return serialize_line_mapping(mapping);
}

double score_result_json(const std::string& text) {
    double score = 0.0;
    try {
        json parsed = json::parse(text);
        for (const auto& entry : parsed.value("mappings", json::array())) {
            const std::string source_text = entry.value("source_text", "");
            double best = 0.0;
            for (const auto& pseudo : entry.value("pseudo_text", json::array())) {
                best = std::max(best, token_similarity(source_text, pseudo.get<std::string>()));
            }
            score += best;
        }
    } catch (const json::exception&) {
        return 0.0;
    }
    return score;
}

std::string heuristic_verification_answer(const Prompt& prompt) {
    auto patch_it = prompt.placeholders_filled.find("patch_result_json");
    auto vul_it = prompt.placeholders_filled.find("vul_result_json");
    const double patch_score =
        patch_it == prompt.placeholders_filled.end() ? 0.0 : score_result_json(patch_it->second);
    const double vul_score =
        vul_it == prompt.placeholders_filled.end() ? 0.0 : score_result_json(vul_it->second);
    json answer = {
        {"version", patch_score > vul_score ? "patched" : "pre-patch"},
        {"reason", "token-similarity score " + std::to_string(patch_score) + " vs " +
                       std::to_string(vul_score)},
    };
    return answer.dump();
}

} // namespace

std::string ProviderClient::query_heuristic(const Prompt& prompt) const {
    if (prompt.template_id == PromptTemplate::Localization) {
        return heuristic_localization_answer(prompt);
    }
    return heuristic_verification_answer(prompt);
}

std::string query_provider(const Prompt& prompt, const ProviderConfig& cfg) {
    return ProviderClient(cfg).query(prompt);
}

} // namespace patchprobe
