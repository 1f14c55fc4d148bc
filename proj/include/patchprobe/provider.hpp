#pragma once

#include <map>
#include <ostream>
#include <string>

namespace patchprobe {

enum class PromptTemplate { Localization, Verification };

/// A fully rendered provider prompt; placeholders_filled keeps the raw
/// contents so offline providers can reuse them without re-parsing the text.
struct Prompt {
    PromptTemplate template_id = PromptTemplate::Localization;
    std::string rendered_text;
    std::map<std::string, std::string> placeholders_filled;
};

enum class ProviderMode { Remote, Replay, Heuristic };

const char* provider_mode_name(ProviderMode mode);

struct ProviderConfig {
    ProviderMode mode = ProviderMode::Heuristic;
    std::string endpoint;     // chat-completion style HTTP endpoint (remote mode)
    std::string model_name = "default-model";
    double temperature = 1.0;
    int max_retries = 3;
    std::string api_key_env;  // environment variable holding the API key
    std::string replay_dir;   // directory of <sha256-of-prompt>.txt files
    int prompt_token_budget = 9000;
};

struct ProviderUsage {
    int prompts_sent = 0;
    int responses_received = 0;
};

/// Shareable provider client. Remote mode posts the prompt as a single user
/// message; replay mode answers from canned files keyed by the prompt hash;
/// heuristic mode computes a deterministic answer locally with no network
/// I/O. Requests and responses are appended to `audit` when given.
class ProviderClient {
public:
    explicit ProviderClient(ProviderConfig cfg);

    std::string query(const Prompt& prompt, ProviderUsage* usage = nullptr,
                      std::ostream* audit = nullptr) const;

    const ProviderConfig& config() const { return cfg_; }

    /// Label recorded in reports: mode plus model for remote runs.
    std::string label() const;

private:
    ProviderConfig cfg_;

    std::string query_remote(const Prompt& prompt) const;
    std::string query_replay(const Prompt& prompt) const;
    std::string query_heuristic(const Prompt& prompt) const;
};

/// One-shot convenience wrapper around ProviderClient.
std::string query_provider(const Prompt& prompt, const ProviderConfig& cfg);

std::string sha256_hex(const std::string& data);

} // namespace patchprobe
