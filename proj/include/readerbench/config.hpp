#pragma once

// Plain-text study configuration: one "key = value" per line, '#' starts a
// comment. Relative paths resolve against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rbench {

struct StudyConfig {
    std::optional<std::filesystem::path> manifest;
    std::optional<std::filesystem::path> schedule;
    std::optional<std::filesystem::path> rules;      // default: simplified scale
    std::optional<std::filesystem::path> event_log;
    std::string predictor = "simulated";             // binding, see parse_binding
    std::string listen = "127.0.0.1:8080";
    std::uint64_t seed = 0;
    unsigned timeout_ms = 5000;                      // per predictor call
    unsigned parallelism = 1;                        // predictor calls and bootstrap threads
    int clinicians = 24;
    std::size_t per_level = 40;
    std::size_t bootstrap_iterations = 100;
    std::size_t bootstrap_sample_size = 60;

    // Canonical "key = value" text; its SHA-256 is the report's config digest.
    std::string canonical() const;
};

inline constexpr std::string_view kConfigKeys[] = {
    "manifest", "schedule", "rules", "event_log", "predictor", "listen", "seed", "timeout_ms",
    "parallelism", "clinicians", "per_level", "bootstrap_iterations", "bootstrap_sample_size"};

// Unknown keys, repeated keys and malformed values raise Validation naming
// the source line.
StudyConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {},
                         std::string_view source = "<config>");
StudyConfig load_config(const std::filesystem::path& path);

// "host:port"; Validation when the port is missing or out of range.
std::pair<std::string, int> parse_listen(std::string_view text);

std::string sha256_hex(std::string_view data);

}  // namespace rbench
