#include "readerbench/config.hpp"

#include "readerbench/delimited.hpp"
#include "readerbench/error.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <set>

namespace rbench {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(std::string_view value, std::string_view key, std::string_view where) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        fail(ErrorKind::Validation, fmt::format("{}: {} must be a nonnegative integer, got '{}'", where, key, value));
    }
    return out;
}

}  // namespace

StudyConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, std::string_view source) {
    StudyConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::string where = fmt::format("{} line {}", source, line_no);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(ErrorKind::Validation, where + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (std::find(std::begin(kConfigKeys), std::end(kConfigKeys), key) == std::end(kConfigKeys)) {
            fail(ErrorKind::Validation, fmt::format("{}: unknown key '{}'", where, key));
        }
        if (!seen.emplace(key).second) fail(ErrorKind::Validation, fmt::format("{}: repeated key '{}'", where, key));
        if (value.empty()) fail(ErrorKind::Validation, fmt::format("{}: empty value for '{}'", where, key));

        auto path = [&] {
            std::filesystem::path p{std::string(value)};
            return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        };
        if (key == "manifest") cfg.manifest = path();
        else if (key == "schedule") cfg.schedule = path();
        else if (key == "rules") cfg.rules = path();
        else if (key == "event_log") cfg.event_log = path();
        else if (key == "predictor") {
            cfg.predictor = std::string(value);
            // Fixture tables and simulated specs are files next to the config.
            const auto colon = value.find(':');
            const auto mode = value.substr(0, colon);
            if (colon != std::string_view::npos && (mode == "fixture" || mode == "simulated") && !base_dir.empty()) {
                const std::filesystem::path target{std::string(value.substr(colon + 1))};
                if (target.is_relative()) cfg.predictor = std::string(mode) + ":" + (base_dir / target).string();
            }
        }
        else if (key == "listen") {
            parse_listen(value);
            cfg.listen = std::string(value);
        } else if (key == "seed") cfg.seed = parse_unsigned<std::uint64_t>(value, key, where);
        else if (key == "timeout_ms") cfg.timeout_ms = parse_unsigned<unsigned>(value, key, where);
        else if (key == "parallelism") cfg.parallelism = parse_unsigned<unsigned>(value, key, where);
        else if (key == "clinicians") cfg.clinicians = parse_unsigned<int>(value, key, where);
        else if (key == "per_level") cfg.per_level = parse_unsigned<std::size_t>(value, key, where);
        else if (key == "bootstrap_iterations") cfg.bootstrap_iterations = parse_unsigned<std::size_t>(value, key, where);
        else if (key == "bootstrap_sample_size") cfg.bootstrap_sample_size = parse_unsigned<std::size_t>(value, key, where);
    }
    if (cfg.clinicians < 1) fail(ErrorKind::Validation, fmt::format("{}: clinicians must be at least 1", source));
    if (cfg.parallelism < 1) fail(ErrorKind::Validation, fmt::format("{}: parallelism must be at least 1", source));
    return cfg;
}

StudyConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path), path.parent_path(), path.string());
}

std::pair<std::string, int> parse_listen(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        fail(ErrorKind::Validation, fmt::format("listen address '{}' is not host:port", text));
    }
    const auto port = parse_unsigned<unsigned>(text.substr(colon + 1), "listen port", "listen");
    if (port > 65535) fail(ErrorKind::Validation, fmt::format("listen port {} out of range", port));
    return {std::string(text.substr(0, colon)), static_cast<int>(port)};
}

std::string StudyConfig::canonical() const {
    // Unset paths are omitted so the text parses back to the same config.
    std::string out;
    auto opt = [&](std::string_view key, const std::optional<std::filesystem::path>& p) {
        if (p) out += fmt::format("{} = {}\n", key, p->generic_string());
    };
    opt("manifest", manifest);
    opt("schedule", schedule);
    opt("rules", rules);
    opt("event_log", event_log);
    out += fmt::format("predictor = {}\n", predictor);
    out += fmt::format("listen = {}\n", listen);
    out += fmt::format("seed = {}\n", seed);
    out += fmt::format("timeout_ms = {}\n", timeout_ms);
    out += fmt::format("parallelism = {}\n", parallelism);
    out += fmt::format("clinicians = {}\n", clinicians);
    out += fmt::format("per_level = {}\n", per_level);
    out += fmt::format("bootstrap_iterations = {}\n", bootstrap_iterations);
    out += fmt::format("bootstrap_sample_size = {}\n", bootstrap_sample_size);
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorKind::Io, "sha256 failed");
    }
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

}  // namespace rbench
