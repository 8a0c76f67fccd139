#pragma once

#include "ovseg/context_embedding.hpp"
#include "ovseg/mask.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace ovseg::gateway {

enum class Role { System, User, Assistant };
std::string_view to_string(Role role);

// Image attachment by reference; read and base64-encoded at send time.
struct ImageRef {
    std::string path;
    std::optional<masks::PixelRect> region;
};

struct Message {
    Role role = Role::User;
    std::string text;
    std::vector<ImageRef> images;
};

struct ChatRequest {
    std::string task;  // versioned prompt id, e.g. "verify/v1"
    std::vector<Message> messages;
};

struct ChatExchange {
    ChatRequest request;
    std::string reply;
    double latency_ms = 0.0;
};

// Stable serialization used for hashing, caching and replay lookup.
std::string canonical_request(const ChatRequest& request);
std::string canonical_embed_request(const std::string& prompt);
std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);

struct GatewayConfig {
    std::string endpoint = "http://127.0.0.1:8000/v1";
    std::string model = "gpt-5-mini";
    std::string embedding_model = "clip-text";
    double timeout_s = 60.0;
    int max_retries = 2;
    std::string token_env = "OVSEG_API_KEY";
    std::size_t max_in_flight = 4;
    std::size_t dim = 512;

    void validate() const;
};

enum class RecordKind : std::uint8_t { Chat = 0, Embed = 1 };

// Append-only log of request/response pairs. On disk: "OVRL", u32 version,
// then records of u8 kind, u32 request length, request bytes, u32 response
// length, response bytes; all integers little-endian.
class ReplayLog {
public:
    ReplayLog() = default;
    static std::shared_ptr<ReplayLog> load(const std::filesystem::path& path);

    // Appends in memory and, when attached to a file, to disk.
    void append(RecordKind kind, const std::string& request, const std::string& response);
    void attach(const std::filesystem::path& path);  // creates or truncates
    std::optional<std::string> find(RecordKind kind, const std::string& request) const;
    std::size_t size() const;
    void save(const std::filesystem::path& path) const;

private:
    struct Record {
        RecordKind kind;
        std::string request;
        std::string response;
    };
    mutable std::mutex mutex_;
    std::vector<Record> records_;
    std::map<std::pair<RecordKind, std::string>, std::size_t> index_;
    std::optional<std::filesystem::path> file_;
};

// Uniform front end for embedding, LLM and VLM services. Handles caching,
// the in-flight limit and recording; subclasses implement transport.
class LanguageGateway {
public:
    explicit LanguageGateway(std::size_t dim, std::size_t max_in_flight = 4);
    virtual ~LanguageGateway() = default;

    LanguageGateway(const LanguageGateway&) = delete;
    LanguageGateway& operator=(const LanguageGateway&) = delete;

    std::string chat(const ChatRequest& request);
    embedding::Embedding embed_text(const std::string& prompt);

    std::size_t dim() const { return dim_; }
    void record_to(std::shared_ptr<ReplayLog> log) { recorder_ = std::move(log); }
    const std::vector<ChatExchange>& exchanges() const { return exchanges_; }
    std::size_t transport_calls() const { return transport_calls_; }

protected:
    virtual std::string do_chat(const ChatRequest& request) = 0;
    virtual embedding::Embedding do_embed(const std::string& prompt) = 0;

private:
    std::size_t dim_;
    std::counting_semaphore<> in_flight_;
    std::mutex mutex_;
    std::map<std::string, std::string> chat_cache_;  // keyed by SHA-256 of the canonical request
    std::map<std::string, embedding::Embedding> embed_cache_;
    std::vector<ChatExchange> exchanges_;
    std::shared_ptr<ReplayLog> recorder_;
    std::size_t transport_calls_ = 0;
};

using ChatHandler = std::function<std::optional<std::string>(const ChatRequest&)>;

// Deterministic stand-in: text embeddings are unit vectors seeded by
// SHA-256(seed, prompt); chat replies come from the first handler that
// answers. No handler answering is a GatewayError.
class MockGateway : public LanguageGateway {
public:
    MockGateway(std::size_t dim, std::uint64_t seed);

    void add_handler(ChatHandler handler);
    // Reply `reply` whenever the concatenated message text matches `pattern`.
    void add_rule(const std::string& pattern, std::string reply);

    static embedding::Embedding hashed_embedding(std::size_t dim, std::uint64_t seed, const std::string& prompt);

protected:
    std::string do_chat(const ChatRequest& request) override;
    embedding::Embedding do_embed(const std::string& prompt) override;

private:
    std::uint64_t seed_;
    std::vector<ChatHandler> handlers_;
};

// Serves logged replies byte-for-byte; unknown requests are a GatewayError.
class ReplayGateway : public LanguageGateway {
public:
    ReplayGateway(std::size_t dim, std::shared_ptr<const ReplayLog> log);

protected:
    std::string do_chat(const ChatRequest& request) override;
    embedding::Embedding do_embed(const std::string& prompt) override;

private:
    std::shared_ptr<const ReplayLog> log_;
};

// Chat-completions style HTTP client.
class HttpGateway : public LanguageGateway {
public:
    explicit HttpGateway(GatewayConfig config);

    // Wire body for a chat request, with images inlined as data URLs.
    std::string chat_body(const ChatRequest& request) const;

protected:
    std::string do_chat(const ChatRequest& request) override;
    embedding::Embedding do_embed(const std::string& prompt) override;

private:
    std::string post(const std::string& route, const std::string& body);

    GatewayConfig config_;
};

std::string message_text(const ChatRequest& request);

}  // namespace ovseg::gateway
