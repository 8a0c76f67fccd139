#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "ovseg/gateway.hpp"

#include "ovseg/error.hpp"

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

namespace ovseg::gateway {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string canonical_request(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        json images = json::array();
        for (const auto& img : m.images) {
            json ref{{"path", img.path}};
            if (img.region) ref["region"] = {img.region->x0, img.region->y0, img.region->x1, img.region->y1};
            images.push_back(ref);
        }
        messages.push_back({{"role", to_string(m.role)}, {"text", m.text}, {"images", images}});
    }
    return json{{"task", request.task}, {"messages", messages}}.dump();
}

std::string canonical_embed_request(const std::string& prompt) {
    return json{{"embed", prompt}}.dump();
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorCode::InvalidArgument, "sha256: digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

void GatewayConfig::validate() const {
    require(timeout_s > 0.0, ErrorCode::InvalidArgument, "gateway: timeout must be positive");
    require(max_retries >= 0, ErrorCode::InvalidArgument, "gateway: retries must be non-negative");
    require(max_in_flight >= 1, ErrorCode::InvalidArgument, "gateway: max_in_flight must be at least 1");
    require(dim >= 1, ErrorCode::InvalidArgument, "gateway: embedding dimension must be positive");
}

// ---------------------------------------------------------------------------
// ReplayLog

namespace {

constexpr char kReplayMagic[4] = {'O', 'V', 'R', 'L'};
constexpr std::uint32_t kReplayVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                       static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    os.write(b, 4);
}

void put_record(std::ostream& os, RecordKind kind, const std::string& request, const std::string& response) {
    os.put(static_cast<char>(kind));
    put_u32(os, static_cast<std::uint32_t>(request.size()));
    os.write(request.data(), static_cast<std::streamsize>(request.size()));
    put_u32(os, static_cast<std::uint32_t>(response.size()));
    os.write(response.data(), static_cast<std::streamsize>(response.size()));
}

void put_header(std::ostream& os) {
    os.write(kReplayMagic, 4);
    put_u32(os, kReplayVersion);
}

}  // namespace

std::shared_ptr<ReplayLog> ReplayLog::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, path.string() + ": cannot open replay log");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        require(pos + n <= bytes.size(), ErrorCode::Format,
                path.string() + ": truncated replay log at byte offset " + std::to_string(pos));
    };
    auto u32 = [&] {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    };
    need(4);
    require(bytes.compare(0, 4, kReplayMagic, 4) == 0, ErrorCode::Format, path.string() + ": not a replay log");
    pos = 4;
    const std::uint32_t version = u32();
    require(version == kReplayVersion, ErrorCode::Format,
            path.string() + ": unsupported replay log version " + std::to_string(version));
    auto log = std::make_shared<ReplayLog>();
    while (pos < bytes.size()) {
        need(1);
        const auto kind = static_cast<RecordKind>(bytes[pos++]);
        require(kind == RecordKind::Chat || kind == RecordKind::Embed, ErrorCode::Format,
                path.string() + ": bad record kind at byte offset " + std::to_string(pos - 1));
        const std::uint32_t req_len = u32();
        need(req_len);
        std::string request = bytes.substr(pos, req_len);
        pos += req_len;
        const std::uint32_t resp_len = u32();
        need(resp_len);
        std::string response = bytes.substr(pos, resp_len);
        pos += resp_len;
        log->append(kind, request, response);
    }
    return log;
}

void ReplayLog::append(RecordKind kind, const std::string& request, const std::string& response) {
    std::lock_guard lock(mutex_);
    index_.try_emplace({kind, request}, records_.size());
    records_.push_back({kind, request, response});
    if (file_) {
        std::ofstream out(*file_, std::ios::binary | std::ios::app);
        require(static_cast<bool>(out), ErrorCode::Io, file_->string() + ": cannot append to replay log");
        put_record(out, kind, request, response);
    }
}

void ReplayLog::attach(const std::filesystem::path& path) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, path.string() + ": cannot create replay log");
    put_header(out);
    for (const auto& r : records_) put_record(out, r.kind, r.request, r.response);
    file_ = path;
}

std::optional<std::string> ReplayLog::find(RecordKind kind, const std::string& request) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find({kind, request});
    if (it == index_.end()) return std::nullopt;
    return records_[it->second].response;
}

std::size_t ReplayLog::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

void ReplayLog::save(const std::filesystem::path& path) const {
    std::lock_guard lock(mutex_);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, path.string() + ": cannot write replay log");
    put_header(out);
    for (const auto& r : records_) put_record(out, r.kind, r.request, r.response);
}

// ---------------------------------------------------------------------------
// LanguageGateway

namespace {

std::string encode_embedding(const embedding::Embedding& e) {
    return json(e).dump();
}

embedding::Embedding decode_embedding(const std::string& s) {
    try {
        return json::parse(s).get<embedding::Embedding>();
    } catch (const json::exception& e) {
        fail(ErrorCode::GatewayError, std::string("malformed embedding payload: ") + e.what());
    }
}

}  // namespace

LanguageGateway::LanguageGateway(std::size_t dim, std::size_t max_in_flight)
    : dim_(dim), in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, max_in_flight))) {}

std::string LanguageGateway::chat(const ChatRequest& request) {
    require(!request.messages.empty(), ErrorCode::InvalidArgument, "chat: no messages");
    const std::string key = canonical_request(request);
    const std::string digest = sha256_hex(key);
    {
        std::lock_guard lock(mutex_);
        if (auto it = chat_cache_.find(digest); it != chat_cache_.end()) return it->second;
    }
    const auto start = std::chrono::steady_clock::now();
    std::string reply;
    in_flight_.acquire();
    try {
        reply = do_chat(request);
    } catch (...) {
        in_flight_.release();
        throw;
    }
    in_flight_.release();
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    std::lock_guard lock(mutex_);
    ++transport_calls_;
    chat_cache_.emplace(digest, reply);
    exchanges_.push_back({request, reply, ms});
    if (recorder_) recorder_->append(RecordKind::Chat, key, reply);
    return reply;
}

embedding::Embedding LanguageGateway::embed_text(const std::string& prompt) {
    require(!prompt.empty(), ErrorCode::InvalidArgument, "embed_text: empty prompt");
    {
        std::lock_guard lock(mutex_);
        if (auto it = embed_cache_.find(prompt); it != embed_cache_.end()) return it->second;
    }
    embedding::Embedding e;
    in_flight_.acquire();
    try {
        e = do_embed(prompt);
    } catch (...) {
        in_flight_.release();
        throw;
    }
    in_flight_.release();
    require(e.size() == dim_, ErrorCode::DimMismatch,
            "embed_text: service returned dimension " + std::to_string(e.size()) + ", expected " + std::to_string(dim_));
    std::lock_guard lock(mutex_);
    ++transport_calls_;
    embed_cache_.emplace(prompt, e);
    if (recorder_) recorder_->append(RecordKind::Embed, canonical_embed_request(prompt), encode_embedding(e));
    return e;
}

std::string message_text(const ChatRequest& request) {
    std::string text;
    for (const auto& m : request.messages) {
        if (!text.empty()) text += "\n";
        text += m.text;
    }
    return text;
}

// ---------------------------------------------------------------------------
// MockGateway

MockGateway::MockGateway(std::size_t dim, std::uint64_t seed) : LanguageGateway(dim, 1), seed_(seed) {}

void MockGateway::add_handler(ChatHandler handler) { handlers_.push_back(std::move(handler)); }

void MockGateway::add_rule(const std::string& pattern, std::string reply) {
    const std::regex re(pattern);
    handlers_.push_back([re, reply = std::move(reply)](const ChatRequest& req) -> std::optional<std::string> {
        if (std::regex_search(message_text(req), re)) return reply;
        return std::nullopt;
    });
}

embedding::Embedding MockGateway::hashed_embedding(std::size_t dim, std::uint64_t seed, const std::string& prompt) {
    std::string material(8, '\0');
    for (int i = 0; i < 8; ++i) material[static_cast<std::size_t>(i)] = static_cast<char>((seed >> (8 * i)) & 0xFF);
    material += prompt;
    const std::string digest = sha256_hex(material);
    std::mt19937_64 rng(std::stoull(digest.substr(0, 16), nullptr, 16));
    // Box-Muller on raw engine output; the engine sequence is fully specified,
    // unlike std::normal_distribution.
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    embedding::Embedding e(dim);
    for (std::size_t i = 0; i < dim; i += 2) {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        e[i] = static_cast<float>(r * std::cos(theta));
        if (i + 1 < dim) e[i + 1] = static_cast<float>(r * std::sin(theta));
    }
    embedding::normalize(e);
    return e;
}

std::string MockGateway::do_chat(const ChatRequest& request) {
    for (const auto& h : handlers_) {
        if (auto reply = h(request)) return *reply;
    }
    fail(ErrorCode::GatewayError, "mock gateway: no scripted reply for task '" + request.task + "'");
}

embedding::Embedding MockGateway::do_embed(const std::string& prompt) {
    return hashed_embedding(dim(), seed_, prompt);
}

// ---------------------------------------------------------------------------
// ReplayGateway

ReplayGateway::ReplayGateway(std::size_t dim, std::shared_ptr<const ReplayLog> log)
    : LanguageGateway(dim, 1), log_(std::move(log)) {}

std::string ReplayGateway::do_chat(const ChatRequest& request) {
    if (auto reply = log_->find(RecordKind::Chat, canonical_request(request))) return *reply;
    fail(ErrorCode::GatewayError, "replay: no logged reply for task '" + request.task + "'");
}

embedding::Embedding ReplayGateway::do_embed(const std::string& prompt) {
    if (auto reply = log_->find(RecordKind::Embed, canonical_embed_request(prompt))) return decode_embedding(*reply);
    fail(ErrorCode::GatewayError, "replay: no logged embedding for '" + prompt + "'");
}

// ---------------------------------------------------------------------------
// HttpGateway

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    require(scheme_end != std::string::npos, ErrorCode::InvalidArgument, "gateway endpoint lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep{url.substr(0, path_start), path_start == std::string::npos ? "" : url.substr(path_start)};
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
}

std::string mime_for(const std::string& path) {
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".webp") return "image/webp";
    return "image/png";
}

}  // namespace

HttpGateway::HttpGateway(GatewayConfig config)
    : LanguageGateway(config.dim, config.max_in_flight), config_(std::move(config)) {
    config_.validate();
    (void)split_endpoint(config_.endpoint);
}

std::string HttpGateway::chat_body(const ChatRequest& request) const {
    json messages = json::array();
    for (const auto& m : request.messages) {
        if (m.images.empty()) {
            messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
            continue;
        }
        json content = json::array();
        content.push_back({{"type", "text"}, {"text", m.text}});
        for (const auto& img : m.images) {
            std::ifstream in(img.path, std::ios::binary);
            require(static_cast<bool>(in), ErrorCode::Io, img.path + ": cannot read image attachment");
            const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            content.push_back({{"type", "image_url"},
                               {"image_url", {{"url", "data:" + mime_for(img.path) + ";base64," + base64_encode(bytes)}}}});
        }
        messages.push_back({{"role", to_string(m.role)}, {"content", content}});
    }
    return json{{"model", config_.model}, {"messages", messages}, {"temperature", 0}}.dump();
}

std::string HttpGateway::post(const std::string& route, const std::string& body) {
    const Endpoint ep = split_endpoint(config_.endpoint);
    httplib::Client client(ep.origin);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (const char* token = std::getenv(config_.token_env.c_str()); token && *token) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 << std::min(attempt, 5)));
        auto res = client.Post(ep.prefix + route, headers, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_error = "HTTP " + std::to_string(res->status);
        if (res->status < 500 && res->status != 429) break;
    }
    fail(ErrorCode::TransportError, config_.endpoint + route + ": " + last_error + " after " +
                                        std::to_string(config_.max_retries + 1) + " attempt(s)");
}

std::string HttpGateway::do_chat(const ChatRequest& request) {
    const std::string body = post("/chat/completions", chat_body(request));
    try {
        return json::parse(body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorCode::GatewayError, std::string("malformed chat response: ") + e.what());
    }
}

embedding::Embedding HttpGateway::do_embed(const std::string& prompt) {
    const std::string body =
        post("/embeddings", json{{"model", config_.embedding_model}, {"input", prompt}}.dump());
    try {
        auto e = json::parse(body).at("data").at(0).at("embedding").get<embedding::Embedding>();
        embedding::normalize(e);
        return e;
    } catch (const json::exception& e) {
        fail(ErrorCode::GatewayError, std::string("malformed embedding response: ") + e.what());
    }
}

}  // namespace ovseg::gateway
