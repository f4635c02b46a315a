#pragma once

#include <chrono>
#include <cstdlib>
#include <future>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "itemval/core.hpp"
#include "itemval/embedding.hpp"
#include "itemval/errors.hpp"
#include "itemval/pairs.hpp"

namespace itemval {

struct HttpEndpointConfig {
    std::string base_url;             // e.g. http://127.0.0.1:8080
    std::string token_env;            // env var holding the bearer token
    std::size_t batch_size = 16;
    int max_retries = 3;              // retries after the first attempt
    int timeout_ms = 30000;
    int backoff_base_ms = 250;        // doubles per retry
    std::size_t max_in_flight = 1;    // concurrent batch requests
};

struct ProviderConfig : HttpEndpointConfig {
    std::string model_name = "all-mpnet-base-v2";
    ProviderConfig() { token_env = "EMBEDDINGS_API_KEY"; }
};

struct ScorerConfig : HttpEndpointConfig {
    ScorerConfig() { token_env = "SCORER_API_KEY"; }
};

struct RetryStats {
    std::size_t requests = 0;
    std::size_t retries = 0;
};

namespace detail {

inline httplib::Headers auth_headers(const HttpEndpointConfig& cfg) {
    httplib::Headers headers;
    if (!cfg.token_env.empty()) {
        if (const char* token = std::getenv(cfg.token_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    return headers;
}

} // namespace detail

// POST a JSON body and parse the JSON reply. Transport failures and 5xx
// responses are retried with exponential backoff; 4xx responses and
// malformed reply bodies are treated as permanent.
inline nlohmann::json post_json_with_retry(const HttpEndpointConfig& cfg, const std::string& path,
                                           const nlohmann::json& body,
                                           RetryStats* stats = nullptr) {
    if (cfg.base_url.empty()) throw InputError("remote endpoint has no base_url configured");
    const std::string payload = body.dump();
    const httplib::Headers headers = detail::auth_headers(cfg);
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            const int delay = cfg.backoff_base_ms << (attempt - 1);
            std::cerr << "itemval: retrying " << path << " (attempt " << attempt + 1 << " of "
                      << cfg.max_retries + 1 << ") after " << last_error << "\n";
            if (stats) stats->retries++;
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client client(cfg.base_url);
        client.set_connection_timeout(0, cfg.timeout_ms * 1000LL);
        client.set_read_timeout(0, cfg.timeout_ms * 1000LL);
        client.set_write_timeout(0, cfg.timeout_ms * 1000LL);
        if (stats) stats->requests++;
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw RemoteError("invalid JSON from " + cfg.base_url + path + ": " + e.what());
            }
        }
        if (res->status >= 400 && res->status < 500)
            throw RemoteError("HTTP " + std::to_string(res->status) + " from " + cfg.base_url +
                              path);
        last_error = "HTTP " + std::to_string(res->status);
    }
    throw RemoteError("request to " + cfg.base_url + path + " failed after " +
                      std::to_string(cfg.max_retries + 1) + " attempts: " + last_error);
}

namespace detail {

// One embeddings batch: send texts, reassemble vectors by the "index" field.
inline std::vector<std::vector<float>> fetch_embedding_batch(const ProviderConfig& cfg,
                                                             const std::vector<std::string>& texts,
                                                             RetryStats* stats) {
    nlohmann::json body;
    body["model"] = cfg.model_name;
    body["input"] = texts;
    const nlohmann::json reply = post_json_with_retry(cfg, "/embeddings", body, stats);
    if (!reply.contains("data") || !reply["data"].is_array())
        throw RemoteError("embeddings reply has no data array");
    const auto& data = reply["data"];
    if (data.size() != texts.size())
        throw RemoteError("provider returned " + std::to_string(data.size()) +
                          " vectors for a " + std::to_string(texts.size()) + "-text batch");
    std::vector<std::vector<float>> vectors(texts.size());
    std::vector<bool> filled(texts.size(), false);
    for (const auto& entry : data) {
        if (!entry.contains("index") || !entry.contains("embedding"))
            throw RemoteError("embeddings reply entry lacks index or embedding");
        const auto idx = entry["index"].get<long long>();
        if (idx < 0 || idx >= static_cast<long long>(texts.size()))
            throw RemoteError("embeddings reply index " + std::to_string(idx) + " out of range");
        if (filled[static_cast<std::size_t>(idx)])
            throw RemoteError("embeddings reply repeats index " + std::to_string(idx));
        const auto& vec = entry["embedding"];
        if (!vec.is_array() || vec.empty())
            throw RemoteError("embeddings reply entry " + std::to_string(idx) +
                              " has no embedding values");
        auto& slot = vectors[static_cast<std::size_t>(idx)];
        slot.reserve(vec.size());
        for (const auto& v : vec) slot.push_back(v.get<float>());
        filled[static_cast<std::size_t>(idx)] = true;
    }
    return vectors;
}

} // namespace detail

// Fetch embeddings for every item, batched. Batches run serially unless
// max_in_flight > 1, in which case they go out in waves; rows always land
// in item order regardless of completion order.
inline EmbeddingMatrix fetch_embeddings(const ProviderConfig& cfg, const Questionnaire& q,
                                        RetryStats* stats = nullptr) {
    if (cfg.batch_size == 0) throw InputError("batch_size must be positive");
    std::vector<std::vector<std::string>> batches;
    std::vector<std::string> current;
    for (const auto& item : q.items) {
        current.push_back(item.text);
        if (current.size() == cfg.batch_size) {
            batches.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) batches.push_back(std::move(current));

    std::vector<std::vector<std::vector<float>>> results(batches.size());
    const std::size_t wave = std::max<std::size_t>(1, cfg.max_in_flight);
    for (std::size_t start = 0; start < batches.size(); start += wave) {
        const std::size_t end = std::min(batches.size(), start + wave);
        if (wave == 1 || end - start == 1) {
            results[start] = detail::fetch_embedding_batch(cfg, batches[start], stats);
            continue;
        }
        std::vector<std::future<std::vector<std::vector<float>>>> futures;
        for (std::size_t i = start; i < end; ++i)
            futures.push_back(std::async(std::launch::async, [&cfg, &batches, i] {
                return detail::fetch_embedding_batch(cfg, batches[i], nullptr);
            }));
        for (std::size_t i = start; i < end; ++i) results[i] = futures[i - start].get();
    }

    EmbeddingMatrix m;
    std::size_t item_idx = 0;
    for (const auto& batch : results) {
        for (const auto& vec : batch) {
            if (!m.item_ids.empty() && vec.size() != m.dim)
                throw RemoteError("provider returned inconsistent dimensions: " +
                                  std::to_string(vec.size()) + " vs " + std::to_string(m.dim));
            m.append_row(q.items[item_idx].id, vec);
            ++item_idx;
        }
    }
    try {
        m.validate();
    } catch (const InputError& e) {
        throw RemoteError(std::string("provider embeddings failed validation: ") + e.what());
    }
    return m;
}

// Wraps the /score endpoint as a BatchScorer for the pair pipeline.
inline BatchScorer make_http_scorer(const ScorerConfig& cfg, RetryStats* stats = nullptr) {
    return [cfg, stats](const std::vector<PairRecord>& batch) {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& rec : batch)
            pairs.push_back({std::string(rec.text_a), std::string(rec.text_b)});
        nlohmann::json body;
        body["pairs"] = pairs;
        const nlohmann::json reply = post_json_with_retry(cfg, "/score", body, stats);
        if (!reply.contains("scores") || !reply["scores"].is_array())
            throw RemoteError("scorer reply has no scores array");
        const auto& scores = reply["scores"];
        if (scores.size() != batch.size())
            throw RemoteError("scorer returned " + std::to_string(scores.size()) +
                              " scores for a " + std::to_string(batch.size()) + "-pair batch");
        std::vector<double> out;
        out.reserve(scores.size());
        for (const auto& s : scores) {
            if (!s.is_number()) throw RemoteError("scorer reply contains a non-numeric score");
            out.push_back(s.get<double>());
        }
        return out;
    };
}

} // namespace itemval
