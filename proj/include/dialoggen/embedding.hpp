#ifndef DIALOGGEN_EMBEDDING_HPP
#define DIALOGGEN_EMBEDDING_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#ifndef DIALOGGEN_NO_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "dialoggen/errors.hpp"

// Pluggable token-embedding contract for the metrics suite. Providers return
// one unit-norm vector per input token; implementations must be safe for
// concurrent calls.

namespace dialoggen {

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) const = 0;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// Deterministic test provider: each distinct token maps to a hash-seeded
// unit vector. Identical tokens always share a vector; unrelated tokens are
// nearly orthogonal in expectation. Stateless, hence thread-safe.
class HashEmbedder final : public EmbeddingProvider {
 public:
  explicit HashEmbedder(std::size_t dimension = 16) : dimension_(dimension) {}

  std::size_t dimension() const override { return dimension_; }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) const override {
    std::vector<std::vector<double>> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(vector_for(t));
    return out;
  }

  std::vector<double> vector_for(const std::string& token) const {
    std::mt19937_64 engine(detail::fnv1a64(token));
    std::vector<double> v(dimension_);
    // Hand-rolled Box-Muller keeps the values identical across standard
    // library implementations.
    for (std::size_t i = 0; i < dimension_; i += 2) {
      double u1 = static_cast<double>((engine() >> 11) + 1) * (1.0 / 9007199254740993.0);
      double u2 = static_cast<double>(engine() >> 11) * (1.0 / 9007199254740992.0);
      double radius = std::sqrt(-2.0 * std::log(u1));
      v[i] = radius * std::cos(2.0 * M_PI * u2);
      if (i + 1 < dimension_) v[i + 1] = radius * std::sin(2.0 * M_PI * u2);
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0) {
      v.assign(dimension_, 0.0);
      v[0] = 1.0;
    } else {
      for (double& x : v) x /= norm;
    }
    return v;
  }

 private:
  std::size_t dimension_;
};

// OpenAI-style embeddings endpoint client. Vectors are re-normalized to unit
// length to satisfy the provider contract.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(std::string endpoint, std::string model_id, std::string api_key_env_var,
                 std::size_t dimension)
      : endpoint_(std::move(endpoint)),
        model_id_(std::move(model_id)),
        api_key_env_var_(std::move(api_key_env_var)),
        dimension_(dimension) {}

  std::size_t dimension() const override { return dimension_; }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) const override {
    if (tokens.empty()) return {};
    auto scheme_end = endpoint_.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = endpoint_.find('/', host_start);
    std::string base = path_start == std::string::npos ? endpoint_ : endpoint_.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/v1/embeddings" : endpoint_.substr(path_start);

    httplib::Client client(base);
    httplib::Headers headers;
    if (const char* key = std::getenv(api_key_env_var_.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);

    nlohmann::json body = {{"model", model_id_}, {"input", tokens}};
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res || res->status < 200 || res->status >= 300)
      throw TransportError("embedding request failed");
    nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("data") || !parsed["data"].is_array() ||
        parsed["data"].size() != tokens.size())
      throw TransportError("embedding response malformed");

    std::vector<std::vector<double>> out;
    for (const auto& item : parsed["data"]) {
      std::vector<double> v = item.at("embedding").get<std::vector<double>>();
      double norm = 0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 0)
        for (double& x : v) x /= norm;
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::string endpoint_;
  std::string model_id_;
  std::string api_key_env_var_;
  std::size_t dimension_;
};

}  // namespace dialoggen

#endif  // DIALOGGEN_EMBEDDING_HPP
