#include "framebench/translate.hpp"

#include <json.hpp>

// httplib pulls in a lot; keep it isolated to this translation unit.
#include <httplib.h>

namespace framebench {

std::string_view lang_code(Lang lang) {
    switch (lang) {
        case Lang::kEn: return "en";
        case Lang::kDe: return "de";
        case Lang::kFr: return "fr";
    }
    return "??";
}

Lang pivot_lang(Pivot pivot) { return pivot == Pivot::kDe ? Lang::kDe : Lang::kFr; }

namespace {

class IdentityTranslator final : public TranslatorClient {
public:
    std::vector<Pivot> supported_pivots() const override { return {Pivot::kDe, Pivot::kFr}; }

    std::string translate(const std::string& text, Lang from, Lang to) override {
        if (text.empty()) throw TranslationError("empty input", from, to);
        return text;
    }
};

class MarkerTranslator final : public TranslatorClient {
public:
    std::vector<Pivot> supported_pivots() const override { return {Pivot::kDe, Pivot::kFr}; }

    std::string translate(const std::string& text, Lang from, Lang to) override {
        if (text.empty()) throw TranslationError("empty input", from, to);
        if (from == Lang::kEn && to != Lang::kEn) {
            return marker(to) + text;
        }
        if (from != Lang::kEn && to == Lang::kEn) {
            const std::string m = marker(from);
            if (text.rfind(m, 0) != 0) {
                throw TranslationError("input lacks pivot marker " + m, from, to);
            }
            return text.substr(m.size());
        }
        throw TranslationError("unsupported direction", from, to);
    }

private:
    static std::string marker(Lang lang) { return "[" + std::string(lang_code(lang)) + "] "; }
};

class HttpTranslator final : public TranslatorClient {
public:
    HttpTranslator(std::string base_url, int timeout_seconds)
        : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

    std::vector<Pivot> supported_pivots() const override { return {Pivot::kDe, Pivot::kFr}; }

    std::string translate(const std::string& text, Lang from, Lang to) override {
        if (text.empty()) throw TranslationError("empty input", from, to);
        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);

        const nlohmann::json body{
            {"text", text}, {"source", lang_code(from)}, {"target", lang_code(to)}};
        const auto res = client.Post("/translate", body.dump(), "application/json");
        if (!res) {
            throw TranslationError("no response from " + base_url_ + " (" +
                                       httplib::to_string(res.error()) + ")",
                                   from, to);
        }
        if (res->status != 200) {
            throw TranslationError("HTTP " + std::to_string(res->status) + " from " + base_url_,
                                   from, to);
        }
        try {
            const auto j = nlohmann::json::parse(res->body);
            return j.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TranslationError(std::string("bad response payload: ") + e.what(), from, to);
        }
    }

private:
    std::string base_url_;
    int timeout_seconds_;
};

}  // namespace

std::unique_ptr<TranslatorClient> make_identity_translator() {
    return std::make_unique<IdentityTranslator>();
}

std::unique_ptr<TranslatorClient> make_marker_translator() {
    return std::make_unique<MarkerTranslator>();
}

std::unique_ptr<TranslatorClient> make_http_translator(const std::string& base_url,
                                                       int timeout_seconds) {
    return std::make_unique<HttpTranslator>(base_url, timeout_seconds);
}

std::unique_ptr<TranslatorClient> make_translator(const std::string& key,
                                                  const std::string& endpoint) {
    if (key == "identity") return make_identity_translator();
    if (key == "marker") return make_marker_translator();
    if (key == "http") {
        if (endpoint.empty()) throw ConfigError("translator 'http' requires an endpoint URL");
        return make_http_translator(endpoint);
    }
    throw ConfigError("unknown translator '" + key + "' (expected identity, marker, or http)");
}

}  // namespace framebench
