#pragma once

#include <memory>
#include <string>
#include <vector>

#include "framebench/corpus.hpp"
#include "framebench/errors.hpp"

namespace framebench {

enum class Lang : uint8_t { kEn, kDe, kFr };
std::string_view lang_code(Lang lang);
Lang pivot_lang(Pivot pivot);

class TranslationError : public Error {
public:
    TranslationError(const std::string& msg, Lang from, Lang to)
        : Error("translate " + std::string(lang_code(from)) + "->" +
                std::string(lang_code(to)) + ": " + msg),
          from_(from),
          to_(to) {}

    Lang from() const { return from_; }
    Lang to() const { return to_; }

private:
    Lang from_;
    Lang to_;
};

// Machine-translation client boundary. Implementations must return non-empty
// text or throw TranslationError, and never mutate their input.
class TranslatorClient {
public:
    virtual ~TranslatorClient() = default;
    virtual std::vector<Pivot> supported_pivots() const = 0;
    virtual std::string translate(const std::string& text, Lang from, Lang to) = 0;
};

// Returns the input unchanged in both directions.
std::unique_ptr<TranslatorClient> make_identity_translator();

// Wraps the text in a pivot-language marker on the way out and strips it on
// the way back, so a round trip reproduces the source exactly and a skipped
// hop is detectable.
std::unique_ptr<TranslatorClient> make_marker_translator();

// Talks to a locally hosted translation service:
// POST <base_url>/translate {"text":..., "source":"en", "target":"de"}
// -> {"text": ...}.
std::unique_ptr<TranslatorClient> make_http_translator(const std::string& base_url,
                                                       int timeout_seconds = 60);

// Configuration keys: identity | marker | http (http requires endpoint).
std::unique_ptr<TranslatorClient> make_translator(const std::string& key,
                                                  const std::string& endpoint = {});

}  // namespace framebench
