#include <cstdlib>

#include "framebench/errors.hpp"
#include "framebench/kernels.hpp"

namespace framebench::kernels {

const Backend& backend_by_name(const std::string& name) {
    if (name == "scalar") return scalar();
    if (name == "avx2") {
        const Backend* b = avx2();
        if (!b) throw ConfigError("kernel backend 'avx2' is not supported on this CPU");
        return *b;
    }
    throw ConfigError("unknown kernel backend '" + name + "' (expected scalar or avx2)");
}

std::vector<std::string> available_backends() {
    std::vector<std::string> names{"scalar"};
    if (avx2()) names.emplace_back("avx2");
    return names;
}

const Backend& active() {
    static const Backend& chosen = []() -> const Backend& {
        if (const char* env = std::getenv("FRAMEBENCH_KERNELS")) {
            return backend_by_name(env);
        }
        if (const Backend* b = avx2()) return *b;
        return scalar();
    }();
    return chosen;
}

}  // namespace framebench::kernels
