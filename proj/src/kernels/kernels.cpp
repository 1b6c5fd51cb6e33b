#include "slicesim/kernels.hpp"

#include <cstdlib>

#include "slicesim/errors.hpp"

namespace slicesim::kernels {
namespace {

bool avx2_usable() {
#if defined(__x86_64__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* table_by_name(const std::string& name) {
    if (name == "scalar") return &detail::scalar_table;
#if defined(__x86_64__)
    if (name == "avx2" && avx2_usable()) return &detail::avx2_table;
#endif
    return nullptr;
}

const KernelTable* pick_default() {
    if (const char* env = std::getenv("SLICESIM_KERNELS")) {
        if (const KernelTable* t = table_by_name(env)) return t;
        return &detail::scalar_table;  // unknown or unusable: fall back
    }
#if defined(__x86_64__)
    if (avx2_usable()) return &detail::avx2_table;
#endif
    return &detail::scalar_table;
}

const KernelTable*& active_ptr() {
    static const KernelTable* ptr = pick_default();
    return ptr;
}

}  // namespace

const KernelTable& active() { return *active_ptr(); }

const char* backend_name() { return active().name; }

std::vector<std::string> available_backends() {
    std::vector<std::string> out{"scalar"};
    if (avx2_usable()) out.emplace_back("avx2");
    return out;
}

void force_backend(const std::string& name) {
    const KernelTable* t = table_by_name(name);
    if (t == nullptr)
        throw ArgumentError("kernel backend not available: " + name);
    active_ptr() = t;
}

void reset_backend() { active_ptr() = pick_default(); }

}  // namespace slicesim::kernels
