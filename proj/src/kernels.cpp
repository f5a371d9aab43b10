#include <atomic>
#include <cstdlib>
#include <cstring>

#include "slip/kernels.hpp"

namespace slip::kern {

const Table* avx2_table_unchecked();

const Table* avx2() {
    static const bool ok = __builtin_cpu_supports("avx2");
    return ok ? avx2_table_unchecked() : nullptr;
}

namespace {

const Table* choose() {
    const char* env = std::getenv("SLIP_KERNELS");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar();
    if (const Table* t = avx2()) return t;
    return &scalar();
}

std::atomic<const Table*>& slot() {
    static std::atomic<const Table*> s{choose()};
    return s;
}

}  // namespace

const Table& active() { return *slot().load(std::memory_order_relaxed); }

const Table& select(const Table& t) { return *slot().exchange(&t); }

}  // namespace slip::kern
