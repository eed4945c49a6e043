// Kernel cache implementation: canonical serialization, FNV-1a addressing,
// atomic writes, lock-protected LRU eviction.

#include "wkam/cache.hpp"

#include <algorithm>
#include <cstring>
#include <random>
#include <stdexcept>
#include <vector>

namespace wkam {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t k_format_version = 2;
constexpr char k_magic[4] = {'W', 'K', 'K', 'N'};

void put_raw(std::string& out, const void* p, std::size_t len) {
    out.append(static_cast<const char*>(p), len);
}

void put_f64(std::string& out, double v) { put_raw(out, &v, sizeof v); }
void put_i32(std::string& out, std::int32_t v) { put_raw(out, &v, sizeof v); }
void put_u32(std::string& out, std::uint32_t v) { put_raw(out, &v, sizeof v); }

std::string canonical_bytes(const LagrangianSpec& spec, const OneForm& form,
                            const GridSpec& grid, double t0) {
    std::string b;
    put_u32(b, k_format_version);
    put_i32(b, static_cast<std::int32_t>(spec.kind));
    put_f64(b, spec.coupling);
    put_u32(b, static_cast<std::uint32_t>(spec.potential.size()));
    for (const TrigTerm& term : spec.potential) {
        put_i32(b, term.j);
        put_i32(b, term.k);
        put_f64(b, term.a);
        put_f64(b, term.b);
    }
    put_f64(b, form.cohomology_class);
    put_f64(b, form.extra_uniform);
    put_u32(b, form.uniform ? 1u : 0u);
    if (!form.uniform) {
        put_u32(b, static_cast<std::uint32_t>(form.density.size()));
        for (double g : form.density) put_f64(b, g);
    }
    put_u32(b, form.ramp.ramped ? 1u : 0u);
    put_f64(b, form.ramp.t0);
    put_f64(b, form.ramp.t1);
    put_i32(b, grid.n_space);
    put_i32(b, grid.n_substeps);
    put_i32(b, grid.winding_cap);
    put_f64(b, t0);
    return b;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

} // namespace

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string KernelCache::key(const LagrangianSpec& spec, const OneForm& form,
                             const GridSpec& grid, double t0) {
    return hex64(fnv1a(canonical_bytes(spec, form, grid, t0)));
}

KernelCache::KernelCache(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    std::mt19937_64 rng(std::random_device{}());
    lock_path_ = dir_ / ("run-" + hex64(rng()) + ".lock");
    std::ofstream(lock_path_).flush();
}

KernelCache::~KernelCache() {
    std::error_code ec;
    fs::remove(lock_path_, ec);
}

void KernelCache::note_live(const std::string& hash) {
    if (!live_.insert(hash).second) return;
    std::ofstream f(lock_path_, std::ios::app);
    f << hash << '\n';
}

bool KernelCache::load(const LagrangianSpec& spec, const OneForm& form,
                       const GridSpec& grid, double t0, ActionKernel& out) {
    const std::string hash = key(spec, form, grid, t0);
    const fs::path path = dir_ / (hash + ".kern");
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        ++misses_;
        return false;
    }
    char magic[4];
    std::uint32_t version = 0, n = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), sizeof version);
    f.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!f || std::memcmp(magic, k_magic, 4) != 0 || version != k_format_version ||
        n != static_cast<std::uint32_t>(grid.n_space)) {
        ++misses_;
        return false;
    }
    out.n = static_cast<int>(n);
    f.read(reinterpret_cast<char*>(&out.t_start), sizeof out.t_start);
    f.read(reinterpret_cast<char*>(&out.t_end), sizeof out.t_end);
    out.value.resize(static_cast<std::size_t>(n) * n);
    out.winding.resize(static_cast<std::size_t>(n) * n);
    out.split.clear();
    f.read(reinterpret_cast<char*>(out.value.data()),
           static_cast<std::streamsize>(out.value.size() * sizeof(double)));
    f.read(reinterpret_cast<char*>(out.winding.data()),
           static_cast<std::streamsize>(out.winding.size() * sizeof(std::int32_t)));
    if (!f) {
        ++misses_;
        return false;
    }
    note_live(hash);
    std::error_code ec;
    fs::last_write_time(path, fs::file_time_type::clock::now(), ec);
    ++hits_;
    return true;
}

void KernelCache::store(const LagrangianSpec& spec, const OneForm& form,
                        const GridSpec& grid, double t0, const ActionKernel& kernel) {
    const std::string hash = key(spec, form, grid, t0);
    const fs::path path = dir_ / (hash + ".kern");
    const fs::path tmp = dir_ / (hash + ".tmp-" + lock_path_.stem().string());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cache: cannot write " + tmp.string());
        const auto n = static_cast<std::uint32_t>(kernel.n);
        f.write(k_magic, 4);
        f.write(reinterpret_cast<const char*>(&k_format_version), sizeof k_format_version);
        f.write(reinterpret_cast<const char*>(&n), sizeof n);
        f.write(reinterpret_cast<const char*>(&kernel.t_start), sizeof kernel.t_start);
        f.write(reinterpret_cast<const char*>(&kernel.t_end), sizeof kernel.t_end);
        f.write(reinterpret_cast<const char*>(kernel.value.data()),
                static_cast<std::streamsize>(kernel.value.size() * sizeof(double)));
        f.write(reinterpret_cast<const char*>(kernel.winding.data()),
                static_cast<std::streamsize>(kernel.winding.size() * sizeof(std::int32_t)));
        if (!f) throw std::runtime_error("cache: short write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cache: rename failed for " + path.string());
    }
    note_live(hash);
}

GcReport cache_gc(const fs::path& dir, std::uintmax_t max_bytes) {
    GcReport report;
    if (!fs::exists(dir)) return report;

    std::set<std::string> live;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".lock") continue;
        std::ifstream f(entry.path());
        std::string line;
        while (std::getline(f, line)) {
            if (!line.empty()) live.insert(line);
        }
    }

    struct Item {
        fs::path path;
        fs::file_time_type mtime;
        std::uintmax_t size;
        bool live;
    };
    std::vector<Item> items;
    std::uintmax_t total = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".kern") continue;
        std::error_code ec;
        Item it;
        it.path = entry.path();
        it.mtime = fs::last_write_time(it.path, ec);
        it.size = fs::file_size(it.path, ec);
        if (ec) continue;
        it.live = live.count(it.path.stem().string()) > 0;
        total += it.size;
        items.push_back(std::move(it));
    }
    report.scanned = static_cast<int>(items.size());
    report.bytes_before = total;

    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.mtime < b.mtime; });
    for (const Item& it : items) {
        if (total <= max_bytes) break;
        if (it.live) {
            ++report.kept_live;
            continue;
        }
        std::error_code ec;
        if (fs::remove(it.path, ec) && !ec) {
            total -= it.size;
            ++report.removed;
        }
    }
    report.bytes_after = total;
    return report;
}

} // namespace wkam
