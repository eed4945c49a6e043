// Content-addressed binary cache for period kernels.
//
// Keys hash the full build recipe (model, form, grid, period start, format
// version); values round-trip raw IEEE doubles, so a warm load is
// bit-identical to a fresh build.  Reads are shared; writes go through a
// temp file plus atomic rename.  A live run holds a lock file listing every
// hash it touched; the LRU garbage collector never evicts those.

#pragma once

#include "wkam/kernel.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

namespace wkam {

class KernelCache {
  public:
    explicit KernelCache(std::filesystem::path dir);
    ~KernelCache();

    KernelCache(const KernelCache&) = delete;
    KernelCache& operator=(const KernelCache&) = delete;

    bool load(const LagrangianSpec& spec, const OneForm& form, const GridSpec& grid,
              double t0, ActionKernel& out);
    void store(const LagrangianSpec& spec, const OneForm& form, const GridSpec& grid,
               double t0, const ActionKernel& kernel);

    int hits() const { return hits_; }
    int misses() const { return misses_; }
    const std::filesystem::path& dir() const { return dir_; }

    static std::string key(const LagrangianSpec& spec, const OneForm& form,
                           const GridSpec& grid, double t0);

  private:
    void note_live(const std::string& hash);

    std::filesystem::path dir_;
    std::filesystem::path lock_path_;
    std::set<std::string> live_;
    int hits_ = 0;
    int misses_ = 0;
};

struct GcReport {
    int scanned = 0;
    int removed = 0;
    int kept_live = 0;
    std::uintmax_t bytes_before = 0;
    std::uintmax_t bytes_after = 0;
};

// Evict least-recently-used kernel files until the cache fits max_bytes,
// skipping hashes referenced by any live run lock.
GcReport cache_gc(const std::filesystem::path& dir, std::uintmax_t max_bytes);

// FNV-1a over a canonical byte string; shared by cache keys and config hashes.
std::uint64_t fnv1a(const std::string& bytes);

} // namespace wkam
