#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "memfab/wire.hpp"

namespace memfab {

struct CacheConfig {
  size_t capacity_bytes = 32768;
  size_t ways = 4;
  size_t line_bytes = 64;
  size_t sets() const { return capacity_bytes / (ways * line_bytes); }
};

// M/E/I only: no sharer exists, so S never occurs. E lines evict silently,
// M lines produce writebacks.
enum class LineState { Invalid, Exclusive, Modified };

struct MisalignedAddress : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Eviction {
  uint64_t addr;
  std::optional<CacheLineData> dirty;  // set only when the victim was M
};

struct CacheOutcome {
  enum class Kind {
    ReadHit,
    WriteHit,
    WriteAllocNoRemote,       // write miss, free way: absorbed locally
    NeedFetch,                // read miss, way free (possibly after clean drop)
    NeedWritebackThenFetch,   // read miss, M victim evicted
    WriteReplace,             // write miss, full set: victim evicted, line installed M
  };
  Kind kind;
  CacheLineData data{};               // valid for ReadHit
  std::optional<Eviction> eviction;   // NeedWritebackThenFetch / WriteReplace
};

struct CacheStats {
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t writebacks = 0;
  uint64_t alloc_no_remote = 0;
};

enum class MemOp { Read, Write };

class Cache {
 public:
  explicit Cache(CacheConfig cfg = {});

  // addr must be line-aligned. Write requires data.
  CacheOutcome access(MemOp op, uint64_t addr, const CacheLineData* data = nullptr);

  struct FillResult {
    std::optional<Eviction> eviction;
    bool already_present = false;
  };
  // Completes an earlier NeedFetch: installs the line in E, most recently used.
  FillResult fill(uint64_t addr, const CacheLineData& data);

  const CacheStats& stats() const { return stats_; }
  const CacheConfig& config() const { return cfg_; }

  std::optional<LineState> probe_state(uint64_t addr) const;
  std::vector<std::pair<uint64_t, CacheLineData>> dirty_lines() const;

 private:
  struct Line {
    LineState state = LineState::Invalid;
    uint64_t tag = 0;
    CacheLineData data{};
    uint8_t lru_rank = 0;  // 0 = most recent, ways-1 = LRU
  };

  size_t set_index(uint64_t addr) const { return (addr / cfg_.line_bytes) % cfg_.sets(); }
  uint64_t tag_of(uint64_t addr) const { return addr / cfg_.line_bytes / cfg_.sets(); }
  uint64_t addr_of(size_t set, uint64_t tag) const {
    return (tag * cfg_.sets() + set) * cfg_.line_bytes;
  }
  Line* lookup(uint64_t addr);
  const Line* lookup(uint64_t addr) const;
  void touch(size_t set, size_t way);
  size_t victim_way(size_t set) const;  // invalid way if any, else LRU
  void check_aligned(uint64_t addr) const;

  CacheConfig cfg_;
  std::vector<Line> lines_;  // sets * ways
  CacheStats stats_;
};

}  // namespace memfab
