#include "memfab/cache.hpp"

namespace memfab {

Cache::Cache(CacheConfig cfg) : cfg_(cfg) {
  lines_.resize(cfg_.sets() * cfg_.ways);
  for (size_t s = 0; s < cfg_.sets(); s++)
    for (size_t w = 0; w < cfg_.ways; w++)
      lines_[s * cfg_.ways + w].lru_rank = static_cast<uint8_t>(w);
}

void Cache::check_aligned(uint64_t addr) const {
  if (addr % cfg_.line_bytes != 0)
    throw MisalignedAddress("address not line-aligned: " + std::to_string(addr));
}

Cache::Line* Cache::lookup(uint64_t addr) {
  size_t s = set_index(addr);
  uint64_t tag = tag_of(addr);
  for (size_t w = 0; w < cfg_.ways; w++) {
    Line& l = lines_[s * cfg_.ways + w];
    if (l.state != LineState::Invalid && l.tag == tag) return &l;
  }
  return nullptr;
}

const Cache::Line* Cache::lookup(uint64_t addr) const {
  return const_cast<Cache*>(this)->lookup(addr);
}

void Cache::touch(size_t set, size_t way) {
  uint8_t old = lines_[set * cfg_.ways + way].lru_rank;
  for (size_t w = 0; w < cfg_.ways; w++) {
    Line& l = lines_[set * cfg_.ways + w];
    if (l.lru_rank < old) l.lru_rank++;
  }
  lines_[set * cfg_.ways + way].lru_rank = 0;
}

size_t Cache::victim_way(size_t set) const {
  size_t lru = 0;
  for (size_t w = 0; w < cfg_.ways; w++) {
    const Line& l = lines_[set * cfg_.ways + w];
    if (l.state == LineState::Invalid) return w;
    if (l.lru_rank == cfg_.ways - 1) lru = w;
  }
  return lru;
}

CacheOutcome Cache::access(MemOp op, uint64_t addr, const CacheLineData* data) {
  check_aligned(addr);
  size_t set = set_index(addr);

  if (Line* l = lookup(addr)) {
    size_t way = static_cast<size_t>(l - &lines_[set * cfg_.ways]);
    touch(set, way);
    stats_.hits++;
    if (op == MemOp::Read) return {CacheOutcome::Kind::ReadHit, l->data, std::nullopt};
    l->data = *data;
    l->state = LineState::Modified;
    return {CacheOutcome::Kind::WriteHit, {}, std::nullopt};
  }

  stats_.misses++;
  size_t way = victim_way(set);
  Line& victim = lines_[set * cfg_.ways + way];

  if (op == MemOp::Write) {
    std::optional<Eviction> ev;
    CacheOutcome::Kind kind = CacheOutcome::Kind::WriteAllocNoRemote;
    if (victim.state != LineState::Invalid) {
      kind = CacheOutcome::Kind::WriteReplace;
      ev = Eviction{addr_of(set, victim.tag), std::nullopt};
      if (victim.state == LineState::Modified) {
        ev->dirty = victim.data;
        stats_.writebacks++;
      }
    } else {
      stats_.alloc_no_remote++;
    }
    victim.state = LineState::Modified;
    victim.tag = tag_of(addr);
    victim.data = *data;
    touch(set, way);
    return {kind, {}, ev};
  }

  // read miss: the victim way is freed now, the fill installs into it later
  if (victim.state == LineState::Modified) {
    Eviction ev{addr_of(set, victim.tag), victim.data};
    victim.state = LineState::Invalid;
    stats_.writebacks++;
    return {CacheOutcome::Kind::NeedWritebackThenFetch, {}, ev};
  }
  victim.state = LineState::Invalid;  // clean lines drop silently
  return {CacheOutcome::Kind::NeedFetch, {}, std::nullopt};
}

Cache::FillResult Cache::fill(uint64_t addr, const CacheLineData& data) {
  check_aligned(addr);
  if (lookup(addr)) return {std::nullopt, true};

  size_t set = set_index(addr);
  size_t way = victim_way(set);
  Line& l = lines_[set * cfg_.ways + way];

  FillResult res;
  if (l.state != LineState::Invalid) {
    res.eviction = Eviction{addr_of(set, l.tag), std::nullopt};
    if (l.state == LineState::Modified) {
      res.eviction->dirty = l.data;
      stats_.writebacks++;
    }
  }
  l.state = LineState::Exclusive;
  l.tag = tag_of(addr);
  l.data = data;
  touch(set, way);
  return res;
}

std::optional<LineState> Cache::probe_state(uint64_t addr) const {
  const Line* l = lookup(addr);
  if (!l) return std::nullopt;
  return l->state;
}

std::vector<std::pair<uint64_t, CacheLineData>> Cache::dirty_lines() const {
  std::vector<std::pair<uint64_t, CacheLineData>> out;
  for (size_t s = 0; s < cfg_.sets(); s++)
    for (size_t w = 0; w < cfg_.ways; w++) {
      const Line& l = lines_[s * cfg_.ways + w];
      if (l.state == LineState::Modified) out.emplace_back(addr_of(s, l.tag), l.data);
    }
  return out;
}

}  // namespace memfab
