#include "memfab/sim.hpp"

#include <algorithm>

namespace memfab {

static uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

static uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

RngStream::RngStream(uint64_t master_seed, std::string_view stream_id) {
  state_ = master_seed ^ fnv1a64(stream_id);
  // decorrelate nearby seeds
  for (int i = 0; i < 4; i++) splitmix64(state_);
}

uint64_t RngStream::next_u64() { return splitmix64(state_); }

uint64_t RngStream::next_below(uint64_t n) {
  if (n == 0) return 0;
  // Lemire-style rejection to keep the draw unbiased.
  uint64_t threshold = (0 - n) % n;
  for (;;) {
    uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool RngStream::chance(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return next_double() < p;
}

uint64_t Sim::schedule(SimTime fire_at, const char* target, const char* kind,
                       std::function<void()> fn) {
  if (fire_at < now_)
    throw SchedulingInPast("schedule at " + std::to_string(fire_at) +
                           " before now " + std::to_string(now_));
  uint64_t id = next_seq_++;
  heap_.push_back(Item{fire_at, id, target, kind, std::move(fn)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  return id;
}

RunStats Sim::run_until(SimTime t_end) {
  RunStats stats;
  while (!heap_.empty() && heap_.front().t <= t_end) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Item item = std::move(heap_.back());
    heap_.pop_back();
    now_ = item.t;
    if (trace_) trace_->on_event(now_, item.target, item.kind);
    item.fn();
    stats.events_processed++;
  }
  if (t_end != kTimeMax && now_ < t_end) now_ = t_end;
  stats.final_time = now_;
  return stats;
}

}  // namespace memfab
