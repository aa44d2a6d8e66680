#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace memfab {

// Virtual time in nanoseconds. One FPGA cycle at 250 MHz = 4 ns.
using SimTime = uint64_t;

constexpr SimTime kNsPerUs = 1000;
constexpr SimTime kNsPerMs = 1000 * 1000;
constexpr SimTime kNsPerCycle = 4;
constexpr SimTime kTimeMax = UINT64_MAX;

inline SimTime sat_add(SimTime a, SimTime b) {
  SimTime s = a + b;
  return s < a ? kTimeMax : s;
}

struct SchedulingInPast : std::logic_error {
  using std::logic_error::logic_error;
};

// Deterministic per-consumer random stream. Same (seed, stream_id) gives the
// same draw sequence on every platform; adding a consumer never perturbs the
// draws of existing ones.
class RngStream {
 public:
  RngStream() = default;
  RngStream(uint64_t master_seed, std::string_view stream_id);

  uint64_t next_u64();
  uint64_t next_below(uint64_t n);  // uniform in [0, n)
  double next_double();             // uniform in [0, 1)
  bool chance(double p);

 private:
  uint64_t state_ = 0x9e3779b97f4a7c15ull;
};

struct RunStats {
  uint64_t events_processed = 0;
  SimTime final_time = 0;
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_event(SimTime t, const char* target, const char* kind) = 0;
};

// Single-threaded discrete-event engine. Events with equal fire time dispatch
// in insertion order; the (fire_at, seq_no) pair is a strict total order.
class Sim {
 public:
  SimTime now() const { return now_; }

  uint64_t schedule(SimTime fire_at, const char* target, const char* kind,
                    std::function<void()> fn);
  uint64_t schedule_in(SimTime delay, const char* target, const char* kind,
                       std::function<void()> fn) {
    return schedule(sat_add(now_, delay), target, kind, std::move(fn));
  }

  // Processes every event with fire_at <= t_end, then advances now() to t_end.
  RunStats run_until(SimTime t_end);
  // Drains the queue completely.
  RunStats run_all() { return run_until(kTimeMax); }

  bool empty() const { return heap_.empty(); }
  size_t pending() const { return heap_.size(); }
  void set_trace(TraceSink* sink) { trace_ = sink; }

 private:
  struct Item {
    SimTime t;
    uint64_t seq;
    const char* target;
    const char* kind;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Item& a, const Item& b) const {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };

  std::vector<Item> heap_;
  SimTime now_ = 0;
  uint64_t next_seq_ = 0;
  TraceSink* trace_ = nullptr;
};

}  // namespace memfab
