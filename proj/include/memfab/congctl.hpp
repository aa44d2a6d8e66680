#pragma once

#include <cstdint>
#include <stdexcept>

#include "memfab/sim.hpp"

namespace memfab {

// Rates are integer kbps so every trajectory value the recovery rules can
// produce from dyadic inputs (halving, (CR+TR)/2, 7/8, 3/4) stays exact.
using RateKbps = int64_t;
constexpr RateKbps kKbpsPerGbps = 1'000'000;
constexpr RateKbps kKbpsPerMbps = 1'000;

struct CcParams {
  SimTime t1 = 50 * kNsPerUs;   // PFC response countdown
  SimTime t2 = 10 * kNsPerUs;   // duplicate-PFC suppression window
  SimTime t3 = 11 * kNsPerUs;   // fast-recovery speedup interval
  SimTime t4 = 200 * kNsPerUs;  // stable dwell before exploration
  SimTime t5 = 40 * kNsPerUs;   // exploration increment interval
  SimTime t6 = 20 * kNsPerUs;   // increment-guessing confirmation window
  RateKbps increment = 1 * kKbpsPerGbps;
  int speedup_count_max = 5;
  RateKbps line_rate = 100 * kKbpsPerGbps;
  RateKbps min_rate = 1 * kKbpsPerGbps;
};

enum class Phase {
  StableRunning,
  PfcResponse,
  FastRecovery,
  FastRecoveryPfcResponse,
  IncrementExploration,
  IncrementGuessing,
};

const char* to_string(Phase p);

// Six-phase PFC-driven rate controller. Pure function of (state, event, now):
// replaying an event log reproduces the identical trajectory.
class CongCtl {
 public:
  explicit CongCtl(const CcParams& p, SimTime now = 0);

  // Returns false when the PFC fell inside the t2 duplicate window.
  bool on_pfc(SimTime now);
  void on_deadline(SimTime now);

  RateKbps current_rate() const { return cr_; }
  RateKbps target_rate() const { return tr_; }
  Phase phase() const { return phase_; }
  SimTime deadline() const { return deadline_; }
  int speedups_done() const { return speedups_; }
  // Bumped on every accepted transition; schedulers use it to drop stale
  // deadline events.
  uint64_t epoch() const { return epoch_; }

 private:
  void arm(SimTime now, SimTime delay) { deadline_ = sat_add(now, delay); }
  RateKbps halved(RateKbps r) const;

  CcParams p_;
  Phase phase_ = Phase::StableRunning;
  RateKbps cr_, tr_;
  SimTime deadline_;
  SimTime last_pfc_at_ = 0;
  bool seen_pfc_ = false;
  int speedups_ = 0;
  uint64_t epoch_ = 0;
};

struct FrameLargerThanBucket : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Shaper whose refill tracks the controller's current rate. Accounts in
// microbits (kbps x ns) so refill across rate changes is integer-exact.
class TokenBucket {
 public:
  TokenBucket(int64_t capacity_bits, RateKbps rate, SimTime now);

  // Refills up to `now` at the old rate before switching.
  void set_rate(SimTime now, RateKbps rate);
  RateKbps rate() const { return rate_; }

  struct Acquire {
    bool granted;
    SimTime retry_at;  // earliest grant time when not granted
  };
  Acquire acquire(size_t bytes, SimTime now);

  int64_t tokens_bits(SimTime now);  // rounded down; for tests/metrics

 private:
  void refill(SimTime now);

  int64_t capacity_ubits_;
  int64_t tokens_ubits_;
  RateKbps rate_;
  SimTime last_refill_;
};

}  // namespace memfab
