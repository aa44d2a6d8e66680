#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace memfab {

using MacAddr = std::array<uint8_t, 6>;

std::string mac_to_string(const MacAddr& m);

// 16-bit serial sequence numbers. Comparisons are defined for distances
// below 2^15; window usage never exceeds 512 so that always holds here.
using SeqNum = uint16_t;

enum class SeqOrder { Less, Equal, Greater };

inline SeqOrder seq_cmp(SeqNum a, SeqNum b) {
  if (a == b) return SeqOrder::Equal;
  return static_cast<int16_t>(static_cast<uint16_t>(a - b)) > 0 ? SeqOrder::Greater
                                                                : SeqOrder::Less;
}
inline bool seq_less(SeqNum a, SeqNum b) { return seq_cmp(a, b) == SeqOrder::Less; }
inline bool seq_leq(SeqNum a, SeqNum b) { return !seq_less(b, a); }
// serial distance a - b, valid when a is ahead of or equal to b
inline uint16_t seq_sub(SeqNum a, SeqNum b) { return static_cast<uint16_t>(a - b); }

using CacheLineData = std::array<uint8_t, 64>;

// The seven frame formats. Lengths below exclude the trailing CRC-32.
//   ReadReq 25, WriteReq 89, ReadResp 91, WriteResp 23, Ack 17, SackNak 22, Pfc 18
struct ReadReq {
  MacAddr src{}, dst{};
  SeqNum seq = 0;
  uint16_t arid = 0;
  uint64_t address = 0;  // 48-bit CMem byte address
  bool operator==(const ReadReq&) const = default;
};

struct WriteReq {
  MacAddr src{}, dst{};
  SeqNum seq = 0;
  uint16_t awid = 0;
  uint64_t address = 0;
  CacheLineData data{};
  bool operator==(const WriteReq&) const = default;
};

struct ReadResp {
  MacAddr src{}, dst{};
  SeqNum resp_seq = 0, req_seq = 0, cum_ack = 0;
  uint64_t address = 0;
  CacheLineData data{};
  bool operator==(const ReadResp&) const = default;
};

struct WriteResp {
  MacAddr src{}, dst{};
  SeqNum resp_seq = 0, req_seq = 0, cum_ack = 0;
  uint16_t awid = 0;
  bool operator==(const WriteResp&) const = default;
};

struct Ack {
  MacAddr src{}, dst{};
  SeqNum cum_ack = 0;
  bool operator==(const Ack&) const = default;
};

struct SackNak {
  MacAddr src{}, dst{};
  uint8_t flags = 0;  // bit0 SACK present, bit1 NAK present, bit2 ACK present
  SeqNum sack_seq = 0, nak_seq = 0, cum_ack = 0;
  bool operator==(const SackNak&) const = default;

  static constexpr uint8_t kSack = 0x01;
  static constexpr uint8_t kNak = 0x02;
  static constexpr uint8_t kAck = 0x04;
};

struct Pfc {
  MacAddr src{}, dst{};
  uint8_t pfc_class = 0;
  uint16_t pause_quanta = 0;
  bool operator==(const Pfc&) const = default;
};

using Frame = std::variant<ReadReq, WriteReq, ReadResp, WriteResp, Ack, SackNak, Pfc>;

constexpr uint16_t kEtherType = 0x88B5;
constexpr size_t kEthHeaderBytes = 14;
constexpr size_t kCrcBytes = 4;
// Preamble + SFD (8) and inter-frame gap (12), accounted at serialization time.
constexpr size_t kWireOverheadBytes = 20;

uint8_t command_of(const Frame& f);
const char* kind_of(const Frame& f);
size_t payload_length(const Frame& f);               // excludes CRC
size_t payload_length_of_command(uint8_t command);   // 0 if unknown
inline size_t encoded_length(const Frame& f) { return payload_length(f) + kCrcBytes; }
inline size_t wire_length(const Frame& f) { return encoded_length(f) + kWireOverheadBytes; }

struct FieldOverflow : std::domain_error {
  using std::domain_error::domain_error;
};

enum class DecodeError { CrcError, UnknownCommand, Truncated };
const char* to_string(DecodeError e);

struct DecodeResult {
  std::optional<Frame> frame;
  DecodeError error = DecodeError::Truncated;
  bool ok() const { return frame.has_value(); }
};

// Header + payload + CRC-32 (big-endian fields throughout).
std::vector<uint8_t> encode(const Frame& f);
DecodeResult decode(std::span<const uint8_t> bytes);

}  // namespace memfab
