#pragma once

#include <cstddef>
#include <cstdint>

namespace memfab {

// IEEE 802.3 CRC-32: reflected, polynomial 0xEDB88320, init and final xor
// 0xFFFFFFFF. All kernels share the zlib calling convention: pass the crc
// returned by the previous call (0 for the first) and the next chunk.

uint32_t crc32_bitwise(uint32_t crc, const uint8_t* data, size_t len);  // definition-level oracle
uint32_t crc32_scalar(uint32_t crc, const uint8_t* data, size_t len);   // slice-by-8 reference
uint32_t crc32_pclmul(uint32_t crc, const uint8_t* data, size_t len);   // x86 CLMUL folding

bool crc32_simd_available();

// Whole-buffer helper using the fastest kernel available at runtime.
uint32_t crc32(const uint8_t* data, size_t len);

}  // namespace memfab
