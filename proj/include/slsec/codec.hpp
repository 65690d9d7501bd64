// SPDX-License-Identifier: Apache-2.0
//
// Framed binary codec for cut-layer traffic. Frame layout, after a u32 LE
// length prefix covering everything that follows:
//
//   magic 0x53 0x4C ("SL") | version u8 = 1 | msg_type u8 (1 embedding,
//   2 gradient) | epoch u32 LE | batch_id u32 LE | rows u32 LE | cols u32 LE
//   | sample_ids u64 LE x rows | payload f32 LE row-major
//
// Frames are self-delimiting, so a trace file is just their concatenation.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "slsec/matrix.hpp"

namespace slsec {

struct CutLayerMessage {
  std::uint32_t epoch = 0;
  std::uint32_t batch_id = 0;
  std::vector<std::uint64_t> sample_ids;
  Matrix embeddings;  // batch × cut_width

  bool operator==(const CutLayerMessage&) const = default;
};

struct GradientMessage {
  std::uint32_t epoch = 0;
  std::uint32_t batch_id = 0;
  std::vector<std::uint64_t> sample_ids;
  Matrix gradients;  // batch × cut_width

  bool operator==(const GradientMessage&) const = default;
};

using Message = std::variant<CutLayerMessage, GradientMessage>;

std::vector<std::uint8_t> encode_frame(const Message& msg);

// Expects exactly one complete frame (length prefix included). Truncated
// input, bad magic, unknown version, and unknown message type raise distinct
// kFormat errors.
Message decode_frame(std::span<const std::uint8_t> frame);

// Trace files (.sltrace): concatenated frames.
void write_trace(const std::string& path, std::span<const Message> messages);
std::vector<Message> read_trace(const std::string& path);

}  // namespace slsec
