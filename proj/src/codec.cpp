// SPDX-License-Identifier: Apache-2.0

#include "slsec/codec.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "slsec/error.hpp"

namespace slsec {

namespace {

constexpr std::uint8_t kMagic0 = 0x53;  // 'S'
constexpr std::uint8_t kMagic1 = 0x4c;  // 'L'
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 20;  // magic..cols, excluding length prefix

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  std::uint64_t take(int n, const char* what) {
    if (pos + static_cast<std::size_t>(n) > bytes.size()) {
      raise(ErrorKind::kFormat,
            std::string("decode_frame: truncated frame while reading ") + what +
                " (expected " + std::to_string(pos + n) + " bytes, have " +
                std::to_string(bytes.size()) + ")");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += static_cast<std::size_t>(n);
    return v;
  }
};

std::vector<std::uint8_t> encode_payload(std::uint8_t msg_type, std::uint32_t epoch,
                                         std::uint32_t batch_id,
                                         const std::vector<std::uint64_t>& ids,
                                         const Matrix& payload) {
  require(ids.size() == payload.rows, ErrorKind::kArgument,
          "encode_frame: sample_ids length != rows");
  require(payload.rows <= std::numeric_limits<std::uint32_t>::max() &&
              payload.cols <= std::numeric_limits<std::uint32_t>::max() &&
              (payload.rows == 0 ||
               payload.cols <= std::numeric_limits<std::uint32_t>::max() /
                                   std::max<std::size_t>(payload.rows, 1)),
          ErrorKind::kArgument, "encode_frame: rows*cols overflows u32");

  std::vector<std::uint8_t> body;
  body.reserve(kHeaderBytes + 8 * ids.size() + 4 * payload.data.size());
  body.push_back(kMagic0);
  body.push_back(kMagic1);
  body.push_back(kVersion);
  body.push_back(msg_type);
  put_u32(body, epoch);
  put_u32(body, batch_id);
  put_u32(body, static_cast<std::uint32_t>(payload.rows));
  put_u32(body, static_cast<std::uint32_t>(payload.cols));
  for (std::uint64_t id : ids) put_u64(body, id);
  for (double v : payload.data) {
    put_u32(body, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }

  std::vector<std::uint8_t> frame;
  frame.reserve(4 + body.size());
  put_u32(frame, static_cast<std::uint32_t>(body.size()));
  frame.insert(frame.end(), body.begin(), body.end());
  return frame;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Message& msg) {
  if (const auto* emb = std::get_if<CutLayerMessage>(&msg)) {
    return encode_payload(1, emb->epoch, emb->batch_id, emb->sample_ids,
                          emb->embeddings);
  }
  const auto& grad = std::get<GradientMessage>(msg);
  return encode_payload(2, grad.epoch, grad.batch_id, grad.sample_ids,
                        grad.gradients);
}

Message decode_frame(std::span<const std::uint8_t> frame) {
  Reader rd{frame};
  auto declared = static_cast<std::size_t>(rd.take(4, "length prefix"));
  if (frame.size() - 4 != declared) {
    raise(ErrorKind::kFormat, "decode_frame: truncated frame (declared " +
                                  std::to_string(declared) + " bytes, have " +
                                  std::to_string(frame.size() - 4) + ")");
  }
  auto m0 = rd.take(1, "magic");
  auto m1 = rd.take(1, "magic");
  require(m0 == kMagic0 && m1 == kMagic1, ErrorKind::kFormat,
          "decode_frame: bad magic");
  auto version = rd.take(1, "version");
  require(version == kVersion, ErrorKind::kFormat,
          "decode_frame: unknown version " + std::to_string(version));
  auto msg_type = rd.take(1, "msg_type");
  require(msg_type == 1 || msg_type == 2, ErrorKind::kFormat,
          "decode_frame: unsupported msg_type " + std::to_string(msg_type));
  auto epoch = static_cast<std::uint32_t>(rd.take(4, "epoch"));
  auto batch_id = static_cast<std::uint32_t>(rd.take(4, "batch_id"));
  auto rows = static_cast<std::size_t>(rd.take(4, "rows"));
  auto cols = static_cast<std::size_t>(rd.take(4, "cols"));

  std::size_t expected = kHeaderBytes + 8 * rows + 4 * rows * cols;
  if (declared != expected) {
    raise(ErrorKind::kFormat, "decode_frame: truncated frame (expected " +
                                  std::to_string(expected) + " body bytes, have " +
                                  std::to_string(declared) + ")");
  }

  std::vector<std::uint64_t> ids(rows);
  for (auto& id : ids) id = rd.take(8, "sample_ids");
  Matrix payload(rows, cols);
  for (double& v : payload.data) {
    v = static_cast<double>(
        std::bit_cast<float>(static_cast<std::uint32_t>(rd.take(4, "payload"))));
  }

  if (msg_type == 1)
    return CutLayerMessage{epoch, batch_id, std::move(ids), std::move(payload)};
  return GradientMessage{epoch, batch_id, std::move(ids), std::move(payload)};
}

void write_trace(const std::string& path, std::span<const Message> messages) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "write_trace: cannot open " + path);
  for (const Message& msg : messages) {
    auto frame = encode_frame(msg);
    out.write(reinterpret_cast<const char*>(frame.data()),
              static_cast<std::streamsize>(frame.size()));
  }
  require(out.good(), ErrorKind::kIo, "write_trace: write failed for " + path);
}

std::vector<Message> read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "read_trace: cannot open " + path);
  std::vector<std::uint8_t> all((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  std::vector<Message> messages;
  std::size_t pos = 0;
  while (pos < all.size()) {
    require(pos + 4 <= all.size(), ErrorKind::kFormat,
            "read_trace: dangling bytes at end of " + path);
    std::size_t len = 0;
    for (int i = 0; i < 4; ++i)
      len |= static_cast<std::size_t>(all[pos + i]) << (8 * i);
    require(pos + 4 + len <= all.size(), ErrorKind::kFormat,
            "read_trace: truncated final frame in " + path);
    messages.push_back(decode_frame(
        std::span<const std::uint8_t>(all.data() + pos, 4 + len)));
    pos += 4 + len;
  }
  return messages;
}

}  // namespace slsec
