// Copyright 2026 The SQRS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SQRS_TRANSPORT_H
#define SQRS_TRANSPORT_H

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sqrs/protocol.h"
#include "sqrs/tomography.h"

/// Classical Bob -> Alice wire.
///
/// Frame layout (all integers big-endian):
///
///   offset  size  field
///   0       4     magic "SQRS"
///   4       1     version (1)
///   5       1     kind (1 TomographyReport, 2 SensingOutcomes, 3 SweepManifest)
///   6       4     payload length
///   10      4     CRC-32 (IEEE) of bytes 0..9 followed by the payload
///   14      n     payload
///
/// Payloads:
///
///   TomographyReport  u32 shots_per_setting, then 36 x u32 counts in grid
///                     order (6 * alice + bob, projectors H V D J R L)
///   SensingOutcomes   u16 phase_point_id, u32 round_count, then the s_B bits
///                     packed 8 per byte, bit j in byte j/8 at position j%8
///                     (LSB first), zero padded
///   SweepManifest     u64 config_hash, u64 seed, u32 rounds_per_phase,
///                     u16 phase_count, then phase_count x IEEE-754 binary64
namespace sqrs {

using Bytes = std::vector<std::uint8_t>;

enum class MessageKind : std::uint8_t { TomographyReport = 1, SensingOutcomes = 2, SweepManifest = 3 };

constexpr std::uint8_t kWireVersion = 1;
constexpr std::size_t kHeaderSize = 14;
constexpr std::size_t kSensingOutcomesFixedSize = 6;

struct Envelope {
    MessageKind kind;
    Bytes payload;
    bool operator==(const Envelope &) const = default;
};

Bytes encode(MessageKind kind, std::span<const std::uint8_t> payload);

/// Decodes exactly one frame. Distinct errors for truncation, bad magic,
/// unsupported version, unknown kind, checksum mismatch, trailing bytes.
Envelope decode(std::span<const std::uint8_t> frame);

/// Total frame length announced by a header, validating magic, version and
/// kind. Throws TruncatedFrameError for fewer than kHeaderSize bytes.
std::size_t frame_length(std::span<const std::uint8_t> header);

/// Splits a concatenation of frames.
std::vector<Envelope> decode_stream(std::span<const std::uint8_t> bytes);

/// Bob's outcomes for one phase point. Carries no basis or s_A by
/// construction.
struct SensingOutcomes {
    std::uint16_t phase_point_id = 0;
    std::vector<std::uint8_t> s_b;  // one entry (0 or 1) per round

    static SensingOutcomes from_view(const EveView &view);
    EveView to_view() const;
    bool operator==(const SensingOutcomes &) const = default;
};

struct SweepManifest {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::uint32_t rounds_per_phase = 0;
    std::vector<double> phases;
    bool operator==(const SweepManifest &) const = default;
};

using Message = std::variant<TomographyCounts, SensingOutcomes, SweepManifest>;

Bytes encode_payload(const SensingOutcomes &m);
Bytes encode_payload(const TomographyCounts &m);
Bytes encode_payload(const SweepManifest &m);

Bytes encode_message(const Message &m);
Message decode_message(const Envelope &e);

/// Sending half of a channel. Only Bob holds one.
class FrameSink {
   public:
    virtual ~FrameSink() = default;
    virtual void send(std::span<const std::uint8_t> frame) = 0;
    /// Ends the stream; the receiver sees end-of-stream after draining.
    virtual void close() = 0;
};

/// Receiving half of a channel. Only Alice holds one; it has no way to
/// write back.
class FrameSource {
   public:
    virtual ~FrameSource() = default;
    /// Next complete frame, or nullopt at a clean end of stream. Throws
    /// ConnectionLostError when the stream breaks inside a frame.
    virtual std::optional<Bytes> recv() = 0;
};

/// Bounded in-process queue. send() blocks while `capacity` frames are
/// queued.
std::pair<std::unique_ptr<FrameSink>, std::unique_ptr<FrameSource>> make_in_memory_channel(std::size_t capacity = 4);

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    /// "host:port".
    static Endpoint parse(const std::string &s);
    std::string str() const;
};

/// Bob's side of the TCP transport: listens and accepts one receiver.
class TcpListener {
   public:
    explicit TcpListener(const Endpoint &endpoint);
    ~TcpListener();
    TcpListener(const TcpListener &) = delete;
    TcpListener &operator=(const TcpListener &) = delete;

    /// Bound port (useful when constructed with port 0).
    std::uint16_t port() const {
        return port_;
    }
    std::unique_ptr<FrameSink> accept();

   private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

/// Alice's side of the TCP transport. The write half of the socket is shut
/// down immediately after connecting.
std::unique_ptr<FrameSource> connect_source(const Endpoint &endpoint, int attempts = 50, int retry_delay_ms = 100);

/// Passive record of every byte crossing a channel.
class EveTap {
   public:
    void record(std::span<const std::uint8_t> frame);
    Bytes bytes() const;
    /// Every SensingOutcomes message in the log as Eve's view, with round
    /// ids numbered from 0 within each phase point.
    std::vector<EveView> views() const;

   private:
    mutable std::mutex mu_;
    Bytes log_;
};

std::vector<EveView> parse_eve_views(std::span<const std::uint8_t> tapped);

/// Forwards to `inner` and records into `tap`.
class TappedSink : public FrameSink {
   public:
    TappedSink(std::unique_ptr<FrameSink> inner, std::shared_ptr<EveTap> tap)
        : inner_(std::move(inner)), tap_(std::move(tap)) {
    }
    void send(std::span<const std::uint8_t> frame) override;
    void close() override;

   private:
    std::unique_ptr<FrameSink> inner_;
    std::shared_ptr<EveTap> tap_;
};

class TappedSource : public FrameSource {
   public:
    TappedSource(std::unique_ptr<FrameSource> inner, std::shared_ptr<EveTap> tap)
        : inner_(std::move(inner)), tap_(std::move(tap)) {
    }
    std::optional<Bytes> recv() override;

   private:
    std::unique_ptr<FrameSource> inner_;
    std::shared_ptr<EveTap> tap_;
};

/// Bob's typed sending role.
class BobLink {
   public:
    explicit BobLink(std::unique_ptr<FrameSink> sink) : sink_(std::move(sink)) {
    }
    void send(const Message &m);
    void finish();

   private:
    std::unique_ptr<FrameSink> sink_;
};

/// Alice's typed receiving role. Remembers the last phase point received in
/// full so a broken stream can be reported as resumable.
class AliceLink {
   public:
    explicit AliceLink(std::unique_ptr<FrameSource> source) : source_(std::move(source)) {
    }
    /// Next message, or nullopt at end of stream. Decode errors propagate;
    /// a broken stream becomes ConnectionLostError carrying
    /// last_phase_point_id().
    std::optional<Message> receive();
    /// Raw bytes of the last frame returned by receive().
    const Bytes &last_frame() const {
        return last_frame_;
    }
    std::optional<std::uint16_t> last_phase_point_id() const {
        return last_phase_;
    }

   private:
    std::unique_ptr<FrameSource> source_;
    Bytes last_frame_;
    std::optional<std::uint16_t> last_phase_;
};

}  // namespace sqrs

#endif
