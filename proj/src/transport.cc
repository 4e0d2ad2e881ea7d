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

#include "sqrs/transport.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>
#include <zlib.h>

#include <bit>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <thread>

namespace sqrs {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'Q', 'R', 'S'};

void put_u16(Bytes &out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes &out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

void put_u64(Bytes &out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

// Bounds-checked big-endian reader over a payload.
class Reader {
   public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {
    }
    std::uint64_t read(int nbytes) {
        if (pos_ + static_cast<size_t>(nbytes) > data_.size()) {
            throw PayloadError("payload ends early");
        }
        std::uint64_t v = 0;
        for (int i = 0; i < nbytes; i++) {
            v = (v << 8) | data_[pos_++];
        }
        return v;
    }
    std::span<const std::uint8_t> rest() const {
        return data_.subspan(pos_);
    }
    void expect_end() const {
        if (pos_ != data_.size()) {
            throw PayloadError("payload has trailing bytes");
        }
    }

   private:
    std::span<const std::uint8_t> data_;
    size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> header10, std::span<const std::uint8_t> payload) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, header10.data(), static_cast<uInt>(header10.size()));
    if (!payload.empty()) {
        crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    }
    return static_cast<std::uint32_t>(crc);
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, size_t at) {
    return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) | (std::uint32_t(b[at + 2]) << 8) |
           std::uint32_t(b[at + 3]);
}

bool known_kind(std::uint8_t k) {
    return k >= 1 && k <= 3;
}

// ---- in-memory channel ----

struct Queue {
    std::mutex mu;
    std::condition_variable not_full;
    std::condition_variable not_empty;
    std::deque<Bytes> chunks;
    size_t capacity;
    bool closed = false;
    bool receiver_gone = false;
};

class QueueSink : public FrameSink {
   public:
    explicit QueueSink(std::shared_ptr<Queue> q) : q_(std::move(q)) {
    }
    ~QueueSink() override {
        close();
    }
    void send(std::span<const std::uint8_t> frame) override {
        std::unique_lock lock(q_->mu);
        if (q_->closed) {
            throw TransportError("send on closed channel");
        }
        q_->not_full.wait(lock, [&] {
            return q_->chunks.size() < q_->capacity || q_->receiver_gone;
        });
        if (q_->receiver_gone) {
            throw ConnectionLostError("receiver closed the channel", std::nullopt);
        }
        q_->chunks.emplace_back(frame.begin(), frame.end());
        q_->not_empty.notify_one();
    }
    void close() override {
        std::lock_guard lock(q_->mu);
        q_->closed = true;
        q_->not_empty.notify_all();
    }

   private:
    std::shared_ptr<Queue> q_;
};

// Behaves as a byte stream: chunks are reassembled into frames, and a stream
// that closes inside a frame is a broken connection.
class QueueSource : public FrameSource {
   public:
    explicit QueueSource(std::shared_ptr<Queue> q) : q_(std::move(q)) {
    }
    ~QueueSource() override {
        std::lock_guard lock(q_->mu);
        q_->receiver_gone = true;
        q_->not_full.notify_all();
    }
    std::optional<Bytes> recv() override {
        while (true) {
            if (buffer_.size() >= kHeaderSize) {
                size_t len = frame_length(buffer_);
                if (buffer_.size() >= len) {
                    Bytes f(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(len));
                    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(len));
                    return f;
                }
            }
            std::unique_lock lock(q_->mu);
            q_->not_empty.wait(lock, [&] {
                return !q_->chunks.empty() || q_->closed;
            });
            if (q_->chunks.empty()) {
                if (buffer_.empty()) {
                    return std::nullopt;
                }
                throw ConnectionLostError("stream ended inside a frame", std::nullopt);
            }
            Bytes &c = q_->chunks.front();
            buffer_.insert(buffer_.end(), c.begin(), c.end());
            q_->chunks.pop_front();
            q_->not_full.notify_one();
        }
    }

   private:
    std::shared_ptr<Queue> q_;
    Bytes buffer_;
};

// ---- sockets ----

class SocketSink : public FrameSink {
   public:
    explicit SocketSink(int fd) : fd_(fd) {
    }
    ~SocketSink() override {
        close();
    }
    void send(std::span<const std::uint8_t> frame) override {
        if (fd_ < 0) {
            throw TransportError("send on closed socket");
        }
        size_t done = 0;
        while (done < frame.size()) {
            ssize_t n = ::send(fd_, frame.data() + done, frame.size() - done, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw ConnectionLostError(std::string("socket send failed: ") + std::strerror(errno), std::nullopt);
            }
            done += static_cast<size_t>(n);
        }
    }
    void close() override {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_WR);
            // Drain until the peer closes so the final frames are not reset.
            char buf[256];
            while (::recv(fd_, buf, sizeof(buf), 0) > 0) {
            }
            ::close(fd_);
            fd_ = -1;
        }
    }

   private:
    int fd_;
};

class SocketSource : public FrameSource {
   public:
    explicit SocketSource(int fd) : fd_(fd) {
    }
    ~SocketSource() override {
        if (fd_ >= 0) {
            ::close(fd_);
        }
    }
    std::optional<Bytes> recv() override {
        Bytes frame(kHeaderSize);
        size_t got = read_fully(frame.data(), kHeaderSize);
        if (got == 0) {
            return std::nullopt;
        }
        if (got < kHeaderSize) {
            throw ConnectionLostError("stream ended inside a frame header", std::nullopt);
        }
        size_t total = frame_length(frame);
        frame.resize(total);
        if (read_fully(frame.data() + kHeaderSize, total - kHeaderSize) < total - kHeaderSize) {
            throw ConnectionLostError("stream ended inside a frame payload", std::nullopt);
        }
        return frame;
    }

   private:
    size_t read_fully(std::uint8_t *dst, size_t n) {
        size_t done = 0;
        while (done < n) {
            ssize_t r = ::recv(fd_, dst + done, n - done, 0);
            if (r == 0) {
                break;
            }
            if (r < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw ConnectionLostError(std::string("socket receive failed: ") + std::strerror(errno),
                                          std::nullopt);
            }
            done += static_cast<size_t>(r);
        }
        return done;
    }

    int fd_;
};

sockaddr_in resolve(const Endpoint &e) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo *res = nullptr;
    if (getaddrinfo(e.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw TransportError("cannot resolve host '" + e.host + "'");
    }
    sockaddr_in addr{};
    std::memcpy(&addr, res->ai_addr, sizeof(addr));
    freeaddrinfo(res);
    addr.sin_port = htons(e.port);
    return addr;
}

}  // namespace

Bytes encode(MessageKind kind, std::span<const std::uint8_t> payload) {
    if (payload.size() > 0xFFFFFFFFULL) {
        throw PayloadError("payload exceeds 2^32 - 1 bytes");
    }
    Bytes out(kMagic, kMagic + 4);
    out.reserve(kHeaderSize + payload.size());
    out.push_back(kWireVersion);
    out.push_back(static_cast<std::uint8_t>(kind));
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    put_u32(out, crc_of(std::span(out).first(10), payload));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

std::size_t frame_length(std::span<const std::uint8_t> header) {
    if (header.size() < kHeaderSize) {
        throw TruncatedFrameError("frame shorter than its 14-byte header");
    }
    if (!std::equal(kMagic, kMagic + 4, header.begin())) {
        throw BadMagicError("frame does not start with SQRS");
    }
    if (header[4] != kWireVersion) {
        throw UnsupportedVersionError("unsupported wire version " + std::to_string(header[4]));
    }
    if (!known_kind(header[5])) {
        throw UnknownKindError("unknown message kind " + std::to_string(header[5]));
    }
    return kHeaderSize + get_u32(header, 6);
}

Envelope decode(std::span<const std::uint8_t> frame) {
    size_t total = frame_length(frame);
    if (frame.size() < total) {
        throw TruncatedFrameError("frame payload truncated: have " + std::to_string(frame.size()) + " of " +
                                  std::to_string(total) + " bytes");
    }
    if (frame.size() > total) {
        throw PayloadError("bytes after the end of the frame");
    }
    auto payload = frame.subspan(kHeaderSize);
    if (crc_of(frame.first(10), payload) != get_u32(frame, 10)) {
        throw ChecksumMismatchError("frame checksum mismatch");
    }
    return Envelope{static_cast<MessageKind>(frame[5]), Bytes(payload.begin(), payload.end())};
}

std::vector<Envelope> decode_stream(std::span<const std::uint8_t> bytes) {
    std::vector<Envelope> out;
    size_t pos = 0;
    while (pos < bytes.size()) {
        auto rest = bytes.subspan(pos);
        size_t total = frame_length(rest);
        if (rest.size() < total) {
            throw TruncatedFrameError("stream ends inside a frame");
        }
        out.push_back(decode(rest.first(total)));
        pos += total;
    }
    return out;
}

SensingOutcomes SensingOutcomes::from_view(const EveView &view) {
    SensingOutcomes m;
    m.phase_point_id = view.phase_point_id;
    m.s_b.reserve(view.entries.size());
    for (const auto &e : view.entries) {
        m.s_b.push_back(e.s_b);
    }
    return m;
}

EveView SensingOutcomes::to_view() const {
    EveView v;
    v.phase_point_id = phase_point_id;
    v.entries.reserve(s_b.size());
    for (size_t j = 0; j < s_b.size(); j++) {
        v.entries.push_back(EveEntry{static_cast<std::uint32_t>(j), s_b[j]});
    }
    return v;
}

Bytes encode_payload(const SensingOutcomes &m) {
    if (m.s_b.size() > 0xFFFFFFFFULL) {
        throw PayloadError("too many rounds for one message");
    }
    Bytes out;
    out.reserve(kSensingOutcomesFixedSize + (m.s_b.size() + 7) / 8);
    put_u16(out, m.phase_point_id);
    put_u32(out, static_cast<std::uint32_t>(m.s_b.size()));
    size_t start = out.size();
    out.resize(start + (m.s_b.size() + 7) / 8, 0);
    for (size_t j = 0; j < m.s_b.size(); j++) {
        if (m.s_b[j] > 1) {
            throw PayloadError("s_B values must be 0 or 1");
        }
        out[start + j / 8] |= static_cast<std::uint8_t>(m.s_b[j] << (j % 8));
    }
    return out;
}

Bytes encode_payload(const TomographyCounts &m) {
    m.validate();
    Bytes out;
    put_u32(out, m.shots_per_setting);
    for (auto c : m.counts) {
        put_u32(out, c);
    }
    return out;
}

Bytes encode_payload(const SweepManifest &m) {
    if (m.phases.size() > 0xFFFF) {
        throw PayloadError("too many phase points");
    }
    Bytes out;
    put_u64(out, m.config_hash);
    put_u64(out, m.seed);
    put_u32(out, m.rounds_per_phase);
    put_u16(out, static_cast<std::uint16_t>(m.phases.size()));
    for (double p : m.phases) {
        put_u64(out, std::bit_cast<std::uint64_t>(p));
    }
    return out;
}

Bytes encode_message(const Message &m) {
    return std::visit(
        [](const auto &msg) {
            using T = std::decay_t<decltype(msg)>;
            MessageKind kind = std::is_same_v<T, TomographyCounts>  ? MessageKind::TomographyReport
                               : std::is_same_v<T, SensingOutcomes> ? MessageKind::SensingOutcomes
                                                                    : MessageKind::SweepManifest;
            return encode(kind, encode_payload(msg));
        },
        m);
}

Message decode_message(const Envelope &e) {
    Reader r(e.payload);
    switch (e.kind) {
        case MessageKind::TomographyReport: {
            TomographyCounts c;
            c.shots_per_setting = static_cast<std::uint32_t>(r.read(4));
            for (auto &v : c.counts) {
                v = static_cast<std::uint32_t>(r.read(4));
            }
            r.expect_end();
            try {
                c.validate();
            } catch (const TomographyError &ex) {
                throw PayloadError(ex.what());
            }
            return c;
        }
        case MessageKind::SensingOutcomes: {
            SensingOutcomes m;
            m.phase_point_id = static_cast<std::uint16_t>(r.read(2));
            auto n = static_cast<std::uint32_t>(r.read(4));
            auto bits = r.rest();
            if (bits.size() != (static_cast<size_t>(n) + 7) / 8) {
                throw PayloadError("bit field length does not match round count");
            }
            m.s_b.resize(n);
            for (size_t j = 0; j < n; j++) {
                m.s_b[j] = (bits[j / 8] >> (j % 8)) & 1;
            }
            if (n % 8 != 0 && (bits.back() >> (n % 8)) != 0) {
                throw PayloadError("nonzero padding bits");
            }
            return m;
        }
        case MessageKind::SweepManifest: {
            SweepManifest m;
            m.config_hash = r.read(8);
            m.seed = r.read(8);
            m.rounds_per_phase = static_cast<std::uint32_t>(r.read(4));
            auto n = static_cast<size_t>(r.read(2));
            for (size_t i = 0; i < n; i++) {
                m.phases.push_back(std::bit_cast<double>(r.read(8)));
            }
            r.expect_end();
            return m;
        }
    }
    throw UnknownKindError("unknown message kind");
}

std::pair<std::unique_ptr<FrameSink>, std::unique_ptr<FrameSource>> make_in_memory_channel(std::size_t capacity) {
    auto q = std::make_shared<Queue>();
    q->capacity = std::max<std::size_t>(capacity, 1);
    return {std::make_unique<QueueSink>(q), std::make_unique<QueueSource>(q)};
}

Endpoint Endpoint::parse(const std::string &s) {
    auto colon = s.rfind(':');
    if (colon == std::string::npos || colon + 1 == s.size()) {
        throw ConfigError("endpoint must be host:port, got '" + s + "'");
    }
    Endpoint e;
    e.host = colon == 0 ? "127.0.0.1" : s.substr(0, colon);
    unsigned long port = 0;
    try {
        size_t used = 0;
        port = std::stoul(s.substr(colon + 1), &used);
        if (used != s.size() - colon - 1) {
            throw std::invalid_argument("port");
        }
    } catch (const std::logic_error &) {
        throw ConfigError("bad port in endpoint '" + s + "'");
    }
    if (port > 65535) {
        throw ConfigError("port out of range in endpoint '" + s + "'");
    }
    e.port = static_cast<std::uint16_t>(port);
    return e;
}

std::string Endpoint::str() const {
    return host + ":" + std::to_string(port);
}

TcpListener::TcpListener(const Endpoint &endpoint) {
    sockaddr_in addr = resolve(endpoint);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) {
        throw TransportError(std::string("socket: ") + std::strerror(errno));
    }
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 1) != 0) {
        std::string err = std::strerror(errno);
        ::close(fd_);
        throw TransportError("cannot listen on " + endpoint.str() + ": " + err);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

std::unique_ptr<FrameSink> TcpListener::accept() {
    int fd = -1;
    do {
        fd = ::accept(fd_, nullptr, nullptr);
    } while (fd < 0 && errno == EINTR);
    if (fd < 0) {
        throw TransportError(std::string("accept: ") + std::strerror(errno));
    }
    return std::make_unique<SocketSink>(fd);
}

std::unique_ptr<FrameSource> connect_source(const Endpoint &endpoint, int attempts, int retry_delay_ms) {
    sockaddr_in addr = resolve(endpoint);
    for (int i = 0; i < attempts; i++) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) {
            throw TransportError(std::string("socket: ") + std::strerror(errno));
        }
        if (::connect(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) == 0) {
            ::shutdown(fd, SHUT_WR);
            return std::make_unique<SocketSource>(fd);
        }
        ::close(fd);
        std::this_thread::sleep_for(std::chrono::milliseconds(retry_delay_ms));
    }
    throw ConnectionLostError("cannot connect to " + endpoint.str(), std::nullopt);
}

void EveTap::record(std::span<const std::uint8_t> frame) {
    std::lock_guard lock(mu_);
    log_.insert(log_.end(), frame.begin(), frame.end());
}

Bytes EveTap::bytes() const {
    std::lock_guard lock(mu_);
    return log_;
}

std::vector<EveView> EveTap::views() const {
    return parse_eve_views(bytes());
}

std::vector<EveView> parse_eve_views(std::span<const std::uint8_t> tapped) {
    std::vector<EveView> out;
    for (const auto &env : decode_stream(tapped)) {
        if (env.kind == MessageKind::SensingOutcomes) {
            out.push_back(std::get<SensingOutcomes>(decode_message(env)).to_view());
        }
    }
    return out;
}

void TappedSink::send(std::span<const std::uint8_t> frame) {
    inner_->send(frame);
    tap_->record(frame);
}

void TappedSink::close() {
    inner_->close();
}

std::optional<Bytes> TappedSource::recv() {
    auto f = inner_->recv();
    if (f) {
        tap_->record(*f);
    }
    return f;
}

void BobLink::send(const Message &m) {
    sink_->send(encode_message(m));
}

void BobLink::finish() {
    sink_->close();
}

std::optional<Message> AliceLink::receive() {
    std::optional<Bytes> frame;
    try {
        frame = source_->recv();
    } catch (const ConnectionLostError &e) {
        throw ConnectionLostError(e.what(), last_phase_);
    }
    if (!frame) {
        return std::nullopt;
    }
    Message m = decode_message(decode(*frame));
    if (auto *s = std::get_if<SensingOutcomes>(&m)) {
        last_phase_ = s->phase_point_id;
    }
    last_frame_ = std::move(*frame);
    return m;
}

}  // namespace sqrs
