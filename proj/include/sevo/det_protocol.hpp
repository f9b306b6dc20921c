#pragma once

#include "sevo/detector.hpp"
#include "sevo/frame.hpp"

#include <chrono>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <vector>

// SEVO-DET/1: length-prefixed binary exchange with an external detector
// process over its standard streams.
//
//   request: "SEV1" | width u32 LE | height u32 LE | width*height*3 RGB bytes
//   reply:   "SEVM" | count u8 | count x [confidence f32 LE | label_len u8 |
//            label ASCII | width*height mask bytes (0 or 255)]
namespace sevo::detproto {

inline constexpr char kRequestMagic[4] = {'S', 'E', 'V', '1'};
inline constexpr char kReplyMagic[4] = {'S', 'E', 'V', 'M'};

std::vector<std::uint8_t> encode_request(const Frame& frame);
Frame decode_request(std::span<const std::uint8_t> bytes);

// Masks must match the frame dimensions given to decode_reply.
std::vector<std::uint8_t> encode_reply(const std::vector<Detection>& detections);
std::vector<Detection> decode_reply(std::span<const std::uint8_t> bytes, int width, int height);

// Blocking byte source/sink used by the streaming readers; lets the same
// decoder run over pipes, files and in-memory buffers.
class ByteSource {
public:
    virtual ~ByteSource() = default;
    // Fills `out` completely or throws (ProtocolError on EOF, UnavailableError on timeout).
    virtual void read_exact(std::span<std::uint8_t> out) = 0;
    // True on clean EOF before the first byte of a message.
    virtual bool at_eof() = 0;
};

class ByteSink {
public:
    virtual ~ByteSink() = default;
    virtual void write_all(std::span<const std::uint8_t> bytes) = 0;
};

Frame read_request(ByteSource& in);
std::vector<Detection> read_reply(ByteSource& in, int width, int height);

// Endpoint side of the protocol: answers each request with `responder(frame)`
// until EOF on `in`.
template <typename Responder>
void serve(ByteSource& in, ByteSink& out, Responder&& responder) {
    while (!in.at_eof()) {
        Frame frame = read_request(in);
        auto reply = encode_reply(responder(frame));
        out.write_all(reply);
    }
}

// Loopback responder used by `sevo detect-echo`: one "bottle" detection with a
// checkerboard mask (8 px cells, top-left cell set) and confidence 1.0.
std::vector<Detection> checkerboard_reply(const Frame& frame);

// File-descriptor streams.
class FdSource : public ByteSource {
public:
    FdSource(int fd, std::chrono::milliseconds timeout) : fd_(fd), timeout_(timeout) {}
    void read_exact(std::span<std::uint8_t> out) override;
    bool at_eof() override;

private:
    bool fill();

    int fd_;
    std::chrono::milliseconds timeout_;
    std::vector<std::uint8_t> buffer_;
    std::size_t pos_ = 0;
    bool eof_ = false;
};

class FdSink : public ByteSink {
public:
    explicit FdSink(int fd) : fd_(fd) {}
    void write_all(std::span<const std::uint8_t> bytes) override;

private:
    int fd_;
};

// Child process speaking SEVO-DET/1 on stdin/stdout. Calls are serialized, so
// one request is in flight at a time. After a timeout or framing error the
// stream can no longer be trusted and the child is shut down; later calls
// raise UnavailableError.
class ExternalDetector {
public:
    // argv[0] is resolved through PATH.
    explicit ExternalDetector(std::vector<std::string> argv,
                              std::chrono::milliseconds timeout = std::chrono::milliseconds(1000));
    ~ExternalDetector();

    ExternalDetector(const ExternalDetector&) = delete;
    ExternalDetector& operator=(const ExternalDetector&) = delete;

    // Throws ProtocolError on malformed replies and UnavailableError on
    // timeout or a dead child.
    std::vector<Detection> detect(const Frame& frame);

    // Raw exchange, for protocol tests: sends `request` verbatim and returns
    // the reply bytes exactly as received.
    std::vector<std::uint8_t> exchange_raw(std::span<const std::uint8_t> request, int width, int height);

private:
    void close();
    void ensure_alive() const;

    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::chrono::milliseconds timeout_;
};

// Unavailability maps to "no detection", matching the deployed behavior where
// the arm stays idle when the detector is down. Protocol errors propagate.
std::vector<Detection> external_detect(const Frame& frame, ExternalDetector& endpoint);

} // namespace sevo::detproto
