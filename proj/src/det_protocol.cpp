#include "sevo/det_protocol.hpp"

#include "sevo/error.hpp"

#include <cerrno>
#include <csignal>
#include <fcntl.h>
#include <cstring>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace sevo::detproto {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

// Upper bound on frame dimensions accepted off the wire.
constexpr std::uint32_t kMaxSide = 16384;

class SpanSource : public ByteSource {
public:
    explicit SpanSource(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    void read_exact(std::span<std::uint8_t> out) override {
        if (bytes_.size() - pos_ < out.size()) throw ProtocolError("short read: message truncated");
        std::memcpy(out.data(), bytes_.data() + pos_, out.size());
        pos_ += out.size();
    }
    bool at_eof() override { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

// Forwards reads and keeps a copy of every byte.
class RecordingSource : public ByteSource {
public:
    explicit RecordingSource(ByteSource& inner) : inner_(inner) {}
    void read_exact(std::span<std::uint8_t> out) override {
        inner_.read_exact(out);
        bytes.insert(bytes.end(), out.begin(), out.end());
    }
    bool at_eof() override { return inner_.at_eof(); }

    std::vector<std::uint8_t> bytes;

private:
    ByteSource& inner_;
};

void expect_magic(ByteSource& in, const char (&magic)[4], const char* what) {
    std::uint8_t m[4];
    in.read_exact(m);
    if (std::memcmp(m, magic, 4) != 0) {
        throw ProtocolError(std::string("bad ") + what + " magic, expected " + std::string(magic, 4));
    }
}

std::uint32_t read_u32(ByteSource& in) {
    std::uint8_t b[4];
    in.read_exact(b);
    return get_u32(b);
}

std::uint8_t read_u8(ByteSource& in) {
    std::uint8_t b;
    in.read_exact(std::span<std::uint8_t>(&b, 1));
    return b;
}

} // namespace

std::vector<std::uint8_t> encode_request(const Frame& frame) {
    std::vector<std::uint8_t> out(kRequestMagic, kRequestMagic + 4);
    put_u32(out, static_cast<std::uint32_t>(frame.width()));
    put_u32(out, static_cast<std::uint32_t>(frame.height()));
    const auto px = frame.pixels();
    out.insert(out.end(), px.begin(), px.end());
    return out;
}

Frame read_request(ByteSource& in) {
    expect_magic(in, kRequestMagic, "request");
    const auto w = read_u32(in);
    const auto h = read_u32(in);
    if (w == 0 || h == 0 || w > kMaxSide || h > kMaxSide) {
        throw ProtocolError("request dimensions " + std::to_string(w) + "x" + std::to_string(h) + " out of range");
    }
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    in.read_exact(px);
    return Frame(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

Frame decode_request(std::span<const std::uint8_t> bytes) {
    SpanSource src(bytes);
    Frame f = read_request(src);
    if (!src.at_eof()) throw ProtocolError("trailing bytes after request");
    return f;
}

std::vector<std::uint8_t> encode_reply(const std::vector<Detection>& detections) {
    if (detections.size() > 255) throw ProtocolError("at most 255 detections fit in a reply");
    std::vector<std::uint8_t> out(kReplyMagic, kReplyMagic + 4);
    out.push_back(static_cast<std::uint8_t>(detections.size()));
    for (const auto& d : detections) {
        if (d.class_label.size() > 255) throw ProtocolError("label longer than 255 bytes");
        const float conf = static_cast<float>(d.confidence);
        std::uint32_t bits;
        std::memcpy(&bits, &conf, 4);
        put_u32(out, bits);
        out.push_back(static_cast<std::uint8_t>(d.class_label.size()));
        out.insert(out.end(), d.class_label.begin(), d.class_label.end());
        for (auto b : d.mask.bits()) out.push_back(b ? 255 : 0);
    }
    return out;
}

std::vector<Detection> read_reply(ByteSource& in, int width, int height) {
    expect_magic(in, kReplyMagic, "reply");
    const auto count = read_u8(in);
    std::vector<Detection> out;
    out.reserve(count);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    for (int i = 0; i < count; ++i) {
        std::uint8_t cb[4];
        in.read_exact(cb);
        const std::uint32_t bits = get_u32(cb);
        float conf;
        std::memcpy(&conf, &bits, 4);
        if (!(conf >= 0.0f && conf <= 1.0f)) {
            throw ProtocolError("detection " + std::to_string(i) + ": confidence outside [0, 1]");
        }
        std::string label(read_u8(in), '\0');
        in.read_exact(std::span<std::uint8_t>(reinterpret_cast<std::uint8_t*>(label.data()), label.size()));
        std::vector<std::uint8_t> raw(n);
        in.read_exact(raw);
        std::vector<std::uint8_t> mask_bits(n);
        for (std::size_t k = 0; k < n; ++k) {
            if (raw[k] != 0 && raw[k] != 255) {
                throw ProtocolError("detection " + std::to_string(i) + ": mask byte " + std::to_string(raw[k]) +
                                    " is neither 0 nor 255");
            }
            mask_bits[k] = raw[k] ? 1 : 0;
        }
        SegmentationMask mask(width, height, std::move(mask_bits), conf);
        out.push_back(Detection{std::move(mask), std::move(label), static_cast<double>(conf)});
    }
    return out;
}

std::vector<Detection> decode_reply(std::span<const std::uint8_t> bytes, int width, int height) {
    SpanSource src(bytes);
    auto out = read_reply(src, width, height);
    // Extra bytes mean the masks were sized for another frame.
    if (!src.at_eof()) throw ProtocolError("reply does not match the frame dimensions (trailing bytes)");
    return out;
}

std::vector<Detection> checkerboard_reply(const Frame& frame) {
    SegmentationMask mask(frame.width(), frame.height(), 1.0);
    for (int y = 0; y < frame.height(); ++y) {
        for (int x = 0; x < frame.width(); ++x) mask.set(x, y, ((x / 8) + (y / 8)) % 2 == 0);
    }
    return {Detection{std::move(mask), kTargetLabel, 1.0}};
}

bool FdSource::fill() {
    if (eof_) return false;
    pollfd pfd{fd_, POLLIN, 0};
    const int timeout = timeout_.count() < 0 ? -1 : static_cast<int>(timeout_.count());
    for (;;) {
        const int r = ::poll(&pfd, 1, timeout);
        if (r < 0 && errno == EINTR) continue;
        if (r < 0) throw UnavailableError(std::string("poll failed: ") + std::strerror(errno));
        if (r == 0) throw UnavailableError("detector did not answer within " + std::to_string(timeout_.count()) + " ms");
        break;
    }
    std::uint8_t buf[65536];
    ssize_t got;
    do {
        got = ::read(fd_, buf, sizeof buf);
    } while (got < 0 && errno == EINTR);
    if (got < 0) throw UnavailableError(std::string("read failed: ") + std::strerror(errno));
    if (got == 0) {
        eof_ = true;
        return false;
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
    buffer_.insert(buffer_.end(), buf, buf + got);
    return true;
}

void FdSource::read_exact(std::span<std::uint8_t> out) {
    std::size_t done = 0;
    while (done < out.size()) {
        if (pos_ == buffer_.size() && !fill()) throw ProtocolError("short read: stream closed mid-message");
        const std::size_t take = std::min(out.size() - done, buffer_.size() - pos_);
        std::memcpy(out.data() + done, buffer_.data() + pos_, take);
        pos_ += take;
        done += take;
    }
}

bool FdSource::at_eof() {
    if (pos_ < buffer_.size()) return false;
    return !fill();
}

void FdSink::write_all(std::span<const std::uint8_t> bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t n = ::write(fd_, bytes.data() + done, bytes.size() - done);
        if (n < 0 && errno == EINTR) continue;
        if (n < 0) throw UnavailableError(std::string("write failed: ") + std::strerror(errno));
        done += static_cast<std::size_t>(n);
    }
}

ExternalDetector::ExternalDetector(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
    if (argv.empty()) throw InvalidArgument("detector command is empty");
    // A dead child must surface as EPIPE, not kill the process.
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw UnavailableError("pipe failed");
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw UnavailableError("pipe failed");
    }
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        throw UnavailableError("fork failed");
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execvp(args[0], args.data());
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

ExternalDetector::~ExternalDetector() { close(); }

void ExternalDetector::close() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        // Closing stdin lets a well-behaved server exit on its own.
        int status = 0;
        bool reaped = false;
        for (int i = 0; i < 50 && !reaped; ++i) {
            reaped = ::waitpid(pid_, &status, WNOHANG) == pid_;
            if (!reaped) std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
        if (!reaped) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
        }
        pid_ = -1;
    }
}

void ExternalDetector::ensure_alive() const {
    if (pid_ <= 0) throw UnavailableError("detector process is not running");
}

namespace {

// A child that closes its output before answering has exited or failed to
// start; that is an unavailable endpoint, not a framing error.
void expect_reply(ByteSource& src) {
    if (src.at_eof()) throw UnavailableError("detector endpoint closed its output");
}

} // namespace

std::vector<Detection> ExternalDetector::detect(const Frame& frame) {
    std::lock_guard lock(mutex_);
    ensure_alive();
    try {
        FdSink(to_child_).write_all(encode_request(frame));
        FdSource src(from_child_, timeout_);
        expect_reply(src);
        return read_reply(src, frame.width(), frame.height());
    } catch (const Error&) {
        close();
        throw;
    }
}

std::vector<std::uint8_t> ExternalDetector::exchange_raw(std::span<const std::uint8_t> request, int width,
                                                         int height) {
    std::lock_guard lock(mutex_);
    ensure_alive();
    try {
        FdSink(to_child_).write_all(request);
        FdSource src(from_child_, timeout_);
        expect_reply(src);
        RecordingSource rec(src);
        read_reply(rec, width, height);
        return std::move(rec.bytes);
    } catch (const Error&) {
        close();
        throw;
    }
}

std::vector<Detection> external_detect(const Frame& frame, ExternalDetector& endpoint) {
    try {
        return endpoint.detect(frame);
    } catch (const UnavailableError&) {
        return {};
    }
}

} // namespace sevo::detproto
