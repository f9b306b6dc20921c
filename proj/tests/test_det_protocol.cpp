#include "sevo/det_protocol.hpp"
#include "sevo/error.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstring>

using namespace sevo;
using namespace sevo::detproto;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

// Reply bytes assembled by hand for a single checkerboard detection.
std::vector<std::uint8_t> expected_echo(int w, int h) {
    std::vector<std::uint8_t> out{'S', 'E', 'V', 'M', 1};
    put_f32(out, 1.0f);
    out.push_back(6);
    for (char c : std::string("bottle")) out.push_back(static_cast<std::uint8_t>(c));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.push_back(((x / 8) + (y / 8)) % 2 == 0 ? 255 : 0);
    }
    return out;
}

} // namespace

TEST_CASE("request layout") {
    Frame f(2, 1);
    f.set(0, 0, {1, 2, 3});
    f.set(1, 0, {4, 5, 6});
    std::vector<std::uint8_t> want{'S', 'E', 'V', '1'};
    put_u32(want, 2);
    put_u32(want, 1);
    for (int i = 1; i <= 6; ++i) want.push_back(static_cast<std::uint8_t>(i));
    CHECK(encode_request(f) == want);
    CHECK(decode_request(want) == f);

    auto bad = want;
    bad[3] = '2';
    CHECK_THROWS_AS(decode_request(bad), ProtocolError);
    bad = want;
    bad.pop_back();
    CHECK_THROWS_AS(decode_request(bad), ProtocolError);
    bad = want;
    bad.push_back(0);
    CHECK_THROWS_AS(decode_request(bad), ProtocolError);
}

TEST_CASE("reply layout and validation") {
    Frame f(20, 12);
    const auto dets = checkerboard_reply(f);
    REQUIRE(dets.size() == 1);
    const auto bytes = encode_reply(dets);
    CHECK(bytes == expected_echo(20, 12));
    CHECK(decode_reply(bytes, 20, 12) == dets);

    const std::vector<std::uint8_t> none{'S', 'E', 'V', 'M', 0};
    CHECK(decode_reply(none, 4, 4).empty());

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_reply(bad, 20, 12), ProtocolError);
    bad = bytes;
    bad.back() = 17;
    CHECK_THROWS_AS(decode_reply(bad, 20, 12), ProtocolError);
    bad = bytes;
    bad.resize(bytes.size() - 1);
    CHECK_THROWS_AS(decode_reply(bad, 20, 12), ProtocolError);

    std::vector<std::uint8_t> loud{'S', 'E', 'V', 'M', 1};
    put_f32(loud, 1.5f);
    loud.push_back(0);
    loud.insert(loud.end(), 4, 0);
    CHECK_THROWS_AS(decode_reply(loud, 2, 2), ProtocolError);
}

TEST_CASE("random detections round-trip") {
    Rng rng(31);
    for (int t = 0; t < 30; ++t) {
        const int w = static_cast<int>(rng.uniform_int(1, 30));
        const int h = static_cast<int>(rng.uniform_int(1, 30));
        std::vector<Detection> dets;
        const auto n = rng.uniform_int(0, 4);
        for (std::int64_t i = 0; i < n; ++i) {
            const float conf = static_cast<float>(rng.uniform());
            auto m = test::random_mask(rng, w, h);
            m.set_confidence(conf);
            dets.push_back({m, i % 2 ? "cup" : "bottle", conf});
        }
        CHECK(decode_reply(encode_reply(dets), w, h) == dets);
        const auto f = test::random_frame(rng, w, h);
        CHECK(decode_request(encode_request(f)) == f);
    }
}

TEST_CASE("detect-echo child process is byte-exact") {
    ExternalDetector echo({SEVO_CLI_PATH, "detect-echo"});
    Rng rng(5);
    for (auto [w, h] : {std::pair{64, 64}, std::pair{17, 9}, std::pair{640, 480}}) {
        const auto f = test::random_frame(rng, w, h);
        CHECK(echo.exchange_raw(encode_request(f), w, h) == expected_echo(w, h));
        const auto dets = echo.detect(f);
        REQUIRE(dets.size() == 1);
        CHECK(dets[0] == checkerboard_reply(f)[0]);
    }
}

TEST_CASE("misbehaving endpoints") {
    // `cat` echoes the request, which is not a reply.
    ExternalDetector parrot({"cat"});
    CHECK_THROWS_AS(parrot.detect(Frame(4, 4)), ProtocolError);
    CHECK_THROWS_AS(parrot.detect(Frame(4, 4)), UnavailableError);

    ExternalDetector silent({"sleep", "5"}, std::chrono::milliseconds(150));
    CHECK_THROWS_AS(silent.detect(Frame(4, 4)), UnavailableError);

    ExternalDetector gone({"sevo-no-such-binary-xyz"}, std::chrono::milliseconds(500));
    CHECK(external_detect(Frame(4, 4), gone).empty());
}
