#include <random>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "oracles.hpp"
#include "pad/protocol.hpp"
#include "pad/region_provider.hpp"

using namespace pad;

namespace {

// Bitmap oracle for the run-length encoding: runs are maximal stretches of
// set pixels in row-major order.
std::vector<protocol::Run> runs_by_scan(const BinaryMask& m) {
    std::vector<protocol::Run> out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m[i]) continue;
        if (i > 0 && m[i - 1] && !out.empty() && out.back().first + out.back().second == i) {
            ++out.back().second;
        } else {
            out.emplace_back(i, 1);
        }
    }
    return out;
}

// Minimal sidecar: answers every request with a fixed body, remembering the
// last decoded image.
class StubSidecar {
public:
    explicit StubSidecar(std::function<std::string(const ImageBuffer&)> reply) : reply_(std::move(reply)) {
        server_.Post("/segment", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                last_ = protocol::parse_segment_request(nlohmann::json::parse(req.body));
                res.set_content(reply_(last_), "application/json");
            } catch (const std::exception& e) {
                res.status = 400;
                res.set_content(e.what(), "text/plain");
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubSidecar() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    const ImageBuffer& last() const { return last_; }

private:
    std::function<std::string(const ImageBuffer&)> reply_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    ImageBuffer last_;
};

}  // namespace

TEST(Base64, KnownVectors) {
    auto enc = [](std::string s) {
        return protocol::base64_encode(std::vector<std::uint8_t>(s.begin(), s.end()));
    };
    EXPECT_EQ(enc(""), "");
    EXPECT_EQ(enc("f"), "Zg==");
    EXPECT_EQ(enc("fo"), "Zm8=");
    EXPECT_EQ(enc("foo"), "Zm9v");
    EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
    const auto dec = protocol::base64_decode("Zm9vYg==");
    EXPECT_EQ(std::string(dec.begin(), dec.end()), "foob");
    EXPECT_THROW(protocol::base64_decode("Zm9"), InvalidArgument);
    EXPECT_THROW(protocol::base64_decode("Zm!v"), InvalidArgument);
}

TEST(Base64, RandomRoundTrip) {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int n = 0; n < 64; ++n) {
        std::vector<std::uint8_t> v(static_cast<std::size_t>(n));
        for (auto& b : v) b = static_cast<std::uint8_t>(byte(rng));
        EXPECT_EQ(protocol::base64_decode(protocol::base64_encode(v)), v);
    }
}

TEST(Rle, MatchesBitmapOracle) {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> dim(1, 40);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        const int w = dim(rng);
        const int h = dim(rng);
        const auto m = oracle::random_mask(rng, w, h, density(rng));
        const auto runs = protocol::rle_encode(m);
        ASSERT_EQ(runs, runs_by_scan(m));
        ASSERT_EQ(protocol::rle_decode(runs, w, h), m);
    }
}

TEST(Rle, RejectsMalformedRuns) {
    using R = std::vector<protocol::Run>;
    EXPECT_THROW(protocol::rle_decode(R{{0, 0}}, 4, 4), ProtocolViolation);
    EXPECT_THROW(protocol::rle_decode(R{{5, 2}, {1, 1}}, 4, 4), ProtocolViolation);
    EXPECT_THROW(protocol::rle_decode(R{{1, 3}, {2, 1}}, 4, 4), ProtocolViolation);
    EXPECT_THROW(protocol::rle_decode(R{{15, 2}}, 4, 4), ProtocolViolation);
    EXPECT_EQ(count_set(protocol::rle_decode(R{{15, 1}}, 4, 4)), 1u);
}

TEST(SegmentMessages, RequestRoundTrip) {
    std::mt19937_64 rng(43);
    const auto img = oracle::random_image(rng, 13, 7);
    const auto req = protocol::make_segment_request(img);
    EXPECT_EQ(req.at("width"), 13);
    EXPECT_EQ(req.at("height"), 7);
    EXPECT_EQ(protocol::parse_segment_request(nlohmann::json::parse(req.dump())), img);
}

TEST(SegmentMessages, ResponseDropsEmptyMasks) {
    const auto body = nlohmann::json::parse(R"({"masks":[{"rle":[]},{"rle":[[2,3]]}]})");
    const auto masks = protocol::parse_segment_response(body, 4, 2);
    ASSERT_EQ(masks.size(), 1u);
    EXPECT_EQ(count_set(masks[0]), 3u);
}

TEST(SegmentMessages, ResponseViolations) {
    auto parse = [](const char* s) { return protocol::parse_segment_response(nlohmann::json::parse(s), 4, 4); };
    EXPECT_THROW(parse(R"({})"), ProtocolViolation);
    EXPECT_THROW(parse(R"({"masks":[{"bits":[]}]})"), ProtocolViolation);
    EXPECT_THROW(parse(R"({"masks":[{"rle":[[1]]}]})"), ProtocolViolation);
    EXPECT_THROW(parse(R"({"masks":[{"rle":[[-1,2]]}]})"), ProtocolViolation);
    EXPECT_THROW(parse(R"({"masks":[{"width":5,"height":4,"rle":[[0,1]]}]})"), ProtocolViolation);
    EXPECT_THROW(parse(R"({"masks":[{"rle":[[0,17]]}]})"), ProtocolViolation);
}

TEST(Sidecar, RoundTripReproducesCannedMasks) {
    std::mt19937_64 rng(44);
    std::vector<BinaryMask> canned;
    StubSidecar stub([&](const ImageBuffer&) { return protocol::make_segment_response(canned).dump(); });
    for (int fixture = 0; fixture < 20; ++fixture) {
        const int w = 16 + fixture;
        const int h = 20;
        const auto img = oracle::random_image(rng, w, h);
        canned.clear();
        for (int k = 0; k < 1 + fixture % 4; ++k) canned.push_back(oracle::random_mask(rng, w, h, 0.2 + 0.1 * k));
        const auto got = sidecar_regions(stub.url(), img, 5.0);
        EXPECT_EQ(stub.last(), img);
        EXPECT_EQ(got.source, ProviderKind::Sidecar);
        EXPECT_EQ(got.masks, canned);
    }
}

TEST(Sidecar, WrongDimensionsIsProtocolViolation) {
    StubSidecar stub([](const ImageBuffer& img) {
        return protocol::make_segment_response({BinaryMask(img.width() + 1, img.height() + 1, 1)}).dump();
    });
    const auto spec = RegionProviderSpec::parse("sidecar:" + stub.url(), 5.0);
    EXPECT_THROW(provide_regions(spec, ImageBuffer(10, 10), BinaryMask(10, 10), "x"), ProtocolViolation);
}

TEST(Sidecar, NonJsonIsProtocolViolation) {
    StubSidecar stub([](const ImageBuffer&) { return std::string("not json"); });
    EXPECT_THROW(sidecar_regions(stub.url(), ImageBuffer(8, 8), 5.0), ProtocolViolation);
}

TEST(Sidecar, UnreachableIsProviderError) {
    // Bind and release a port so nothing is listening on it.
    int port = 0;
    {
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }
    try {
        sidecar_regions("http://127.0.0.1:" + std::to_string(port), ImageBuffer(8, 8), 1.0);
        FAIL() << "expected ProviderError";
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.kind(), "sidecar");
    }
}
