// Reference denoiser endpoint speaking the framed real64 protocol on
// stdin/stdout: magic "PNDZ" | u32 LE payload length | u64 LE element count |
// count little-endian real64 values; one response frame per request.

#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "proxns/denoiser.hpp"
#include "proxns/denoiser_bridge.hpp"

namespace {

bool read_exact(std::uint8_t* buf, std::size_t len) {
    std::size_t off = 0;
    while (off < len) {
        const ssize_t n = ::read(STDIN_FILENO, buf + off, len - off);
        if (n <= 0) return false;
        off += static_cast<std::size_t>(n);
    }
    return true;
}

bool write_exact(const std::uint8_t* buf, std::size_t len) {
    std::size_t off = 0;
    while (off < len) {
        const ssize_t n = ::write(STDOUT_FILENO, buf + off, len - off);
        if (n <= 0) return false;
        off += static_cast<std::size_t>(n);
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"framed-stream denoiser endpoint"};
    std::string kind = "identity";
    double width = 1.0;
    double epsilon = 0.1;
    std::size_t rows = 0, cols = 0;
    app.add_option("--denoiser", kind, "identity | gaussian-smooth")->capture_default_str();
    app.add_option("--width", width, "smoothing kernel width in pixels")->capture_default_str();
    app.add_option("--epsilon", epsilon, "declared noise level")->capture_default_str();
    app.add_option("--rows", rows, "image rows (required for gaussian-smooth)");
    app.add_option("--cols", cols, "image cols (required for gaussian-smooth)");
    CLI11_PARSE(app, argc, argv);

    std::unique_ptr<proxns::Denoiser> denoiser;
    if (kind == "identity") {
        denoiser = std::make_unique<proxns::IdentityDenoiser>(epsilon);
    } else if (kind == "gaussian-smooth") {
        if (rows == 0 || cols == 0) {
            std::fprintf(stderr, "gaussian-smooth needs --rows and --cols\n");
            return 1;
        }
        denoiser = std::make_unique<proxns::GaussianSmoothingDenoiser>(width, epsilon);
    } else {
        std::fprintf(stderr, "unknown denoiser: %s\n", kind.c_str());
        return 1;
    }

    std::uint8_t header[16];
    while (read_exact(header, 16)) {
        if (std::memcmp(header, proxns::pndz::kMagic, 4) != 0) {
            std::fprintf(stderr, "bad frame magic\n");
            return 2;
        }
        const std::uint32_t payload = proxns::pndz::get_u32(header + 4);
        const std::uint64_t count = proxns::pndz::get_u64(header + 8);
        if (payload != 8 + 8 * count) {
            std::fprintf(stderr, "inconsistent frame length\n");
            return 2;
        }
        std::vector<std::uint8_t> body(8 * count);
        if (!read_exact(body.data(), body.size())) return 2;
        std::vector<double> values(count);
        std::memcpy(values.data(), body.data(), body.size());

        const std::size_t r = rows ? rows : 1;
        const std::size_t c = cols ? cols : count;
        if (r * c != count) {
            std::fprintf(stderr, "frame element count %llu does not match %zux%zu\n",
                         static_cast<unsigned long long>(count), r, c);
            return 2;
        }
        proxns::ImageVector out =
            denoiser->apply(proxns::ImageVector(std::move(values), r, c));
        const std::vector<std::uint8_t> frame = proxns::pndz::encode_frame(out.values());
        if (!write_exact(frame.data(), frame.size())) return 2;
    }
    return 0;
}
