#pragma once

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "proxns/core.hpp"
#include "proxns/denoiser.hpp"

namespace proxns {

struct DenoiserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DenoiserTimeout final : DenoiserError {
    using DenoiserError::DenoiserError;
};
struct DenoiserShapeMismatch final : DenoiserError {
    using DenoiserError::DenoiserError;
};
struct DenoiserNonFinite final : DenoiserError {
    using DenoiserError::DenoiserError;
};
struct DenoiserProtocolError final : DenoiserError {
    using DenoiserError::DenoiserError;
};

namespace pndz {

inline constexpr char kMagic[4] = {'P', 'N', 'D', 'Z'};

inline void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

/// One frame: magic "PNDZ" | u32 LE payload length | u64 LE element count |
/// count little-endian real64 values. The payload length counts the bytes
/// after the length field (8 + 8 * count).
inline std::vector<std::uint8_t> encode_frame(const std::vector<double>& values) {
    std::vector<std::uint8_t> buf;
    buf.reserve(16 + 8 * values.size());
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32(buf, static_cast<std::uint32_t>(8 + 8 * values.size()));
    put_u64(buf, static_cast<std::uint64_t>(values.size()));
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(buf, bits);
    }
    return buf;
}

} // namespace pndz

/// Denoiser served by a child process over its standard streams using the
/// framed real64 protocol. Requests and responses are strictly one-for-one
/// and in order; a connection serialises its callers.
class ExternalDenoiser final : public Denoiser {
  public:
    ExternalDenoiser(std::vector<std::string> command, double epsilon, int timeout_ms = 10000)
        : command_(std::move(command)), eps_(epsilon), timeout_ms_(timeout_ms) {
        if (command_.empty()) throw std::invalid_argument("ExternalDenoiser: empty command");
        if (!(eps_ > 0.0)) throw std::invalid_argument("ExternalDenoiser: epsilon must be positive");
        spawn();
    }

    ExternalDenoiser(const ExternalDenoiser&) = delete;
    ExternalDenoiser& operator=(const ExternalDenoiser&) = delete;

    ~ExternalDenoiser() override { shutdown(); }

    double epsilon() const override { return eps_; }

    ImageVector apply(const ImageVector& x) const override {
        const std::vector<std::uint8_t> frame = pndz::encode_frame(x.values());
        write_all(frame.data(), frame.size());

        std::uint8_t header[16];
        read_all(header, 16);
        if (std::memcmp(header, pndz::kMagic, 4) != 0)
            throw DenoiserProtocolError("external denoiser: bad frame magic");
        const std::uint32_t payload = pndz::get_u32(header + 4);
        const std::uint64_t count = pndz::get_u64(header + 8);
        if (payload != 8 + 8 * count)
            throw DenoiserProtocolError("external denoiser: inconsistent frame length");
        std::vector<std::uint8_t> body(8 * count);
        read_all(body.data(), body.size());

        if (count != x.size())
            throw DenoiserShapeMismatch("external denoiser: expected " + std::to_string(x.size()) +
                                        " elements, got " + std::to_string(count));
        std::vector<double> values(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            std::uint64_t bits = pndz::get_u64(body.data() + 8 * i);
            std::memcpy(&values[i], &bits, 8);
        }
        if (!all_finite(values)) throw DenoiserNonFinite("external denoiser: non-finite output");
        return ImageVector(std::move(values), x.rows(), x.cols());
    }

  private:
    void spawn() {
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0)
            throw DenoiserError("external denoiser: pipe failed");
        pid_ = fork();
        if (pid_ < 0) throw DenoiserError("external denoiser: fork failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            std::vector<char*> argv;
            argv.reserve(command_.size() + 1);
            for (auto& a : command_) argv.push_back(const_cast<char*>(a.c_str()));
            argv.push_back(nullptr);
            execvp(argv[0], argv.data());
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        out_fd_ = to_child[1];
        in_fd_ = from_child[0];
    }

    void shutdown() {
        if (out_fd_ >= 0) close(out_fd_);
        if (in_fd_ >= 0) close(in_fd_);
        out_fd_ = in_fd_ = -1;
        if (pid_ > 0) {
            kill(pid_, SIGTERM);
            int status = 0;
            waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }

    void write_all(const std::uint8_t* data, std::size_t len) const {
        std::size_t off = 0;
        while (off < len) {
            const ssize_t n = ::write(out_fd_, data + off, len - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw DenoiserError("external denoiser: write failed");
            }
            off += static_cast<std::size_t>(n);
        }
    }

    void read_all(std::uint8_t* data, std::size_t len) const {
        std::size_t off = 0;
        while (off < len) {
            pollfd pfd{in_fd_, POLLIN, 0};
            const int pr = poll(&pfd, 1, timeout_ms_);
            if (pr == 0) throw DenoiserTimeout("external denoiser: no response within " +
                                               std::to_string(timeout_ms_) + " ms");
            if (pr < 0) {
                if (errno == EINTR) continue;
                throw DenoiserError("external denoiser: poll failed");
            }
            const ssize_t n = ::read(in_fd_, data + off, len - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw DenoiserError("external denoiser: read failed");
            }
            if (n == 0) throw DenoiserProtocolError("external denoiser: endpoint closed the stream");
            off += static_cast<std::size_t>(n);
        }
    }

    std::vector<std::string> command_;
    double eps_;
    int timeout_ms_;
    pid_t pid_ = -1;
    int out_fd_ = -1;
    int in_fd_ = -1;
};

/// Round-trips x through an endpoint once; validates shape and finiteness.
inline ImageVector external_denoise(const ExternalDenoiser& endpoint, const ImageVector& x) {
    return endpoint.apply(x);
}

} // namespace proxns
