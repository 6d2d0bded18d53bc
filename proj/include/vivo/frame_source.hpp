#pragma once

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <unistd.h>

#include "vivo/error.hpp"
#include "vivo/image.hpp"

namespace vivo {

/// Reads packed raw frames (rgb24 or rgba) from a file descriptor. Blocking
/// reads wake up every poll interval so a stop flag is noticed promptly.
class RawFrameReader {
public:
    RawFrameReader(int fd, int width, int height, PixelFormat pix, double fps = 0.0)
        : fd_(fd), width_(width), height_(height), pix_(pix), fps_(fps),
          frame_bytes_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bytes_per_pixel(pix))
    {
        if (width <= 0 || height <= 0)
            throw Error("input dimensions must be positive");
    }

    std::size_t frame_bytes() const noexcept { return frame_bytes_; }
    std::uint64_t frames_read() const noexcept { return index_; }
    /// Bytes of an incomplete frame left at end of input.
    std::size_t trailing_bytes() const noexcept { return trailing_; }

    /// Next whole frame, or nullopt at end of input (or when `stop` is set).
    /// Timestamps come from the frame index and fps when fps > 0.
    std::optional<Frame> next(const std::atomic<bool>* stop = nullptr)
    {
        std::vector<std::uint8_t> buf(frame_bytes_);
        std::size_t got = 0;
        while (got < frame_bytes_) {
            if (stop && stop->load())
                return std::nullopt;
            pollfd p{fd_, POLLIN, 0};
            const int ready = ::poll(&p, 1, 100);
            if (ready < 0) {
                if (errno == EINTR)
                    continue;
                throw Error(std::string("poll failed: ") + std::strerror(errno));
            }
            if (ready == 0)
                continue;
            const ssize_t n = ::read(fd_, buf.data() + got, frame_bytes_ - got);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN)
                    continue;
                throw Error(std::string("read failed: ") + std::strerror(errno));
            }
            if (n == 0) {
                trailing_ = got;
                return std::nullopt;
            }
            got += static_cast<std::size_t>(n);
        }
        const double ts = fps_ > 0.0 ? static_cast<double>(index_) * 1000.0 / fps_ : 0.0;
        ++index_;
        return frame_from_packed(buf, width_, height_, pix_, ts);
    }

private:
    int fd_;
    int width_;
    int height_;
    PixelFormat pix_;
    double fps_;
    std::size_t frame_bytes_;
    std::uint64_t index_ = 0;
    std::size_t trailing_ = 0;
};

/// Owns a file descriptor opened for reading; "-" means stdin (not closed).
class InputFile {
public:
    explicit InputFile(const std::string& path)
    {
        if (path == "-") {
            fd_ = STDIN_FILENO;
            return;
        }
        fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
        if (fd_ < 0)
            throw Error("cannot open " + path + ": " + std::strerror(errno));
        owned_ = true;
    }

    InputFile(const InputFile&) = delete;
    InputFile& operator=(const InputFile&) = delete;

    ~InputFile()
    {
        if (owned_)
            ::close(fd_);
    }

    int fd() const noexcept { return fd_; }

private:
    int fd_ = -1;
    bool owned_ = false;
};

/// Sleeps until the next frame slot at `fps`; falls back to now when late.
class Pacer {
public:
    using Clock = std::chrono::steady_clock;

    explicit Pacer(double fps)
        : period_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / fps)))
    {
    }

    void wait()
    {
        const auto now = Clock::now();
        if (!started_) {
            next_ = now + period_;
            started_ = true;
            return;
        }
        if (next_ > now)
            std::this_thread::sleep_until(next_);
        else
            next_ = now;
        next_ += period_;
    }

private:
    Clock::duration period_;
    Clock::time_point next_{};
    bool started_ = false;
};

} // namespace vivo
