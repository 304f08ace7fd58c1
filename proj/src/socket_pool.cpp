// Socket transport: each worker runs in a forked child and talks to the
// coordinator over its end of an AF_UNIX stream pair using wire frames.

#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <string>

#include "sequency/dcc.hpp"
#include "sequency/errors.hpp"
#include "sequency/parallel.hpp"
#include "sequency/wire.hpp"

namespace sequency {

namespace {

void write_all(int fd, const std::vector<std::uint8_t>& bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t n = ::send(fd, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw ProtocolError(std::string("socket send failed: ") + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

void read_exact(int fd, std::uint8_t* out, std::size_t len) {
    std::size_t done = 0;
    while (done < len) {
        const ssize_t n = ::recv(fd, out + done, len - done, 0);
        if (n == 0) {
            throw ProtocolError("peer closed the connection");
        }
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw ProtocolError(std::string("socket recv failed: ") + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

std::vector<std::uint8_t> read_payload(int fd) {
    std::uint8_t prefix[wire::kLengthPrefix];
    read_exact(fd, prefix, sizeof prefix);
    const std::uint64_t len = wire::decode_length(prefix);
    if (len > (std::uint64_t{1} << 34)) {
        throw ProtocolError("frame too large");
    }
    std::vector<std::uint8_t> payload(static_cast<std::size_t>(len));
    read_exact(fd, payload.data(), payload.size());
    return payload;
}

wire::RoundFrame to_frame(const RoundMessage& m) {
    wire::RoundFrame f;
    f.round = m.round;
    f.worker_id = m.worker_id;
    f.K = static_cast<std::uint32_t>(m.centroids.rows());
    f.L = static_cast<std::uint32_t>(m.centroids.cols());
    f.centroids.assign(m.centroids.data().begin(), m.centroids.data().end());
    f.flag = m.flag ? 1 : 0;
    return f;
}

RoundMessage from_frame(wire::RoundFrame f) {
    return RoundMessage{f.worker_id, f.round, Matrix(f.K, f.L, std::move(f.centroids)), f.flag != 0};
}

[[noreturn]] void worker_main(int fd, std::uint32_t id, const Matrix& shard, std::size_t K, std::uint64_t seed,
                              std::size_t lloyd_iters) {
    set_parallel_enabled(false);
    int code = 0;
    try {
        Worker worker(id, shard, K, seed, lloyd_iters);
        for (;;) {
            const wire::RoundFrame cmd = wire::decode_round(read_payload(fd));
            if (cmd.flag == 0) {
                write_all(fd, wire::encode(wire::ResultFrame{id, worker.assignment().labels, worker.assignment().wcss}));
                break;
            }
            std::optional<CentroidSet> incoming;
            if (cmd.L != 0) {
                incoming = Matrix(cmd.K, cmd.L, cmd.centroids);
            }
            write_all(fd, wire::encode(to_frame(worker.run_round(cmd.round, incoming))));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "worker %u: %s\n", id, e.what());
        code = 3;
    }
    ::close(fd);
    ::_exit(code);
}

class SocketPool final : public WorkerPool {
public:
    SocketPool(std::span<const Matrix> shards, std::size_t K, std::uint64_t seed, std::size_t lloyd_iters)
        : K_(K) {
        std::fflush(nullptr);
        for (std::size_t s = 0; s < shards.size(); ++s) {
            int fds[2];
            if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
                shutdown_children();
                throw ProtocolError(std::string("socketpair failed: ") + std::strerror(errno));
            }
            const auto id = static_cast<std::uint32_t>(s + 1);
            const pid_t pid = ::fork();
            if (pid < 0) {
                ::close(fds[0]);
                ::close(fds[1]);
                shutdown_children();
                throw ProtocolError(std::string("fork failed: ") + std::strerror(errno));
            }
            if (pid == 0) {
                ::close(fds[0]);
                for (const int other : fds_) {
                    ::close(other);
                }
                worker_main(fds[1], id, shards[s], K, worker_seed(seed, id), lloyd_iters);
            }
            ::close(fds[1]);
            fds_.push_back(fds[0]);
            pids_.push_back(pid);
        }
    }

    ~SocketPool() override { shutdown_children(); }

    std::size_t size() const override { return fds_.size(); }

    std::vector<RoundMessage> round(std::uint32_t round, const std::optional<CentroidSet>& incoming) override {
        // Broadcast first so every worker computes concurrently, then gather.
        for (std::size_t s = 0; s < fds_.size(); ++s) {
            wire::RoundFrame cmd;
            cmd.round = round;
            cmd.worker_id = static_cast<std::uint32_t>(s + 1);
            cmd.K = static_cast<std::uint32_t>(K_);
            if (incoming) {
                cmd.L = static_cast<std::uint32_t>(incoming->cols());
                cmd.centroids.assign(incoming->data().begin(), incoming->data().end());
            }
            cmd.flag = 1;
            write_all(fds_[s], wire::encode(cmd));
        }
        std::vector<RoundMessage> out;
        out.reserve(fds_.size());
        for (const int fd : fds_) {
            out.push_back(from_frame(wire::decode_round(read_payload(fd))));
        }
        return out;
    }

    std::vector<WorkerReport> finish() override {
        for (std::size_t s = 0; s < fds_.size(); ++s) {
            wire::RoundFrame stop;
            stop.worker_id = static_cast<std::uint32_t>(s + 1);
            stop.flag = 0;
            write_all(fds_[s], wire::encode(stop));
        }
        std::vector<WorkerReport> out;
        for (const int fd : fds_) {
            auto r = wire::decode_result(read_payload(fd));
            out.push_back({r.worker_id, std::move(r.labels), r.wcss});
        }
        for (std::size_t s = 0; s < pids_.size(); ++s) {
            int status = 0;
            ::waitpid(pids_[s], &status, 0);
            ::close(fds_[s]);
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
                pids_.clear();
                fds_.clear();
                throw ProtocolError("worker " + std::to_string(s + 1) + " exited abnormally");
            }
        }
        pids_.clear();
        fds_.clear();
        return out;
    }

private:
    void shutdown_children() {
        for (const int fd : fds_) {
            ::close(fd);
        }
        for (const pid_t pid : pids_) {
            ::kill(pid, SIGKILL);
            int status = 0;
            ::waitpid(pid, &status, 0);
        }
        fds_.clear();
        pids_.clear();
    }

    std::size_t K_;
    std::vector<int> fds_;
    std::vector<pid_t> pids_;
};

}  // namespace

std::unique_ptr<WorkerPool> make_socket_pool(std::span<const Matrix> shards, std::size_t K, std::uint64_t seed,
                                             std::size_t lloyd_iters) {
    return std::make_unique<SocketPool>(shards, K, seed, lloyd_iters);
}

}  // namespace sequency
