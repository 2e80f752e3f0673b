#include "ndmt/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <mutex>
#include <optional>

#include "json.hpp"
#include "ndmt/error.hpp"

namespace ndmt {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kStderrCap = 64 * 1024;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { close(); }

  int get() const { return fd_; }
  bool open() const { return fd_ >= 0; }
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  return {Fd(fds[0]), Fd(fds[1])};
}

// Child process speaking the line protocol. Killed and reaped on destruction
// if still running.
class Sidecar {
 public:
  Sidecar(const std::string& command, std::string metric) : metric_(std::move(metric)) {
    ignore_sigpipe();
    Pipe in = make_pipe(), out = make_pipe(), err = make_pipe();
    pid_ = ::fork();
    if (pid_ < 0) throw ProtocolError(fmt::format("metric \"{}\": fork failed: {}", metric_, std::strerror(errno)));
    if (pid_ == 0) {
      ::dup2(in.read.get(), STDIN_FILENO);
      ::dup2(out.write.get(), STDOUT_FILENO);
      ::dup2(err.write.get(), STDERR_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    stdin_ = std::move(in.write);
    stdout_ = std::move(out.read);
    stderr_ = std::move(err.read);
    set_nonblocking(stdin_.get());
    set_nonblocking(stdout_.get());
    set_nonblocking(stderr_.get());
  }

  Sidecar(const Sidecar&) = delete;
  Sidecar& operator=(const Sidecar&) = delete;

  ~Sidecar() {
    stdin_.close();
    if (pid_ > 0 && !status_) {
      ::kill(pid_, SIGKILL);
      int st = 0;
      ::waitpid(pid_, &st, 0);
    }
  }

  const std::string& metric() const { return metric_; }
  const std::string& captured_stderr() const { return stderr_buf_; }

  // Queues bytes for stdin; they are written while pumping.
  void queue(std::string data) { pending_ += data; }
  bool has_pending() const { return written_ < pending_.size(); }
  void close_stdin_when_drained() { close_after_drain_ = true; }

  // One poll round. Complete stdout lines are appended to `lines`. Returns
  // false once stdout has reached EOF and nothing more can arrive.
  bool pump(std::vector<std::string>& lines, int timeout_ms, bool& progressed) {
    progressed = false;
    if (!has_pending() && close_after_drain_) stdin_.close();
    std::vector<pollfd> fds;
    if (stdin_.open() && has_pending()) fds.push_back({stdin_.get(), POLLOUT, 0});
    if (stdout_.open()) fds.push_back({stdout_.get(), POLLIN, 0});
    if (stderr_.open()) fds.push_back({stderr_.get(), POLLIN, 0});
    if (!stdout_.open()) return false;
    const int rc = ::poll(fds.data(), fds.size(), timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) return true;
      throw ProtocolError(fmt::format("metric \"{}\": poll failed: {}", metric_, std::strerror(errno)));
    }
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      progressed = true;
      if (p.fd == stdin_.get()) {
        write_some();
      } else if (p.fd == stdout_.get()) {
        read_some(stdout_, stdout_buf_, &lines);
      } else if (p.fd == stderr_.get()) {
        read_some(stderr_, stderr_buf_, nullptr);
      }
    }
    return stdout_.open();
  }

  // Drains stderr and reaps the child, waiting at most timeout_ms before
  // killing it. Returns a human description of how it ended.
  std::string finish(int timeout_ms) {
    stdin_.close();
    const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    while (!status_) {
      int st = 0;
      const pid_t r = ::waitpid(pid_, &st, WNOHANG);
      if (r == pid_) {
        status_ = st;
        break;
      }
      if (Clock::now() >= deadline) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &st, 0);
        status_ = st;
        break;
      }
      std::vector<std::string> ignored;
      bool progressed = false;
      if (stdout_.open() || stderr_.open()) {
        std::vector<pollfd> fds;
        if (stdout_.open()) fds.push_back({stdout_.get(), POLLIN, 0});
        if (stderr_.open()) fds.push_back({stderr_.get(), POLLIN, 0});
        ::poll(fds.data(), fds.size(), 20);
        for (const auto& p : fds) {
          if (p.revents == 0) continue;
          progressed = true;
          if (p.fd == stdout_.get()) read_some(stdout_, stdout_buf_, &ignored);
          else read_some(stderr_, stderr_buf_, nullptr);
        }
      }
      if (!progressed) ::usleep(5000);
    }
    while (stderr_.open()) read_some(stderr_, stderr_buf_, nullptr);
    return describe(*status_);
  }

  void kill_now() {
    if (pid_ > 0 && !status_) {
      ::kill(pid_, SIGKILL);
      int st = 0;
      ::waitpid(pid_, &st, 0);
      status_ = st;
    }
  }

 private:
  static std::string describe(int st) {
    if (WIFEXITED(st)) return fmt::format("exited with status {}", WEXITSTATUS(st));
    if (WIFSIGNALED(st)) return fmt::format("killed by signal {}", WTERMSIG(st));
    return "ended";
  }

  void write_some() {
    while (has_pending()) {
      const ssize_t n = ::write(stdin_.get(), pending_.data() + written_, pending_.size() - written_);
      if (n > 0) {
        written_ += static_cast<std::size_t>(n);
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
      if (n < 0 && errno == EINTR) continue;
      // EPIPE: the child closed its stdin; whatever it answered still counts.
      written_ = pending_.size();
      stdin_.close();
      return;
    }
    if (close_after_drain_) stdin_.close();
  }

  void read_some(Fd& fd, std::string& buf, std::vector<std::string>* lines) {
    char chunk[65536];
    for (;;) {
      const ssize_t n = ::read(fd.get(), chunk, sizeof chunk);
      if (n > 0) {
        if (lines) {
          buf.append(chunk, static_cast<std::size_t>(n));
          std::size_t start = 0, nl;
          while ((nl = buf.find('\n', start)) != std::string::npos) {
            lines->push_back(buf.substr(start, nl - start));
            start = nl + 1;
          }
          buf.erase(0, start);
        } else if (buf.size() < kStderrCap) {
          buf.append(chunk, std::min(static_cast<std::size_t>(n), kStderrCap - buf.size()));
        }
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
      if (n < 0 && errno == EINTR) continue;
      if (lines && !buf.empty()) {
        lines->push_back(buf);  // final line without LF
        buf.clear();
      }
      fd.close();
      return;
    }
  }

  std::string metric_;
  pid_t pid_ = -1;
  std::optional<int> status_;
  Fd stdin_, stdout_, stderr_;
  std::string pending_;
  std::size_t written_ = 0;
  bool close_after_drain_ = false;
  std::string stdout_buf_, stderr_buf_;
};

std::string with_stderr(std::string message, const std::string& err) {
  if (!err.empty()) {
    std::string trimmed = err;
    while (!trimmed.empty() && (trimmed.back() == '\n' || trimmed.back() == '\r')) trimmed.pop_back();
    message += "; stderr: " + trimmed;
  }
  return message;
}

}  // namespace

void ExternalMetricConfig::validate() const {
  if (metric_name.empty()) throw ValidationError("external metric needs a name");
  if (MetricId::find_native(metric_name)) {
    throw ValidationError("external metric name \"" + metric_name + "\" collides with a native metric");
  }
  if (command.empty()) throw ValidationError("external metric \"" + metric_name + "\" needs a command");
  if (!(timeout_seconds > 0.0)) {
    throw ValidationError("external metric \"" + metric_name + "\": timeout must be positive");
  }
  if (batch_size == 0) throw ValidationError("external metric \"" + metric_name + "\": batch_size must be positive");
  if (!(scale.lo <= scale.hi)) throw ValidationError("external metric \"" + metric_name + "\": empty scale");
}

MetricId ExternalMetricConfig::metric_id() const { return MetricId::external(metric_name, polarity, scale); }

std::vector<double> score_batch_external(const ExternalMetricConfig& config, std::span<const BridgeItem> items) {
  config.validate();
  if (items.empty()) throw ValidationError("external metric \"" + config.metric_name + "\": no items to score");
  const std::string& name = config.metric_name;
  const int timeout_ms = static_cast<int>(std::min(config.timeout_seconds * 1000.0, 2.0e9));

  Sidecar child(config.command, name);
  std::string batch;
  for (std::size_t i = 0; i < items.size(); ++i) {
    json req = {{"id", i},
                {"src", config.needs_source ? items[i].src : std::string()},
                {"cand", items[i].cand},
                {"refs", config.needs_references ? items[i].refs : std::vector<std::string>{}}};
    batch += req.dump();
    batch += '\n';
    if ((i + 1) % config.batch_size == 0 || i + 1 == items.size()) {
      child.queue(std::move(batch));
      batch.clear();
    }
  }
  child.close_stdin_when_drained();

  std::vector<std::optional<double>> scores(items.size());
  std::size_t received = 0;
  std::vector<std::string> lines;
  auto last_progress = Clock::now();
  const auto fail = [&](const std::string& what) -> void {
    child.kill_now();
    throw ProtocolError(with_stderr(fmt::format("metric \"{}\": {}", name, what), child.captured_stderr()));
  };

  while (received < items.size()) {
    bool progressed = false;
    lines.clear();
    const bool alive = child.pump(lines, 50, progressed);
    if (progressed) last_progress = Clock::now();
    for (const auto& line : lines) {
      if (line.empty() || line == "\r") continue;
      json resp;
      try {
        resp = json::parse(line);
      } catch (const json::parse_error&) {
        fail("malformed response line: " + line.substr(0, 200));
      }
      if (!resp.is_object()) fail("response is not a JSON object: " + line.substr(0, 200));
      if (resp.contains("error")) {
        const std::string msg = resp["error"].is_string() ? resp["error"].get<std::string>() : resp["error"].dump();
        fail("scorer reported an error: " + msg);
      }
      if (!resp.contains("id") || !resp["id"].is_number_integer()) fail("response without integer id: " + line);
      if (!resp.contains("score") || !resp["score"].is_number()) {
        fail(fmt::format("response for id {} has no numeric score", resp["id"].dump()));
      }
      const auto id = resp["id"].get<long long>();
      if (id < 0 || static_cast<std::size_t>(id) >= items.size()) fail(fmt::format("unknown id {}", id));
      const double v = resp["score"].get<double>();
      if (!std::isfinite(v) || !config.scale.contains(v)) {
        fail(fmt::format("score {} for id {} is outside the declared scale [{}, {}]", v, id, config.scale.lo,
                         config.scale.hi));
      }
      auto& slot = scores[static_cast<std::size_t>(id)];
      if (slot) fail(fmt::format("duplicate response for id {}", id));
      slot = v;
      ++received;
    }
    if (received == items.size()) break;
    if (!alive) {
      const std::string how = child.finish(timeout_ms);
      std::size_t first_missing = 0;
      while (first_missing < scores.size() && scores[first_missing]) ++first_missing;
      throw ProtocolError(with_stderr(
          fmt::format("metric \"{}\": scorer {} after {} of {} responses; missing id {}", name, how, received,
                      items.size(), first_missing),
          child.captured_stderr()));
    }
    if (Clock::now() - last_progress > std::chrono::milliseconds(timeout_ms)) {
      fail(fmt::format("timed out after {} s without output ({} of {} responses)", config.timeout_seconds,
                       received, items.size()));
    }
  }
  child.finish(timeout_ms);

  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(*s);
  return out;
}

std::map<std::string, GroupScores> score_run_external(const ExternalMetricConfig& config, const RunSet& run,
                                                      const SourceSet& sources) {
  const MetricId metric = config.metric_id();
  std::vector<BridgeItem> items;
  std::vector<std::pair<const SourceSegment*, std::size_t>> spans;
  for (const auto& s : sources.segments()) {
    const CandidateGroup* g = run.find(s.id);
    if (!g || g->candidates.empty()) continue;
    if (config.needs_references && s.references.empty()) {
      throw ValidationError("metric \"" + metric.name + "\" needs references but source \"" + s.id +
                            "\" has none");
    }
    spans.emplace_back(&s, g->size());
    for (const auto& c : g->candidates) items.push_back({s.text, c, s.references});
  }
  std::map<std::string, GroupScores> out;
  if (items.empty()) return out;
  const std::vector<double> scores = score_batch_external(config, items);
  std::size_t at = 0;
  for (const auto& [seg, k] : spans) {
    GroupScores gs{metric, seg->id, {}};
    gs.per_candidate.assign(scores.begin() + static_cast<std::ptrdiff_t>(at),
                            scores.begin() + static_cast<std::ptrdiff_t>(at + k));
    at += k;
    out.emplace(seg->id, std::move(gs));
  }
  return out;
}

}  // namespace ndmt
