#include "pipadmm/cluster.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <limits>
#include <mutex>

#include <spdlog/spdlog.h>

#include "pipadmm/error.hpp"

static_assert(std::endian::native == std::endian::little, "the byte codec assumes a little-endian host");

namespace pipadmm::cluster {

bool operator==(const Broadcast& a, const Broadcast& b) { return a.iter == b.iter && a.x == b.x; }
bool operator==(const Stop& a, const Stop& b) { return a.reason == b.reason; }
bool operator==(const EtaReport& a, const EtaReport& b) { return a.shard == b.shard && a.eta == b.eta; }
bool operator==(const XiReport& a, const XiReport& b) {
  return a.shard == b.shard && a.iter == b.iter && a.xi == b.xi && a.aux == b.aux;
}
bool operator==(const Fault& a, const Fault& b) { return a.shard == b.shard && a.description == b.description; }

// ---------------------------------------------------------------------------
// Codec
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kHeaderBytes = 8 + 1 + 4 + 4 + 8;

class Writer {
 public:
  explicit Writer(Tag tag, std::uint32_t shard, std::uint32_t iter) {
    put(std::uint64_t{0});  // patched in finish()
    bytes_.push_back(static_cast<std::uint8_t>(tag));
    put(shard);
    put(iter);
  }
  template <typename T>
  void put(T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    bytes_.insert(bytes_.end(), raw, raw + sizeof(T));
  }
  void doubles(std::span<const double> v) {
    put(static_cast<std::uint64_t>(v.size()));
    for (double d : v) put(d);
  }
  void text(const std::string& s) {
    put(static_cast<std::uint64_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> finish() {
    const std::uint64_t len = bytes_.size() - 8;
    std::memcpy(bytes_.data(), &len, 8);
    return std::move(bytes_);
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t count, const char* what) const {
    if (bytes_.size() - pos_ < count) {
      throw DecodeError(std::string("truncated message: ") + what + " needs " + std::to_string(count) +
                            " bytes, " + std::to_string(bytes_.size() - pos_) + " available",
                        pos_);
    }
  }
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::vector<double> doubles(const char* what) {
    const std::size_t at = pos_;
    const auto count = get<std::uint64_t>("payload length");
    if (count > (std::numeric_limits<std::size_t>::max() / 8) || count * 8 > bytes_.size() - pos_) {
      if (count <= std::numeric_limits<std::size_t>::max() / 8) need(static_cast<std::size_t>(count) * 8, what);
      throw DecodeError("payload length overflow", at);
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    for (auto& d : out) d = get<double>(what);
    return out;
  }
  std::string text(const char* what) {
    const std::size_t at = pos_;
    const auto count = get<std::uint64_t>("payload length");
    if (count > bytes_.size() - pos_) {
      if (count < (std::uint64_t{1} << 32)) need(static_cast<std::size_t>(count), what);
      throw DecodeError("payload length overflow", at);
    }
    std::string out(reinterpret_cast<const char*>(bytes_.data() + pos_), static_cast<std::size_t>(count));
    pos_ += static_cast<std::size_t>(count);
    return out;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Header {
  Tag tag;
  std::uint32_t shard;
  std::uint32_t iter;
};

Header read_header(Reader& in) {
  const auto frame = in.get<std::uint64_t>("frame length");
  if (frame != in.size() - 8) {
    if (frame > in.size() - 8) {
      throw DecodeError("truncated message: frame declares " + std::to_string(frame) + " bytes, " +
                            std::to_string(in.size() - 8) + " available",
                        0);
    }
    throw DecodeError("frame length " + std::to_string(frame) + " does not match buffer", 0);
  }
  const std::size_t tag_at = in.pos();
  const auto raw = in.get<std::uint8_t>("kind tag");
  if (raw < 1 || raw > 5) throw DecodeError("unknown kind tag " + std::to_string(raw), tag_at);
  Header h{static_cast<Tag>(raw), 0, 0};
  h.shard = in.get<std::uint32_t>("shard index");
  h.iter = in.get<std::uint32_t>("iteration");
  return h;
}

void expect_end(const Reader& in) {
  if (in.pos() != in.size()) throw DecodeError("trailing bytes after payload", in.pos());
}

}  // namespace

std::vector<std::uint8_t> encode_message(const MasterMessage& msg) {
  return std::visit(
      [](const auto& m) -> std::vector<std::uint8_t> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Broadcast>) {
          Writer w(Tag::kBroadcast, 0, static_cast<std::uint32_t>(m.iter));
          w.doubles(m.x);
          return w.finish();
        } else {
          Writer w(Tag::kStop, 0, 0);
          w.text(m.reason);
          return w.finish();
        }
      },
      msg);
}

std::vector<std::uint8_t> encode_message(const WorkerMessage& msg) {
  return std::visit(
      [](const auto& m) -> std::vector<std::uint8_t> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, EtaReport>) {
          Writer w(Tag::kEta, static_cast<std::uint32_t>(m.shard), 0);
          const double v[1] = {m.eta};
          w.doubles(v);
          return w.finish();
        } else if constexpr (std::is_same_v<T, XiReport>) {
          Writer w(Tag::kXi, static_cast<std::uint32_t>(m.shard), static_cast<std::uint32_t>(m.iter));
          w.doubles(m.xi);
          w.doubles(m.aux);
          return w.finish();
        } else {
          Writer w(Tag::kFault, static_cast<std::uint32_t>(m.shard), 0);
          w.text(m.description);
          return w.finish();
        }
      },
      msg);
}

MasterMessage decode_master_message(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  const Header h = read_header(in);
  switch (h.tag) {
    case Tag::kBroadcast: {
      Broadcast b{static_cast<int>(h.iter), in.doubles("broadcast payload")};
      expect_end(in);
      return b;
    }
    case Tag::kStop: {
      Stop s{in.text("stop reason")};
      expect_end(in);
      return s;
    }
    default:
      throw DecodeError("worker message tag in a master-to-worker frame", 8);
  }
}

WorkerMessage decode_worker_message(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  const Header h = read_header(in);
  const int shard = static_cast<int>(h.shard);
  switch (h.tag) {
    case Tag::kEta: {
      const std::size_t at = in.pos();
      const auto v = in.doubles("eta payload");
      if (v.size() != 1) throw DecodeError("eta payload must hold exactly one value", at);
      expect_end(in);
      return EtaReport{shard, v[0]};
    }
    case Tag::kXi: {
      XiReport r{shard, static_cast<int>(h.iter), in.doubles("xi payload"), {}};
      r.aux = in.doubles("xi diagnostics");
      expect_end(in);
      return r;
    }
    case Tag::kFault: {
      Fault f{shard, in.text("fault description")};
      expect_end(in);
      return f;
    }
    default:
      throw DecodeError("master message tag in a worker-to-master frame", 8);
  }
}

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

namespace {

class TransportClosed : public Error {
 public:
  TransportClosed() : Error("transport closed") {}
};

template <typename T>
class Mailbox {
 public:
  void push(T value) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(value));
    }
    cv_.notify_one();
  }
  // Blocks until a value arrives; throws TransportClosed once closed and drained.
  T pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) throw TransportClosed();
    T v = std::move(queue_.front());
    queue_.pop_front();
    return v;
  }
  std::optional<T> pop_for(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; })) return std::nullopt;
    if (queue_.empty()) throw TransportClosed();
    T v = std::move(queue_.front());
    queue_.pop_front();
    return v;
  }
  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> queue_;
  bool closed_ = false;
};

class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(int workers) : to_workers_(static_cast<std::size_t>(workers)) {}
  int size() const override { return static_cast<int>(to_workers_.size()); }
  void send_to_worker(int shard, MasterMessage msg) override { slot(shard).push(std::move(msg)); }
  MasterMessage receive_at_worker(int shard) override { return slot(shard).pop(); }
  void send_to_master(WorkerMessage msg) override { to_master_.push(std::move(msg)); }
  std::optional<WorkerMessage> receive_at_master(std::chrono::milliseconds timeout) override {
    return to_master_.pop_for(timeout);
  }
  void close() override {
    for (auto& m : to_workers_) m.close();
    to_master_.close();
  }

 private:
  Mailbox<MasterMessage>& slot(int shard) {
    if (shard < 1 || shard > size()) throw ArgumentError("transport: no worker with shard index " + std::to_string(shard));
    return to_workers_[static_cast<std::size_t>(shard - 1)];
  }
  std::vector<Mailbox<MasterMessage>> to_workers_;
  Mailbox<WorkerMessage> to_master_;
};

void write_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportClosed();
    }
    done += static_cast<std::size_t>(n);
  }
}

// Reads exactly `count` bytes; false on orderly EOF before the first byte.
bool read_exact(int fd, std::uint8_t* out, std::size_t count) {
  std::size_t done = 0;
  while (done < count) {
    const ssize_t n = ::recv(fd, out + done, count - done, 0);
    if (n == 0) {
      if (done == 0) return false;
      throw DecodeError("socket closed mid-frame", done);
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    done += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::vector<std::uint8_t>> read_frame(int fd) {
  std::vector<std::uint8_t> frame(8);
  if (!read_exact(fd, frame.data(), 8)) return std::nullopt;
  std::uint64_t len = 0;
  std::memcpy(&len, frame.data(), 8);
  if (len > (std::uint64_t{1} << 40)) throw DecodeError("frame length overflow", 0);
  frame.resize(8 + static_cast<std::size_t>(len));
  if (!read_exact(fd, frame.data() + 8, static_cast<std::size_t>(len))) return std::nullopt;
  return frame;
}

class SocketTransport final : public Transport {
 public:
  explicit SocketTransport(int workers) {
    for (int d = 0; d < workers; ++d) {
      int fds[2];
      if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
        teardown();
        throw ClusterError(std::string("socketpair failed: ") + std::strerror(errno), d + 1);
      }
      master_fds_.push_back(fds[0]);
      worker_fds_.push_back(fds[1]);
    }
    for (int d = 0; d < workers; ++d) {
      readers_.emplace_back([this, d] {
        try {
          while (auto frame = read_frame(master_fds_[static_cast<std::size_t>(d)])) {
            inbox_.push(decode_worker_message(*frame));
          }
        } catch (const std::exception& e) {
          inbox_.push(Fault{d + 1, std::string("socket transport: ") + e.what()});
        }
      });
    }
  }
  ~SocketTransport() override { teardown(); }

  int size() const override { return static_cast<int>(master_fds_.size()); }
  void send_to_worker(int shard, MasterMessage msg) override {
    write_all(master_fds_.at(index(shard)), encode_message(msg));
  }
  MasterMessage receive_at_worker(int shard) override {
    auto frame = read_frame(worker_fds_.at(index(shard)));
    if (!frame) throw TransportClosed();
    return decode_master_message(*frame);
  }
  void send_to_master(WorkerMessage msg) override {
    const int shard = std::visit([](const auto& m) { return m.shard; }, msg);
    write_all(worker_fds_.at(index(shard)), encode_message(msg));
  }
  std::optional<WorkerMessage> receive_at_master(std::chrono::milliseconds timeout) override {
    return inbox_.pop_for(timeout);
  }
  void close() override {
    std::lock_guard lock(close_mutex_);
    if (closed_) return;
    closed_ = true;
    for (int fd : master_fds_) ::shutdown(fd, SHUT_RDWR);
    for (int fd : worker_fds_) ::shutdown(fd, SHUT_RDWR);
    inbox_.close();
  }

 private:
  std::size_t index(int shard) const {
    if (shard < 1 || shard > size()) throw ArgumentError("transport: no worker with shard index " + std::to_string(shard));
    return static_cast<std::size_t>(shard - 1);
  }
  void teardown() {
    close();
    for (auto& t : readers_) {
      if (t.joinable()) t.join();
    }
    readers_.clear();
    for (int fd : master_fds_) ::close(fd);
    for (int fd : worker_fds_) ::close(fd);
    master_fds_.clear();
    worker_fds_.clear();
  }

  std::vector<int> master_fds_;
  std::vector<int> worker_fds_;
  std::vector<std::thread> readers_;
  Mailbox<WorkerMessage> inbox_;
  std::mutex close_mutex_;
  bool closed_ = false;
};

}  // namespace

std::unique_ptr<Transport> make_in_process_transport(int workers) {
  return std::make_unique<InProcessTransport>(workers);
}

std::unique_ptr<Transport> make_socket_transport(int workers) { return std::make_unique<SocketTransport>(workers); }

void CountingTransport::send_to_worker(int shard, MasterMessage msg) {
  {
    std::lock_guard lock(mutex_);
    counters_.bytes_down += encode_message(msg).size();
    if (const auto* b = std::get_if<Broadcast>(&msg)) {
      ++counters_.broadcasts;
      counters_.broadcast_doubles += b->x.size();
    } else {
      ++counters_.stops;
    }
  }
  inner_->send_to_worker(shard, std::move(msg));
}

void CountingTransport::send_to_master(WorkerMessage msg) {
  {
    std::lock_guard lock(mutex_);
    counters_.bytes_up += encode_message(msg).size();
    if (std::holds_alternative<EtaReport>(msg)) {
      ++counters_.eta_reports;
    } else if (const auto* x = std::get_if<XiReport>(&msg)) {
      ++counters_.xi_reports;
      counters_.xi_doubles += x->xi.size();
    } else {
      ++counters_.faults;
    }
  }
  inner_->send_to_master(std::move(msg));
}

TransportCounters CountingTransport::counters() const {
  std::lock_guard lock(mutex_);
  return counters_;
}

// ---------------------------------------------------------------------------
// Executor
// ---------------------------------------------------------------------------

namespace {

void worker_main(Transport& transport, const DesignShard& shard, const WorkerFactory& factory) {
  const int id = shard.index;
  try {
    auto program = factory(shard);
    transport.send_to_master(EtaReport{id, program->precompute()});
    for (;;) {
      MasterMessage msg = transport.receive_at_worker(id);
      if (std::holds_alternative<Stop>(msg)) return;
      const auto& b = std::get<Broadcast>(msg);
      XiReport report = program->step(b.iter, b.x);
      report.shard = id;
      report.iter = b.iter;
      transport.send_to_master(std::move(report));
    }
  } catch (const TransportClosed&) {
    return;
  } catch (const std::exception& e) {
    try {
      transport.send_to_master(Fault{id, e.what()});
    } catch (...) {
    }
  }
}

}  // namespace

Executor::Executor(std::unique_ptr<Transport> transport, CountingTransport* counting, const ClusterOptions& options)
    : transport_(std::move(transport)), counting_(counting), options_(options) {}

Executor::~Executor() {
  if (!stopped_) {
    try {
      stop("executor destroyed");
    } catch (...) {
    }
  }
  transport_->close();
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
}

std::unique_ptr<Executor> spawn_cluster(std::span<const DesignShard> shards, WorkerFactory factory,
                                        const ClusterOptions& options) {
  if (shards.empty()) throw ArgumentError("spawn_cluster: at least one shard is required");
  for (std::size_t i = 0; i < shards.size(); ++i) {
    if (shards[i].index != static_cast<int>(i) + 1) {
      throw ArgumentError("spawn_cluster: shard " + std::to_string(i) + " has index " +
                          std::to_string(shards[i].index) + ", expected " + std::to_string(i + 1));
    }
  }
  const int workers = static_cast<int>(shards.size());
  std::unique_ptr<Transport> transport = options.transport == TransportKind::kSocket
                                             ? make_socket_transport(workers)
                                             : make_in_process_transport(workers);
  CountingTransport* counting = nullptr;
  if (options.count_traffic) {
    auto wrapped = std::make_unique<CountingTransport>(std::move(transport));
    counting = wrapped.get();
    transport = std::move(wrapped);
  }
  std::unique_ptr<Executor> exec(new Executor(std::move(transport), counting, options));
  auto shared_factory = std::make_shared<WorkerFactory>(std::move(factory));
  try {
    for (const auto& shard : shards) {
      exec->shard_ids_.push_back(shard.index);
      exec->workers_.emplace_back(
          [t = exec->transport_.get(), &shard, shared_factory] { worker_main(*t, shard, *shared_factory); });
    }
  } catch (const std::system_error& e) {
    // Destroying the executor stops and joins whatever did start.
    exec.reset();
    throw ClusterError(std::string("spawn_cluster: could not start worker: ") + e.what(), 0);
  }
  return exec;
}

void Executor::fail(const ClusterError& error) {
  stopped_ = true;
  transport_->close();
  throw error;
}

std::vector<double> Executor::collect_eta() {
  if (eta_collected_) throw ArgumentError("collect_eta: eta reports were already collected");
  std::vector<double> eta(workers_.size(), 0.0);
  std::vector<char> seen(workers_.size(), 0);
  std::size_t pending = workers_.size();
  while (pending > 0) {
    auto msg = transport_->receive_at_master(options_.epoch_timeout);
    if (!msg) fail(ClusterError("timed out waiting for eta reports", 0));
    if (const auto* f = std::get_if<Fault>(&*msg)) {
      fail(ClusterError("worker " + std::to_string(f->shard) + " failed: " + f->description, f->shard));
    }
    const auto* e = std::get_if<EtaReport>(&*msg);
    if (e == nullptr || e->shard < 1 || e->shard > size() || seen[static_cast<std::size_t>(e->shard - 1)]) {
      fail(ClusterError("protocol violation while collecting eta reports", 0));
    }
    seen[static_cast<std::size_t>(e->shard - 1)] = 1;
    eta[static_cast<std::size_t>(e->shard - 1)] = e->eta;
    --pending;
  }
  eta_collected_ = true;
  return eta;
}

std::vector<XiReport> Executor::epoch(int iter, std::span<const double> x) {
  if (!eta_collected_) throw ArgumentError("epoch: collect_eta must run first");
  if (stopped_) throw ArgumentError("epoch: executor already stopped");
  for (int id : shard_ids_) transport_->send_to_worker(id, Broadcast{iter, std::vector<double>(x.begin(), x.end())});

  std::vector<std::optional<XiReport>> slots(workers_.size());
  std::size_t pending = workers_.size();
  const auto deadline = std::chrono::steady_clock::now() + options_.epoch_timeout;
  while (pending > 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    auto msg = left.count() > 0 ? transport_->receive_at_master(left) : std::nullopt;
    if (!msg) fail(ClusterError("epoch " + std::to_string(iter) + ": timed out waiting for workers", 0));
    if (const auto* f = std::get_if<Fault>(&*msg)) {
      fail(ClusterError("worker " + std::to_string(f->shard) + " failed: " + f->description, f->shard));
    }
    auto* xi = std::get_if<XiReport>(&*msg);
    if (xi == nullptr || xi->iter != iter || xi->shard < 1 || xi->shard > size() ||
        slots[static_cast<std::size_t>(xi->shard - 1)]) {
      fail(ClusterError("epoch " + std::to_string(iter) + ": protocol violation", xi ? xi->shard : 0));
    }
    slots[static_cast<std::size_t>(xi->shard - 1)] = std::move(*xi);
    --pending;
  }
  std::vector<XiReport> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void Executor::stop(const std::string& reason) {
  if (stopped_) return;
  stopped_ = true;
  for (int id : shard_ids_) {
    try {
      transport_->send_to_worker(id, Stop{reason});
    } catch (const std::exception& e) {
      spdlog::debug("stop: could not reach worker {}: {}", id, e.what());
    }
  }
}

std::optional<TransportCounters> Executor::counters() const {
  if (counting_ == nullptr) return std::nullopt;
  return counting_->counters();
}

}  // namespace pipadmm::cluster
