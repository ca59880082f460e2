#ifndef PIPADMM_CLUSTER_HPP_
#define PIPADMM_CLUSTER_HPP_

// Master/worker execution harness. One worker thread per shard; the master
// broadcasts x, every worker answers with its xi, and the master waits for all
// D answers before moving on (a full barrier per epoch). Workers and master talk
// only through a Transport, either in-process mailboxes or the byte codec over
// local stream sockets.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pipadmm/core_types.hpp"
#include "pipadmm/error.hpp"

namespace pipadmm::cluster {

// --- Messages ---------------------------------------------------------------

struct Broadcast {
  int iter = 0;
  std::vector<double> x;
};
struct Stop {
  std::string reason;
};
using MasterMessage = std::variant<Broadcast, Stop>;

struct EtaReport {
  int shard = 0;
  double eta = 0.0;
};
//! A worker's answer to one broadcast. `aux` carries per-shard diagnostics the
//! master needs for stopping and tracing (norms of the local r/u changes, local
//! loss) and is empty for workers that report nothing beyond xi.
struct XiReport {
  int shard = 0;
  int iter = 0;
  std::vector<double> xi;
  std::vector<double> aux;
};
struct Fault {
  int shard = 0;
  std::string description;
};
using WorkerMessage = std::variant<EtaReport, XiReport, Fault>;

bool operator==(const Broadcast& a, const Broadcast& b);
bool operator==(const Stop& a, const Stop& b);
bool operator==(const EtaReport& a, const EtaReport& b);
bool operator==(const XiReport& a, const XiReport& b);
bool operator==(const Fault& a, const Fault& b);

// --- Byte codec -------------------------------------------------------------
//
// Frame layout, all integers little-endian:
//   u64 frame length (bytes after this field)
//   u8  kind tag
//   u32 shard index
//   u32 iteration
//   u64 payload length
//   payload: IEEE-754 doubles (Broadcast x, Eta value, Xi vector) or raw bytes (Stop, Fault text)
//   Xi frames append a second u64 length and that many doubles for `aux`.

enum class Tag : std::uint8_t { kBroadcast = 1, kStop = 2, kEta = 3, kXi = 4, kFault = 5 };

std::vector<std::uint8_t> encode_message(const MasterMessage& msg);
std::vector<std::uint8_t> encode_message(const WorkerMessage& msg);
//! Throws DecodeError (with byte offset) on truncation, unknown tags, length overflow, or a worker tag.
MasterMessage decode_master_message(std::span<const std::uint8_t> bytes);
WorkerMessage decode_worker_message(std::span<const std::uint8_t> bytes);

// --- Transport --------------------------------------------------------------

class Transport {
 public:
  virtual ~Transport() = default;
  //! Number of worker endpoints.
  virtual int size() const = 0;
  virtual void send_to_worker(int shard, MasterMessage msg) = 0;
  //! Blocks until a message for `shard` is available.
  virtual MasterMessage receive_at_worker(int shard) = 0;
  virtual void send_to_master(WorkerMessage msg) = 0;
  //! Returns nullopt on timeout.
  virtual std::optional<WorkerMessage> receive_at_master(std::chrono::milliseconds timeout) = 0;
  //! Unblocks all receivers; later receives fail.
  virtual void close() = 0;
};

//! In-process mailboxes; messages move by value.
std::unique_ptr<Transport> make_in_process_transport(int workers);
//! One AF_UNIX stream socket pair per worker, frames encoded with the byte codec.
std::unique_ptr<Transport> make_socket_transport(int workers);

struct TransportCounters {
  std::size_t broadcasts = 0;
  std::size_t broadcast_doubles = 0;
  std::size_t eta_reports = 0;
  std::size_t xi_reports = 0;
  std::size_t xi_doubles = 0;
  std::size_t faults = 0;
  std::size_t stops = 0;
  std::size_t bytes_down = 0;  //!< Encoded size of master->worker traffic.
  std::size_t bytes_up = 0;    //!< Encoded size of worker->master traffic.
};

//! Decorator that counts traffic by kind before forwarding to `inner`.
class CountingTransport final : public Transport {
 public:
  explicit CountingTransport(std::unique_ptr<Transport> inner) : inner_(std::move(inner)) {}
  int size() const override { return inner_->size(); }
  void send_to_worker(int shard, MasterMessage msg) override;
  MasterMessage receive_at_worker(int shard) override { return inner_->receive_at_worker(shard); }
  void send_to_master(WorkerMessage msg) override;
  std::optional<WorkerMessage> receive_at_master(std::chrono::milliseconds timeout) override {
    return inner_->receive_at_master(timeout);
  }
  void close() override { inner_->close(); }
  TransportCounters counters() const;

 private:
  std::unique_ptr<Transport> inner_;
  mutable std::mutex mutex_;
  TransportCounters counters_;
};

// --- Workers and executor ---------------------------------------------------

//! The code one worker runs. Constructed on the worker's own thread.
class WorkerProgram {
 public:
  virtual ~WorkerProgram() = default;
  //! Runs once at startup; its result is sent to the master as the worker's Eta report.
  virtual double precompute() = 0;
  //! Handles one broadcast. Iteration 0 carries the initial x.
  virtual XiReport step(int iter, std::span<const double> x) = 0;
};

using WorkerFactory = std::function<std::unique_ptr<WorkerProgram>(const DesignShard&)>;

enum class TransportKind { kInProcess, kSocket };

struct ClusterOptions {
  TransportKind transport = TransportKind::kInProcess;
  std::chrono::milliseconds epoch_timeout{std::chrono::seconds(300)};
  //! Wrap the transport in a CountingTransport.
  bool count_traffic = false;
};

class Executor {
 public:
  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;
  Executor(Executor&&) = delete;
  Executor& operator=(Executor&&) = delete;
  //! Sends Stop to every worker that is still running and joins all threads.
  ~Executor();

  int size() const noexcept { return static_cast<int>(workers_.size()); }

  //! Waits for the single Eta report of every worker; result is ordered by shard index.
  //! Must be called once, before the first epoch.
  std::vector<double> collect_eta();

  //! Broadcasts x for `iter`, waits for all D Xi reports of that iteration and returns them
  //! in ascending shard order. Throws ClusterError on a Fault or a timeout.
  std::vector<XiReport> epoch(int iter, std::span<const double> x);

  void stop(const std::string& reason);
  //! Traffic counters, or nullopt when the executor was built without counting.
  std::optional<TransportCounters> counters() const;

 private:
  friend std::unique_ptr<Executor> spawn_cluster(std::span<const DesignShard>, WorkerFactory, const ClusterOptions&);
  Executor(std::unique_ptr<Transport> transport, CountingTransport* counting, const ClusterOptions& options);
  [[noreturn]] void fail(const ClusterError& error);

  std::unique_ptr<Transport> transport_;
  CountingTransport* counting_ = nullptr;
  ClusterOptions options_;
  std::vector<std::thread> workers_;
  std::vector<int> shard_ids_;
  bool eta_collected_ = false;
  bool stopped_ = false;
};

//! Starts one worker per shard. Shards must outlive the executor. On thread creation
//! failure all started workers are torn down and ClusterError is thrown.
std::unique_ptr<Executor> spawn_cluster(std::span<const DesignShard> shards, WorkerFactory factory,
                                        const ClusterOptions& options = {});

}  // namespace pipadmm::cluster

#endif  // PIPADMM_CLUSTER_HPP_
