#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hqm/datamodel.hpp"
#include "hqm/error.hpp"

namespace httplib {
class Server;
}

namespace hqm::annotate {

struct Task {
  std::string task_id;
  Queue queue = Queue::content_validity;
  AnnotationTarget target;
  json payload;  // shown to the annotator verbatim
};

/// "cv:<sample_id>" tasks carrying image_ref, instruction and ground truth.
std::vector<Task> content_tasks(const BenchmarkSpec& spec);
/// "cr:<model_id>:<run_id>:<sample_id>" tasks that add the response text.
/// Responses for samples outside `spec` are skipped.
std::vector<Task> criterion_tasks(const BenchmarkSpec& spec, const std::vector<ModelResponse>& responses);

struct Lease {
  std::string task_id;
  Queue queue = Queue::content_validity;
  std::string annotator_id;
  std::int64_t expires_at_ms = 0;
  json payload;
};

json to_json(const Lease& l);

struct Progress {
  std::size_t total = 0;
  std::size_t labeled = 0;
  std::size_t leased = 0;
  std::size_t remaining = 0;

  bool operator==(const Progress&) const = default;
};

json to_json(const Progress& p);

/// Labeled state derived from annotation records: task_id -> annotators in
/// log order.
using LabelState = std::map<std::string, std::vector<std::string>>;

struct StoreOptions {
  std::chrono::milliseconds lease_ttl = std::chrono::minutes(10);
  std::size_t annotations_per_task = 1;
};

/// Task queues with leases, persisted as an append-only AnnotationRecord
/// JSONL log. The log is replayed on construction; leases live in memory
/// only. All methods are thread-safe.
class AnnotationStore {
 public:
  using Clock = std::function<std::int64_t()>;  // unix milliseconds

  AnnotationStore(std::vector<Task> tasks, std::filesystem::path log_path, StoreOptions options = {},
                  Clock clock = {});

  /// Oldest task that is unlabeled, not actively leased by someone else and
  /// not yet labeled by this annotator. An annotator's existing active lease
  /// in the queue is returned again.
  std::optional<Lease> next_task(const std::string& annotator_id, Queue queue);

  /// UnknownTask, InvalidLabelForQueue, LeaseExpired (own lease ran out),
  /// LeaseNotHeld. Appends and returns the record.
  AnnotationRecord submit_label(const std::string& task_id, const std::string& annotator_id, Label label,
                                const std::optional<std::string>& note = std::nullopt);

  Progress progress(Queue queue) const;
  std::vector<Queue> queues() const;
  LabelState label_state() const;
  std::size_t record_count() const;
  /// Records in the log that match no known task.
  std::size_t orphan_records() const;
  const std::filesystem::path& log_path() const { return log_path_; }

  /// What a fresh store would derive from `records`.
  static LabelState replay(const std::vector<Task>& tasks, const std::vector<AnnotationRecord>& records);

 private:
  struct ActiveLease {
    std::string annotator_id;
    std::int64_t expires_at_ms = 0;
  };

  bool labeled(const std::string& task_id) const;
  bool lease_active(const std::string& task_id, std::int64_t now) const;
  std::int64_t now() const;

  std::vector<Task> tasks_;
  std::map<std::string, std::size_t> index_;
  std::filesystem::path log_path_;
  StoreOptions options_;
  Clock clock_;

  mutable std::mutex mu_;
  LabelState labels_;
  std::map<std::string, ActiveLease> leases_;
  std::size_t records_ = 0;
  std::size_t orphans_ = 0;
};

/// Registers the HTTP API on `server`:
///   GET  /api/queues
///   GET  /api/tasks/next?annotator=ID&queue=Q
///   POST /api/tasks/{id}/label   {"annotator", "label", "note"?}
///   GET  /api/progress?queue=Q
///   GET  /api/health
/// and serves `static_dir` under / when given. Errors are {"code",
/// "message"} with a matching status.
void register_routes(httplib::Server& server, AnnotationStore& store,
                     const std::optional<std::filesystem::path>& static_dir = std::nullopt);

/// HTTP status for an error code.
int http_status(Errc code) noexcept;

}  // namespace hqm::annotate
