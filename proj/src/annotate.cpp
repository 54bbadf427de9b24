#include "hqm/annotate.hpp"

#include <fstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "hqm/error.hpp"
#include "hqm/parallelforms.hpp"

namespace hqm::annotate {

namespace {

json sample_payload(const Sample& s) {
  json p{{"sample_id", s.sample_id},
         {"image_ref", s.image_ref},
         {"instruction", render_prompt(s)},
         {"ground_truth", to_json(s.ground_truth)},
         {"ground_truth_text", ground_truth_text(s.ground_truth)}};
  if (s.image_facts) p["image_facts"] = *s.image_facts;
  if (s.dimension) p["dimension"] = to_string(*s.dimension);
  if (s.level) p["level"] = to_string(*s.level);
  return p;
}

std::string target_key(Queue q, const AnnotationTarget& t) {
  if (q == Queue::content_validity) return "cv:" + t.sample_id;
  return "cr:" + t.model_id.value_or("") + ":" + t.run_id.value_or("") + ":" + t.sample_id;
}

}  // namespace

std::vector<Task> content_tasks(const BenchmarkSpec& spec) {
  std::vector<Task> out;
  for (const auto& s : spec.samples) {
    Task t;
    t.queue = Queue::content_validity;
    t.target.sample_id = s.sample_id;
    t.task_id = target_key(t.queue, t.target);
    t.payload = sample_payload(s);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Task> criterion_tasks(const BenchmarkSpec& spec, const std::vector<ModelResponse>& responses) {
  std::map<std::string, const Sample*> samples;
  for (const auto& s : spec.samples) samples[s.sample_id] = &s;
  std::vector<Task> out;
  for (const auto& r : responses) {
    const auto it = samples.find(r.sample_id);
    if (it == samples.end()) continue;
    Task t;
    t.queue = Queue::criterion;
    t.target = {r.sample_id, r.model_id, r.run_id};
    t.task_id = target_key(t.queue, t.target);
    t.payload = sample_payload(*it->second);
    t.payload["model_id"] = r.model_id;
    t.payload["run_id"] = r.run_id;
    t.payload["response"] = r.text;
    out.push_back(std::move(t));
  }
  return out;
}

json to_json(const Lease& l) {
  return {{"task_id", l.task_id},
          {"queue", to_string(l.queue)},
          {"annotator_id", l.annotator_id},
          {"lease_expiry", format_rfc3339(l.expires_at_ms)},
          {"payload", l.payload}};
}

json to_json(const Progress& p) {
  return {{"total", p.total}, {"labeled", p.labeled}, {"leased", p.leased}, {"remaining", p.remaining}};
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

AnnotationStore::AnnotationStore(std::vector<Task> tasks, std::filesystem::path log_path, StoreOptions options,
                                 Clock clock)
    : tasks_(std::move(tasks)), log_path_(std::move(log_path)), options_(options), clock_(std::move(clock)) {
  if (options_.annotations_per_task == 0) throw Error(Errc::InvalidArgument, "annotations_per_task", "must be >= 1");
  if (options_.lease_ttl.count() <= 0) throw Error(Errc::InvalidArgument, "lease_ttl", "must be positive");
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (!index_.emplace(tasks_[i].task_id, i).second) {
      throw Error(Errc::InvalidArgument, tasks_[i].task_id, "duplicate task id");
    }
  }
  if (std::filesystem::exists(log_path_)) {
    const auto records = load_annotations(log_path_);
    records_ = records.size();
    labels_ = replay(tasks_, records);
    for (const auto& r : records) orphans_ += index_.count(target_key(r.queue, r.target)) == 0;
    if (orphans_) spdlog::warn("{}: {} records match no task", log_path_.string(), orphans_);
  }
}

LabelState AnnotationStore::replay(const std::vector<Task>& tasks, const std::vector<AnnotationRecord>& records) {
  std::set<std::string> known;
  for (const auto& t : tasks) known.insert(t.task_id);
  LabelState state;
  for (const auto& r : records) {
    const auto key = target_key(r.queue, r.target);
    if (known.count(key)) state[key].push_back(r.annotator_id);
  }
  return state;
}

std::int64_t AnnotationStore::now() const { return clock_(); }

bool AnnotationStore::labeled(const std::string& task_id) const {
  const auto it = labels_.find(task_id);
  return it != labels_.end() && it->second.size() >= options_.annotations_per_task;
}

bool AnnotationStore::lease_active(const std::string& task_id, std::int64_t t) const {
  const auto it = leases_.find(task_id);
  return it != leases_.end() && it->second.expires_at_ms > t;
}

std::optional<Lease> AnnotationStore::next_task(const std::string& annotator_id, Queue queue) {
  if (annotator_id.empty()) throw Error(Errc::InvalidArgument, "annotator", "empty annotator id");
  std::lock_guard lock(mu_);
  const auto t = now();
  const auto make = [&](const Task& task, std::int64_t expiry) {
    return Lease{task.task_id, task.queue, annotator_id, expiry, task.payload};
  };
  for (const auto& task : tasks_) {
    if (task.queue != queue || labeled(task.task_id)) continue;
    const auto it = leases_.find(task.task_id);
    if (it != leases_.end() && it->second.expires_at_ms > t && it->second.annotator_id == annotator_id) {
      return make(task, it->second.expires_at_ms);
    }
  }
  for (const auto& task : tasks_) {
    if (task.queue != queue || labeled(task.task_id) || lease_active(task.task_id, t)) continue;
    if (const auto l = labels_.find(task.task_id); l != labels_.end()) {
      if (std::find(l->second.begin(), l->second.end(), annotator_id) != l->second.end()) continue;
    }
    const auto expiry = t + options_.lease_ttl.count();
    leases_[task.task_id] = ActiveLease{annotator_id, expiry};
    return make(task, expiry);
  }
  return std::nullopt;
}

AnnotationRecord AnnotationStore::submit_label(const std::string& task_id, const std::string& annotator_id,
                                               Label label, const std::optional<std::string>& note) {
  std::lock_guard lock(mu_);
  const auto idx = index_.find(task_id);
  if (idx == index_.end()) throw Error(Errc::UnknownTask, task_id);
  const auto& task = tasks_[idx->second];
  if (!label_fits_queue(task.queue, label)) {
    throw Error(Errc::InvalidLabelForQueue, std::string(to_string(label)),
                "queue " + std::string(to_string(task.queue)));
  }
  const auto t = now();
  const auto lease = leases_.find(task_id);
  if (lease == leases_.end() || lease->second.annotator_id != annotator_id) {
    throw Error(Errc::LeaseNotHeld, task_id, "no lease held by " + annotator_id);
  }
  if (lease->second.expires_at_ms <= t) {
    leases_.erase(lease);
    throw Error(Errc::LeaseExpired, task_id);
  }

  AnnotationRecord rec;
  char id[32];
  std::snprintf(id, sizeof id, "ann-%06zu", records_ + 1);
  rec.annotation_id = id;
  rec.annotator_id = annotator_id;
  rec.queue = task.queue;
  rec.target = task.target;
  rec.label = label;
  rec.note = note;
  rec.created_at = format_rfc3339(t);
  validate(rec);

  if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
  std::ofstream out(log_path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::Io, log_path_.string(), "cannot open annotation log");
  out << to_json(rec).dump() << '\n';
  out.flush();
  if (!out) throw Error(Errc::Io, log_path_.string(), "append failed");

  ++records_;
  labels_[task_id].push_back(annotator_id);
  leases_.erase(lease);
  return rec;
}

Progress AnnotationStore::progress(Queue queue) const {
  std::lock_guard lock(mu_);
  const auto t = now();
  Progress p;
  for (const auto& task : tasks_) {
    if (task.queue != queue) continue;
    ++p.total;
    if (labeled(task.task_id)) {
      ++p.labeled;
    } else if (lease_active(task.task_id, t)) {
      ++p.leased;
    }
  }
  p.remaining = p.total - p.labeled - p.leased;
  return p;
}

std::vector<Queue> AnnotationStore::queues() const { return {Queue::content_validity, Queue::criterion}; }

LabelState AnnotationStore::label_state() const {
  std::lock_guard lock(mu_);
  return labels_;
}

std::size_t AnnotationStore::record_count() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t AnnotationStore::orphan_records() const {
  std::lock_guard lock(mu_);
  return orphans_;
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownQueue:
    case Errc::SchemaViolation:
    case Errc::InvalidArgument:
      return 400;
    case Errc::UnknownTask:
      return 404;
    case Errc::LeaseNotHeld:
      return 409;
    case Errc::LeaseExpired:
      return 410;
    case Errc::InvalidLabelForQueue:
      return 422;
    default:
      return 500;
  }
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const Error& e) {
  reply(res, http_status(e.code()), {{"code", to_string(e.code())}, {"message", e.what()}});
}

Queue queue_param(const httplib::Request& req) {
  if (!req.has_param("queue")) throw Error(Errc::UnknownQueue, "", "missing queue parameter");
  const auto q = req.get_param_value("queue");
  try {
    return parse_queue(q);
  } catch (const Error&) {
    throw Error(Errc::UnknownQueue, q);
  }
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, e);
    } catch (const json::exception& e) {
      reply_error(res, Error(Errc::SchemaViolation, "body", e.what()));
    } catch (const std::exception& e) {
      reply(res, 500, {{"code", "Internal"}, {"message", e.what()}});
    }
  };
}

}  // namespace

void register_routes(httplib::Server& server, AnnotationStore& store,
                     const std::optional<std::filesystem::path>& static_dir) {
  server.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
               reply(res, 200, {{"status", "ok"}});
             }));

  server.Get("/api/queues", guarded([&store](const httplib::Request&, httplib::Response& res) {
               json queues = json::array();
               for (const auto q : store.queues()) {
                 queues.push_back({{"queue", to_string(q)}, {"progress", to_json(store.progress(q))}});
               }
               reply(res, 200, {{"queues", queues}});
             }));

  server.Get("/api/tasks/next", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               const auto queue = queue_param(req);
               const auto annotator = req.get_param_value("annotator");
               if (annotator.empty()) throw Error(Errc::InvalidArgument, "annotator", "missing annotator parameter");
               const auto lease = store.next_task(annotator, queue);
               reply(res, 200, {{"task", lease ? to_json(*lease) : json(nullptr)}});
             }));

  server.Post(R"(/api/tasks/([^/]+)/label)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
                const auto task_id = httplib::detail::decode_url(req.matches[1].str(), false);
                const auto body = json::parse(req.body);
                const auto annotator = body.at("annotator").get<std::string>();
                const auto label = parse_label(body.at("label").get<std::string>());
                std::optional<std::string> note;
                if (body.contains("note") && !body.at("note").is_null()) note = body.at("note").get<std::string>();
                const auto rec = store.submit_label(task_id, annotator, label, note);
                reply(res, 200, {{"ok", true}, {"record", to_json(rec)}});
              }));

  server.Get("/api/progress", guarded([&store](const httplib::Request& req, httplib::Response& res) {
               const auto queue = queue_param(req);
               auto body = to_json(store.progress(queue));
               body["queue"] = to_string(queue);
               reply(res, 200, body);
             }));

  if (static_dir) {
    if (!server.set_mount_point("/", static_dir->string())) {
      throw Error(Errc::Io, static_dir->string(), "static directory not found");
    }
  }
}

}  // namespace hqm::annotate
