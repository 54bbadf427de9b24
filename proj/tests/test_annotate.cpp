#include <gtest/gtest.h>

#include <httplib.h>

#include <random>
#include <thread>

#include "hqm/annotate.hpp"
#include "hqm/quality.hpp"
#include "test_util.hpp"

using namespace hqm;
using namespace hqm::annotate;
using hqm::testing::code_of;
using hqm::testing::fixture;
using hqm::testing::TempDir;

namespace {

struct FakeClock {
  std::int64_t now = 1'700'000'000'000;
  AnnotationStore::Clock fn() {
    return [this] { return now; };
  }
};

std::vector<Task> fixture_tasks() {
  const auto spec = load_benchmark(fixture("quality/benchmark.jsonl"));
  auto tasks = content_tasks(spec);
  auto responses = load_responses(fixture("quality/responses/acq-7b.original.jsonl"));
  const auto more = load_responses(fixture("quality/responses/dis-7b.original.jsonl"));
  responses.insert(responses.end(), more.begin(), more.end());
  const auto cr = criterion_tasks(spec, responses);
  tasks.insert(tasks.end(), cr.begin(), cr.end());
  return tasks;
}

StoreOptions ttl(std::chrono::milliseconds t, std::size_t per_task = 1) {
  StoreOptions o;
  o.lease_ttl = t;
  o.annotations_per_task = per_task;
  return o;
}

void expect_conserved(const AnnotationStore& store) {
  for (const auto q : {Queue::content_validity, Queue::criterion}) {
    const auto p = store.progress(q);
    ASSERT_EQ(p.labeled + p.leased + p.remaining, p.total) << to_string(q);
  }
}

}  // namespace

TEST(Tasks, Construction) {
  const auto tasks = fixture_tasks();
  ASSERT_EQ(tasks.size(), 120u);
  EXPECT_EQ(tasks[0].task_id, "cv:q01");
  EXPECT_EQ(tasks[0].queue, Queue::content_validity);
  EXPECT_TRUE(tasks[0].payload.contains("instruction"));
  const auto& cr = tasks[40];
  EXPECT_EQ(cr.queue, Queue::criterion);
  EXPECT_TRUE(cr.task_id.starts_with("cr:acq-7b:"));
  EXPECT_EQ(cr.target.model_id, "acq-7b");
  EXPECT_TRUE(cr.payload.contains("response"));
}

TEST(Store, LeasesAreExclusive) {
  TempDir dir;
  FakeClock clock;
  AnnotationStore store(fixture_tasks(), dir / "log.jsonl", ttl(std::chrono::minutes(10)), clock.fn());
  const auto a = store.next_task("alice", Queue::content_validity);
  const auto b = store.next_task("bob", Queue::content_validity);
  ASSERT_TRUE(a && b);
  EXPECT_NE(a->task_id, b->task_id);
  EXPECT_EQ(store.next_task("alice", Queue::content_validity)->task_id, a->task_id);
  EXPECT_EQ(code_of([&] { store.submit_label(a->task_id, "bob", Label::valid); }), Errc::LeaseNotHeld);
  const auto rec = store.submit_label(a->task_id, "alice", Label::valid, "looks fine");
  EXPECT_EQ(rec.annotation_id, "ann-000001");
  EXPECT_EQ(rec.target.sample_id, "q01");
  EXPECT_EQ(code_of([&] { store.submit_label(a->task_id, "alice", Label::valid); }), Errc::LeaseNotHeld);
  const auto p = store.progress(Queue::content_validity);
  EXPECT_EQ(p, (Progress{40, 1, 1, 38}));
}

TEST(Store, ExpiredLeasesAreReissued) {
  TempDir dir;
  FakeClock clock;
  AnnotationStore store(fixture_tasks(), dir / "log.jsonl", ttl(std::chrono::seconds(30)), clock.fn());
  const auto a = store.next_task("alice", Queue::criterion);
  ASSERT_TRUE(a);
  clock.now += 30'000;
  const auto b = store.next_task("bob", Queue::criterion);
  EXPECT_EQ(b->task_id, a->task_id);
  EXPECT_EQ(code_of([&] { store.submit_label(a->task_id, "alice", Label::clean); }), Errc::LeaseNotHeld);

  clock.now += 31'000;
  EXPECT_EQ(code_of([&] { store.submit_label(b->task_id, "bob", Label::clean); }), Errc::LeaseExpired);
  EXPECT_EQ(store.record_count(), 0u);
  EXPECT_EQ(store.progress(Queue::criterion).leased, 0u);
}

TEST(Store, Errors) {
  TempDir dir;
  FakeClock clock;
  AnnotationStore store(fixture_tasks(), dir / "log.jsonl", {}, clock.fn());
  EXPECT_EQ(code_of([&] { store.submit_label("cv:nope", "alice", Label::valid); }), Errc::UnknownTask);
  const auto a = store.next_task("alice", Queue::content_validity);
  EXPECT_EQ(code_of([&] { store.submit_label(a->task_id, "alice", Label::clean); }), Errc::InvalidLabelForQueue);
  EXPECT_EQ(code_of([&] { store.next_task("", Queue::criterion); }), Errc::InvalidArgument);
  EXPECT_EQ(http_status(Errc::UnknownTask), 404);
  EXPECT_EQ(http_status(Errc::LeaseNotHeld), 409);
  EXPECT_EQ(http_status(Errc::LeaseExpired), 410);
  EXPECT_EQ(http_status(Errc::InvalidLabelForQueue), 422);
  EXPECT_EQ(http_status(Errc::UnknownQueue), 400);
}

TEST(Store, MultipleAnnotationsPerTask) {
  TempDir dir;
  FakeClock clock;
  const std::vector<Task> one{content_tasks(load_benchmark(fixture("quality/benchmark.jsonl"))).at(0)};
  AnnotationStore store(one, dir / "log.jsonl", ttl(std::chrono::minutes(1), 2), clock.fn());
  auto l = store.next_task("alice", Queue::content_validity);
  store.submit_label(l->task_id, "alice", Label::valid);
  EXPECT_FALSE(store.next_task("alice", Queue::content_validity).has_value());
  l = store.next_task("bob", Queue::content_validity);
  ASSERT_TRUE(l);
  store.submit_label(l->task_id, "bob", Label::invalid);
  EXPECT_EQ(store.progress(Queue::content_validity), (Progress{1, 1, 0, 0}));
  EXPECT_FALSE(store.next_task("carol", Queue::content_validity).has_value());
}

TEST(Store, RandomOperationsReplayFromLog) {
  TempDir dir;
  FakeClock clock;
  const auto tasks = fixture_tasks();
  const auto log = dir / "log.jsonl";
  AnnotationStore live(tasks, log, ttl(std::chrono::seconds(60)), clock.fn());
  std::mt19937_64 g(2718);
  const std::vector<std::string> annotators{"ann-a", "ann-b", "ann-c", "ann-d"};
  std::map<std::string, std::string> held;  // annotator -> task id
  std::size_t submitted = 0, expired = 0, rejected = 0;

  for (int op = 0; op < 200; ++op) {
    const auto& who = annotators[g() % annotators.size()];
    const auto queue = g() % 2 ? Queue::content_validity : Queue::criterion;
    switch (g() % 4) {
      case 0:
      case 1:
        if (const auto l = live.next_task(who, queue)) held[who] = l->task_id;
        break;
      case 2: {
        const auto it = held.find(who);
        if (it == held.end()) break;
        const auto& task = tasks[static_cast<std::size_t>(std::find_if(tasks.begin(), tasks.end(), [&](const Task& t) {
                                                               return t.task_id == it->second;
                                                             }) - tasks.begin())];
        const auto label = task.queue == Queue::content_validity ? (g() % 2 ? Label::valid : Label::invalid)
                                                                 : (g() % 2 ? Label::clean : Label::hallucinated);
        try {
          live.submit_label(it->second, who, label);
          ++submitted;
        } catch (const Error& e) {
          ASSERT_TRUE(e.code() == Errc::LeaseExpired || e.code() == Errc::LeaseNotHeld) << e.what();
          ++rejected;
        }
        held.erase(it);
        break;
      }
      default:
        clock.now += static_cast<std::int64_t>(g() % 90'000);
        ++expired;
        break;
    }
    expect_conserved(live);
  }
  ASSERT_GT(submitted, 20u);
  ASSERT_GT(rejected, 0u);

  const auto records = load_annotations(log);
  EXPECT_EQ(records.size(), submitted);
  EXPECT_EQ(live.record_count(), submitted);
  EXPECT_EQ(AnnotationStore::replay(tasks, records), live.label_state());

  clock.now += 10 * 60'000;  // let every lease lapse so progress compares labeled state only
  AnnotationStore rebuilt(tasks, log, ttl(std::chrono::seconds(60)), clock.fn());
  EXPECT_EQ(rebuilt.label_state(), live.label_state());
  for (const auto q : {Queue::content_validity, Queue::criterion}) EXPECT_EQ(rebuilt.progress(q), live.progress(q));
  EXPECT_EQ(rebuilt.orphan_records(), 0u);

  std::set<std::string> ids;
  for (const auto& r : records) EXPECT_TRUE(ids.insert(r.annotation_id).second);
}

TEST(Store, OrphanRecordsAreCounted) {
  TempDir dir;
  FakeClock clock;
  const auto tasks = fixture_tasks();
  {
    AnnotationStore store(tasks, dir / "log.jsonl", {}, clock.fn());
    const auto l = store.next_task("alice", Queue::content_validity);
    store.submit_label(l->task_id, "alice", Label::valid);
  }
  const std::vector<Task> fewer(tasks.begin() + 1, tasks.end());
  AnnotationStore store(fewer, dir / "log.jsonl", {}, clock.fn());
  EXPECT_EQ(store.orphan_records(), 1u);
  EXPECT_EQ(store.progress(Queue::content_validity).labeled, 0u);
}

TEST(Store, LabelsFeedContentValidity) {
  TempDir dir;
  FakeClock clock;
  const auto spec = load_benchmark(fixture("quality/benchmark.jsonl"));
  AnnotationStore store(content_tasks(spec), dir / "log.jsonl", {}, clock.fn());
  std::vector<std::string> subset;
  for (int i = 0; i < 10; ++i) {
    const auto l = store.next_task("alice", Queue::content_validity);
    store.submit_label(l->task_id, "alice", i < 7 ? Label::valid : Label::invalid);
    subset.push_back(l->task_id.substr(3));
  }
  const auto cv = quality::content_validity(load_annotations(dir / "log.jsonl"), subset);
  EXPECT_EQ(cv.validity, 0.7);
}

class HttpApi : public ::testing::Test {
 protected:
  void SetUp() override {
    store_ = std::make_unique<AnnotationStore>(fixture_tasks(), dir_ / "log.jsonl", StoreOptions{}, clock_.fn());
    register_routes(server_, *store_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  json post_label(const std::string& task, const json& body, int expected_status) {
    const auto res = client_->Post("/api/tasks/" + httplib::detail::encode_url(task) + "/label", body.dump(),
                                   "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expected_status) << res->body;
    return json::parse(res->body);
  }

  json get(const std::string& path, int expected_status = 200) {
    const auto res = client_->Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expected_status) << res->body;
    return json::parse(res->body);
  }

  TempDir dir_;
  FakeClock clock_;
  std::unique_ptr<AnnotationStore> store_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpApi, HealthAndQueues) {
  EXPECT_EQ(get("/api/health")["status"], "ok");
  const auto q = get("/api/queues")["queues"];
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0]["queue"], "content_validity");
  EXPECT_EQ(q[0]["progress"]["total"], 40);
  EXPECT_EQ(q[1]["progress"]["total"], 80);
}

TEST_F(HttpApi, LabelRoundTrip) {
  const auto lease = get("/api/tasks/next?annotator=alice&queue=criterion")["task"];
  ASSERT_TRUE(lease.is_object());
  EXPECT_TRUE(lease.contains("lease_expiry"));
  EXPECT_TRUE(lease["payload"].contains("response"));
  const std::string task = lease["task_id"];

  post_label(task, {{"annotator", "bob"}, {"label", "clean"}}, 409);
  EXPECT_EQ(post_label(task, {{"annotator", "alice"}, {"label", "valid"}}, 422)["code"], "InvalidLabelForQueue");
  post_label(task, {{"annotator", "alice"}, {"label", "bogus"}}, 400);
  post_label(task, {{"annotator", "alice"}}, 400);
  const auto ok = post_label(task, {{"annotator", "alice"}, {"label", "hallucinated"}, {"note", "extra dog"}}, 200);
  EXPECT_EQ(ok["record"]["label"], "hallucinated");
  EXPECT_EQ(ok["record"]["note"], "extra dog");
  post_label("cr:nobody:x:y", {{"annotator", "alice"}, {"label", "clean"}}, 404);

  const auto p = get("/api/progress?queue=criterion");
  EXPECT_EQ(p["labeled"], 1);
  EXPECT_EQ(p["remaining"], 79);
  const auto records = load_annotations(dir_ / "log.jsonl");
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].target.model_id, "acq-7b");
}

TEST_F(HttpApi, ExpiredLeaseIsGone) {
  const auto lease = get("/api/tasks/next?annotator=alice&queue=content_validity")["task"];
  clock_.now += 11 * 60'000;
  EXPECT_EQ(post_label(lease["task_id"], {{"annotator", "alice"}, {"label", "valid"}}, 410)["code"], "LeaseExpired");
}

TEST_F(HttpApi, BadQueriesAndEmptyQueue) {
  EXPECT_EQ(get("/api/tasks/next?annotator=alice&queue=nope", 400)["code"], "UnknownQueue");
  get("/api/tasks/next?queue=criterion", 400);
  get("/api/progress", 400);

  TempDir dir;
  AnnotationStore empty({}, dir / "log.jsonl");
  httplib::Server server;
  register_routes(server, empty);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client c("127.0.0.1", port);
  const auto res = c.Get("/api/tasks/next?annotator=a&queue=criterion");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_TRUE(json::parse(res->body)["task"].is_null());
  server.stop();
  t.join();
}
