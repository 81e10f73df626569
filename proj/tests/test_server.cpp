#include <chrono>
#include <future>
#include <thread>

#include <boost/asio/connect.hpp>
#include <gtest/gtest.h>

#include "httplib.h"
#include "voicearm/server.hpp"

namespace {

using namespace voicearm;
using voicearm::json_util::json;
namespace websocket = boost::beast::websocket;

service::Session default_session() {
  return service::load_session(
      persistence::load_config(std::string(VOICEARM_DATA_DIR) + "/config.json"));
}

class ServerTest : public ::testing::Test {
 protected:
  void start(bool realtime = false) {
    svc_ = std::make_unique<service::ArmService>(default_session());
    server::ServerOptions opts;
    opts.port = 0;
    opts.realtime = realtime;
    server_ = std::make_unique<server::ArmServer>(*svc_, opts);
    server_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", server_->port());
    client_->set_read_timeout(60, 0);
  }

  void SetUp() override { start(); }

  void TearDown() override {
    client_.reset();
    server_.reset();
    svc_.reset();
  }

  json post_command(const std::string& text) {
    auto res = client_->Post("/api/command", json{{"text", text}}.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    return json::parse(res->body);
  }

  std::unique_ptr<service::ArmService> svc_;
  std::unique_ptr<server::ArmServer> server_;
  std::unique_ptr<httplib::Client> client_;
};

// Minimal blocking WebSocket client for /api/stream.
class StreamClient {
 public:
  explicit StreamClient(unsigned short port) : ws_(ioc_) {
    boost::asio::ip::tcp::resolver resolver(ioc_);
    boost::asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/api/stream");
  }

  json read() {
    boost::beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(boost::beast::buffers_to_string(buf.data()));
  }

  void send(const json& j) { ws_.write(boost::asio::buffer(j.dump())); }

  void close() { ws_.close(websocket::close_code::normal); }

 private:
  boost::asio::io_context ioc_;
  websocket::stream<boost::asio::ip::tcp::socket> ws_;
};

TEST_F(ServerTest, PostCommand) {
  const auto j = post_command("grip");
  EXPECT_EQ(j["response"], "Gripping.");
  EXPECT_EQ(j["settled"], true);
  EXPECT_EQ(j["intent"]["kind"], "Grip");
  EXPECT_EQ(j["match"]["confidence"], 1.0);
  const auto bad = post_command("xyzzy");
  EXPECT_EQ(bad["response"], "Command not recognized.");
  EXPECT_EQ(bad["error"]["code"], "NotRecognized");
}

TEST_F(ServerTest, PostCommandRejectsBadBodies) {
  auto res = client_->Post("/api/command", "{\"txt\": 1}", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = client_->Post("/api/command", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(json::parse(res->body)["error"]["code"], "SchemaError");
}

TEST_F(ServerTest, StateReportsJointsAndRegisters) {
  post_command("turn left 30");
  auto res = client_->Get("/api/state");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  const auto j = json::parse(res->body);
  ASSERT_EQ(j["joints"].size(), 6u);
  ASSERT_EQ(j["registers"].size(), 6u);
  EXPECT_EQ(j["registers"][0], 1667);
  EXPECT_NEAR(j["joints"][0].get<double>(), 2 * kinematics::kPi / 3, kinematics::kPi / 1000);
  EXPECT_NEAR(j["duty"][1].get<double>(), 0.075, 1e-12);
  EXPECT_TRUE(j["active_command"].is_null());
}

TEST_F(ServerTest, ConfigAndMethodChecks) {
  auto res = client_->Get("/api/config");
  ASSERT_TRUE(res);
  const auto j = json::parse(res->body);
  EXPECT_EQ(j["geometry"]["l1"], 100.0);
  EXPECT_EQ(j["calibration"]["channels"].size(), 6u);
  EXPECT_EQ(j["period_us"], 20000);

  res = client_->Get("/api/command");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 405);
  res = client_->Get("/api/nothing");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
}

TEST_F(ServerTest, PutCalibration) {
  auto doc = persistence::profile_to_json(actuation::CalibrationProfile::standard());
  doc["channels"][2]["inverted"] = true;
  auto res = client_->Put("/api/calibration", doc.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_TRUE(svc_->profile().channels()[2].inverted);

  doc["channels"][4]["max_angle"] = 1.0;
  res = client_->Put("/api/calibration", doc.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(json::parse(res->body)["error"]["code"], "ScriptValidationError");

  res = client_->Put("/api/calibration", "{\"channels\": 3}", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_TRUE(svc_->profile().channels()[2].inverted);
}

TEST_F(ServerTest, TraceEndpoint) {
  const auto o = post_command("grip");
  auto res = client_->Get("/api/trace/" + o["trace_id"].get<std::string>());
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto t = json::parse(res->body);
  const auto local = svc_->trace(o["id"].get<std::uint64_t>());
  EXPECT_EQ(t["frames"].size(), local->frames.size());
  EXPECT_EQ(t["trajectory_csv"], local->trajectory_csv());

  res = client_->Get("/api/trace/999");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = client_->Get("/api/trace/abc");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServerTest, StreamCarriesEveryTickThenOutcome) {
  StreamClient ws(server_->port());
  const auto hello = ws.read();
  EXPECT_EQ(hello["type"], "tick");
  EXPECT_EQ(hello["joints"].size(), 6u);

  ws.send({{"text", "grip"}});
  std::vector<json> ticks;
  json outcome;
  for (;;) {
    auto m = ws.read();
    if (m["type"] == "outcome") {
      outcome = m;
      break;
    }
    ticks.push_back(m);
  }
  EXPECT_EQ(outcome["response"], "Gripping.");
  const auto id = outcome["id"].get<std::uint64_t>();
  const auto trace = svc_->trace(id);
  ASSERT_EQ(ticks.size(), trace->samples.size());
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    EXPECT_EQ(ticks[i]["active_command"], id);
    EXPECT_EQ(ticks[i]["elapsed_ms"], trace->samples[i].elapsed_us / 1000);
    EXPECT_EQ(ticks[i]["registers"][5], trace->samples[i].widths[5]);
  }

  ws.send({{"nope", 1}});
  EXPECT_EQ(ws.read()["type"], "error");
  ws.close();
}

TEST_F(ServerTest, CommandsQueueAndNeverInterleave) {
  // Paced run so the second command surely arrives while the first is moving.
  TearDown();
  start(true);
  StreamClient ws(server_->port());
  ws.read();

  auto dance = std::async(std::launch::async, [&] {
    httplib::Client c("127.0.0.1", server_->port());
    c.set_read_timeout(60, 0);
    auto r = c.Post("/api/command", R"({"text": "dance"})", "application/json");
    return json::parse(r->body);
  });
  // first tick of the dance
  json first = ws.read();
  ASSERT_EQ(first["type"], "tick");
  const auto dance_id = first["active_command"];
  ASSERT_FALSE(dance_id.is_null());

  auto grip = std::async(std::launch::async, [&] {
    httplib::Client c("127.0.0.1", server_->port());
    c.set_read_timeout(60, 0);
    auto r = c.Post("/api/command", R"({"text": "grip"})", "application/json");
    return json::parse(r->body);
  });
  const auto d = dance.get();
  const auto g = grip.get();
  EXPECT_EQ(d["id"], dance_id);
  EXPECT_EQ(d["settled"], true);
  EXPECT_EQ(g["settled"], true);
  EXPECT_GT(g["id"].get<std::uint64_t>(), d["id"].get<std::uint64_t>());

  const auto td = svc_->trace(d["id"].get<std::uint64_t>());
  const auto tg = svc_->trace(g["id"].get<std::uint64_t>());
  EXPECT_LT(td->samples.back().tick, tg->samples.front().tick);

  // the stream shows the whole dance before any grip tick
  std::size_t seen = 1;
  const std::size_t total = td->samples.size() + tg->samples.size();
  bool grip_started = false;
  while (seen < total) {
    auto m = ws.read();
    if (m["type"] != "tick") continue;
    ++seen;
    if (m["active_command"] == g["id"]) grip_started = true;
    if (m["active_command"] == dance_id) {
      EXPECT_FALSE(grip_started);
    }
  }
  ws.close();
}

}  // namespace
