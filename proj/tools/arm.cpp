// arm: command-line front end for the simulated voice-command arm.
//
//   arm exec "<command>"            run one command; exit 0 settled,
//                                   2 not recognized, 3 out of reach
//   arm repl                        interactive transcript on stdin/stdout
//   arm trace --out <dir> [cmd...]  run commands, write trace files
//   arm serve --port <n>            HTTP + WebSocket service
//   arm validate                    check config, dictionary, scripts, profile
//
// The config path is --config, else $ARM_CONFIG, else the bundled default.

#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <boost/asio/signal_set.hpp>

#include "CLI11.hpp"
#include "voicearm/arm_service.hpp"
#include "voicearm/persistence.hpp"
#include "voicearm/server.hpp"

namespace {

using voicearm::Error;
using voicearm::ErrorCode;
namespace service = voicearm::service;

constexpr int kExitSettled = 0;
constexpr int kExitFailed = 1;
constexpr int kExitNotRecognized = 2;
constexpr int kExitUnreachable = 3;
constexpr int kExitConfig = 4;

std::string resolve_config(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ARM_CONFIG"); env && *env) return env;
  return VOICEARM_DEFAULT_CONFIG;
}

service::Session open_session(const std::string& config_path,
                              const std::optional<std::string>& trace_dir) {
  auto cfg = voicearm::persistence::load_config(config_path);
  auto session = service::load_session(cfg);
  if (trace_dir && !trace_dir->empty()) session.trace_dir = *trace_dir;
  return session;
}

int exit_code_for(const service::CommandOutcome& o) {
  if (!o.error) return o.settled ? kExitSettled : kExitFailed;
  switch (*o.error) {
    case ErrorCode::NotRecognized: return kExitNotRecognized;
    case ErrorCode::Unreachable:
    case ErrorCode::UnreachableStep:
    case ErrorCode::AngleOutOfRange:
    case ErrorCode::DegenerateTarget: return kExitUnreachable;
    default: return kExitFailed;
  }
}

int run_exec(const std::string& config, const std::string& command, const std::string& trace_dir,
             bool as_json) {
  service::ArmService svc(open_session(config, trace_dir));
  const auto outcome = svc.process_command(command);
  if (as_json) {
    std::cout << service::to_json(outcome).dump(2) << "\n";
  } else {
    std::cout << outcome.response << "\n";
    if (outcome.error) std::cerr << outcome.error_message << "\n";
  }
  return exit_code_for(outcome);
}

int run_repl(const std::string& config, const std::string& trace_dir) {
  service::ArmService svc(open_session(config, trace_dir));
  const bool interactive = isatty(STDIN_FILENO) != 0;
  std::string line;
  for (;;) {
    if (interactive) std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (line == "quit" || line == "exit") break;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto outcome = svc.process_command(line);
    std::cout << outcome.response << "\n";
  }
  return kExitSettled;
}

int run_trace(const std::string& config, const std::string& out_dir,
              std::vector<std::string> commands) {
  if (commands.empty()) {
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) commands.push_back(line);
    }
  }
  service::ArmService svc(open_session(config, out_dir));
  std::string transcript;
  for (const auto& c : commands) {
    const auto outcome = svc.process_command(c);
    transcript += "> " + c + "\n" + outcome.response + "\n";
    std::cout << "cmd_" << outcome.id << ": " << outcome.response << "\n";
  }
  voicearm::json_util::write_file((std::filesystem::path(out_dir) / "transcript.txt").string(),
                                  transcript);
  return kExitSettled;
}

int run_serve(const std::string& config, const std::string& address, int port, bool realtime,
              const std::string& trace_dir) {
  service::ArmService svc(open_session(config, trace_dir));
  voicearm::server::ServerOptions opts;
  opts.address = address;
  opts.port = static_cast<unsigned short>(port);
  opts.realtime = realtime;
  voicearm::server::ArmServer server(svc, opts);
  server.start();
  std::cout << "listening on http://" << address << ":" << server.port() << std::endl;
  boost::asio::io_context signals_ioc;
  boost::asio::signal_set signals(signals_ioc, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) { server.stop(); });
  signals_ioc.run();
  return kExitSettled;
}

int run_validate(const std::string& config) {
  const auto cfg = voicearm::persistence::load_config(config);
  const auto session = service::load_session(cfg);
  std::cout << "config:      " << config << "\n"
            << "geometry:    l1=" << cfg.geometry.l1 << " mm, l2=" << cfg.geometry.l2 << " mm\n"
            << "calibration: " << session.profile.channels().size() << " channels OK\n"
            << "dictionary:  " << session.dictionary->size() << " phrases OK\n"
            << "scripts:     " << session.scripts.size() << " scripts OK\n";
  return kExitSettled;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voice-command robotic arm simulator"};
  app.require_subcommand(1);
  std::string config;
  app.add_option("-c,--config", config, "Session config JSON (default: $ARM_CONFIG or bundled)");

  auto* exec = app.add_subcommand("exec", "Run one command");
  std::string command;
  std::string exec_trace = "arm_traces";
  bool as_json = false;
  exec->add_option("command", command, "Command text")->required();
  exec->add_option("--trace-dir", exec_trace, "Directory for trace files");
  exec->add_flag("--json", as_json, "Print the full outcome as JSON");

  auto* repl = app.add_subcommand("repl", "Interactive session");
  std::string repl_trace = "arm_traces";
  repl->add_option("--trace-dir", repl_trace, "Directory for trace files");

  auto* trace = app.add_subcommand("trace", "Run commands and write trace files");
  std::string out_dir;
  std::vector<std::string> commands;
  trace->add_option("--out", out_dir, "Output directory")->required();
  trace->add_option("commands", commands, "Commands (default: one per line on stdin)");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP/WebSocket API");
  int port = 8080;
  std::string address = "127.0.0.1";
  bool realtime = false;
  std::string serve_trace;
  serve->add_option("-c,--config", config, "Session config JSON");
  serve->add_option("-p,--port", port, "TCP port (0 = any free port)")->check(CLI::Range(0, 65535));
  serve->add_option("--address", address, "Bind address");
  serve->add_flag("--realtime", realtime, "Pace simulation at one tick per 20 ms");
  serve->add_option("--trace-dir", serve_trace, "Directory for trace files");

  auto* validate = app.add_subcommand("validate", "Check configuration files");

  CLI11_PARSE(app, argc, argv);

  const std::string cfg_path = resolve_config(config);
  try {
    if (*exec) return run_exec(cfg_path, command, exec_trace, as_json);
    if (*repl) return run_repl(cfg_path, repl_trace);
    if (*trace) return run_trace(cfg_path, out_dir, commands);
    if (*serve) return run_serve(cfg_path, address, port, realtime, serve_trace);
    if (*validate) return run_validate(cfg_path);
  } catch (const Error& e) {
    std::cerr << "arm: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "arm: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitFailed;
}
