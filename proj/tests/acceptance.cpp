// Acceptance run: one PASS/FAIL line per top-level criterion.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "voicearm/arm_service.hpp"

namespace {

using namespace voicearm;
namespace fs = std::filesystem;
using kinematics::kPi;

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Verdict ik_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> len(50.0, 200.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kCases = 100000;
  double worst_pos = 0.0;  // in units of (l1 + l2)
  double worst_sum = 0.0;
  int bad = 0;
  for (int i = 0; i < kCases; ++i) {
    const kinematics::ArmGeometry g{len(rng), len(rng)};
    const double rmin = std::sqrt(g.l1 * g.l1 + g.l2 * g.l2);
    const double r = rmin + unit(rng) * (g.l1 + g.l2 - rmin);
    const double ang = (unit(rng) * 2.0 - 1.0) * kPi;
    const kinematics::PlanarTarget t{r * std::cos(ang), r * std::sin(ang), 0.0};
    const auto res = kinematics::solve_ik(g, t);
    const auto p = kinematics::forward_planar(g, res.joints.theta2, res.joints.theta3);
    const double pos = std::max(std::fabs(p.a - t.a), std::fabs(p.b - t.b)) / (g.l1 + g.l2);
    const double sum =
        std::fabs(res.joints.theta2 + res.joints.theta3 + res.joints.theta4 - 2 * kPi);
    worst_pos = std::max(worst_pos, pos);
    worst_sum = std::max(worst_sum, sum);
    if (pos > 1e-9 || sum > 1e-9) ++bad;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {bad == 0 && secs < 5.0,
          "100000 targets, " + std::to_string(bad) + " outside tolerance, " +
              fmt("worst position %.3g*(l1+l2), worst angle-sum %.3g rad, %.2f s", worst_pos,
                  worst_sum, secs)};
}

Verdict pwm_endpoints() {
  const actuation::ServoChannel nominal;
  bool ok = actuation::angle_to_pulse(nominal, 0.0) == 1000 &&
            actuation::angle_to_pulse(nominal, kPi) == 2000 &&
            actuation::duty_cycle(actuation::kPeriodUs, actuation::kPeriodUs) == 1.0;
  double worst = 0.0;
  const auto profile = actuation::CalibrationProfile::standard();
  for (const auto& ch : profile.channels()) {
    for (bool inverted : {false, true}) {
      auto c = ch;
      c.inverted = inverted;
      constexpr int kSteps = 200000;
      for (int i = 0; i <= kSteps; ++i) {
        const double a = c.min_angle + (c.max_angle - c.min_angle) * i / kSteps;
        worst = std::max(worst, std::fabs(actuation::pulse_to_angle(c, actuation::angle_to_pulse(c, a)) - a));
      }
    }
  }
  ok = ok && worst <= kPi / 1000;
  return {ok, fmt("0 rad->1000 us, pi->2000 us, duty(T)=1.0; worst round-trip %.6g rad (limit %.6g)",
                  worst, kPi / 1000)};
}

Verdict wire_codecs() {
  std::mt19937 rng(4242);
  std::uniform_int_distribution<int> width(wire::kMinWidthUs, wire::kMaxWidthUs);
  std::uniform_int_distribution<int> tms(0, wire::kMaxMoveTimeMs);
  constexpr int kCases = 10000;
  int frame_bad = 0;
  for (int i = 0; i < kCases; ++i) {
    std::vector<int> chans{0, 1, 2, 3, 4, 5};
    std::shuffle(chans.begin(), chans.end(), rng);
    chans.resize(1 + rng() % 6);
    std::sort(chans.begin(), chans.end());
    wire::WireFrame f;
    for (int c : chans) f.groups.push_back({c, width(rng)});
    if (rng() % 2) f.move_time_ms = tms(rng);
    if (wire::decode_frame(wire::encode_frame(f)) != f) ++frame_bad;
  }
  int uart_bad = 0;
  for (int i = 0; i < kCases; ++i) {
    std::vector<std::uint8_t> bytes(rng() % 48);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    const auto res = wire::uart_decode(wire::uart_encode(bytes));
    if (res.bytes != bytes || !res.framing_errors.empty()) ++uart_bad;
  }

  // Every cell of the voltage-level table: RS-232 band -> logic level, and
  // the MAX232 conversion both ways.
  struct Row {
    wire::LineType line;
    double lo, hi;
    int level;
    double ttl;
  };
  const Row rows[] = {{wire::LineType::Data, 3, 15, 0, 0.0},
                      {wire::LineType::Data, -15, -3, 1, 5.0},
                      {wire::LineType::Control, -15, -3, 0, 5.0},
                      {wire::LineType::Control, 3, 15, 1, 0.0}};
  int table_ok = 0;
  int table_total = 0;
  for (const auto& r : rows) {
    for (double v : {r.lo, (r.lo + r.hi) / 2, r.hi}) {
      ++table_total;
      if (wire::rs232_classify({r.line, v}) == r.level) ++table_ok;
    }
    const double rs = wire::max232_transform(r.level, wire::Direction::TtlToRs232, r.line);
    ++table_total;
    if (std::fabs(rs) >= 3 && std::fabs(rs) <= 15 && (rs > 0) == (r.lo > 0)) ++table_ok;
    ++table_total;
    if (wire::max232_transform(r.level, wire::Direction::Rs232ToTtl, r.line) == r.ttl) ++table_ok;
  }
  int probes_ok = 0;
  for (double v : {0.0, 20.0, -20.0}) {
    try {
      wire::rs232_classify({wire::LineType::Data, v});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::UndefinedRegion) ++probes_ok;
    }
  }
  const bool ok = frame_bad == 0 && uart_bad == 0 && table_ok == table_total && probes_ok == 3;
  std::ostringstream os;
  os << "frames " << kCases - frame_bad << "/" << kCases << ", uart " << kCases - uart_bad << "/"
     << kCases << ", voltage table " << table_ok << "/" << table_total
     << " cells, undefined-region probes " << probes_ok << "/3";
  return {ok, os.str()};
}

plant::PlantBank mid_plants(const actuation::CalibrationProfile& profile) {
  auto plants = plant::make_plants(profile);
  for (auto& p : plants) p.position = actuation::pulse_to_angle(p.channel, 1500);
  return plants;
}

Verdict plant_physics() {
  const auto profile = actuation::CalibrationProfile::standard();
  // 90 degree step on the base
  plant::Controller c;
  auto plants = mid_plants(profile);
  plants[0].position = 0.0;
  plant::SimClock clock;
  const auto step = plant::run_until_settled(c, plants, clock, 100);
  const std::size_t step_ticks = step.samples.size();

  // random multi-channel moves, checked tick by tick
  const double reach = plant::kDefaultSlewRadPerSec * plant::kTickUs * 1e-6;
  double worst = 0.0;
  auto random_run = [&](std::uint32_t seed) {
    std::mt19937 rng(seed);
    plant::Controller ctl;
    auto bank = mid_plants(profile);
    plant::SimClock clk;
    std::string csv;
    for (int move = 0; move < 20; ++move) {
      std::string frame;
      for (int ch = 0; ch < 6; ++ch) {
        frame += "#" + std::to_string(ch) + "P" + std::to_string(1000 + rng() % 1001);
      }
      frame += "T" + std::to_string(rng() % 1500) + "\r";
      ctl.feed(frame);
      auto prev = plant::joints_from_plants(bank);
      const auto traj = plant::run_until_settled(ctl, bank, clk, 1000);
      for (const auto& s : traj.samples) {
        for (auto j : actuation::kAllJoints) {
          worst = std::max(worst, std::fabs(actuation::joint_value(s.joints, j) -
                                            actuation::joint_value(prev, j)));
        }
        prev = s.joints;
      }
      csv += plant::trajectory_csv(traj.samples);
    }
    return csv;
  };
  bool identical = true;
  for (std::uint32_t seed = 1; seed <= 20; ++seed) identical = identical && random_run(seed) == random_run(seed);
  const bool ok = step_ticks == 16 && step.samples.back().joints.theta1 == kPi / 2 &&
                  worst <= reach + 1e-12 && identical;
  return {ok, "90 deg step settled in " + std::to_string(step_ticks) + " ticks (expect 16); " +
                  fmt("worst per-tick motion %.6f rad (limit %.6f); ", worst, reach) +
                  (identical ? "repeat runs byte-identical" : "repeat runs differ")};
}

Verdict recognition_robustness() {
  const auto dict =
      persistence::load_dictionary(std::string(VOICEARM_DATA_DIR) + "/dictionary.json");
  std::size_t recovered = 0;
  std::size_t total = 0;
  double worst_seed = 1.0;
  for (std::uint32_t seed = 1; seed <= 100; ++seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> letter('a', 'z');
    std::size_t seed_ok = 0;
    for (const auto& t : dict.templates()) {
      std::vector<std::string> toks = t.tokens;
      for (auto i : t.slots) toks[i] = std::to_string(rng() % 90);
      std::vector<std::pair<std::size_t, std::size_t>> letters;
      for (std::size_t i = 0; i < toks.size(); ++i) {
        if (std::find(t.slots.begin(), t.slots.end(), i) != t.slots.end()) continue;
        for (std::size_t k = 0; k < toks[i].size(); ++k) letters.emplace_back(i, k);
      }
      const auto [ti, ci] = letters[rng() % letters.size()];
      char c;
      do {
        c = static_cast<char>(letter(rng));
      } while (c == toks[ti][ci]);
      toks[ti][ci] = c;
      std::string text;
      for (const auto& tok : toks) text += (text.empty() ? "" : " ") + tok;
      try {
        const auto m = grammar::match_command(dict, text);
        if (m.intent.kind == t.entry.intent) ++seed_ok;
      } catch (const Error&) {
      }
    }
    recovered += seed_ok;
    total += dict.size();
    worst_seed = std::min(worst_seed, double(seed_ok) / dict.size());
  }
  const double rate = double(recovered) / total;
  return {dict.size() >= 100 && rate >= 0.90,
          std::to_string(dict.size()) + " phrases x 100 seeds, intent recovery " +
              fmt("%.4f (need >= 0.90), worst seed %.4f", rate, worst_seed)};
}

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

std::string arm_cmd(const std::string& args) {
  return quote(VOICEARM_ARM_EXE) + " --config " + quote(std::string(VOICEARM_DATA_DIR) + "/config.json") +
         " " + args + " >/dev/null 2>&1";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict end_to_end() {
  const fs::path work = fs::absolute("acceptance_work");
  fs::remove_all(work);
  fs::create_directories(work);
  std::ostringstream os;
  bool ok = true;

  // move: exit 0, final FK within 2 mm
  const int move_exit = run(arm_cmd("exec 'move to 100 100 0' --trace-dir " + quote((work / "move").string())));
  std::istringstream csv(slurp(work / "move" / "cmd_1_trajectory.csv"));
  std::string line;
  std::string last;
  while (std::getline(csv, line)) {
    if (!line.empty()) last = line;
  }
  double err = 1e9;
  if (!last.empty() && last.rfind("tick", 0) != 0) {
    std::vector<double> cols;
    std::istringstream ls(last);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(std::stod(cell));
    kinematics::JointState q{cols[2], cols[3], cols[4], cols[5], cols[6], cols[7]};
    const auto p = kinematics::forward_xyz({100, 100}, q);
    err = std::sqrt((p.x - 100) * (p.x - 100) + (p.y - 100) * (p.y - 100) + p.z * p.z);
  }
  ok = ok && move_exit == 0 && err <= 2.0;
  os << "move exit " << move_exit << fmt(", final FK error %.4f mm; ", err);

  const int junk_exit = run(arm_cmd("exec xyzzy --trace-dir " + quote((work / "junk").string())));
  ok = ok && junk_exit == 2;
  os << "xyzzy exit " << junk_exit << "; ";

  int stable = 0;
  int golden = 0;
  const std::vector<std::string> cmds{"grip", "dance", "turn left 30"};
  for (const auto& cmd : cmds) {
    std::string slug = cmd;
    std::replace(slug.begin(), slug.end(), ' ', '_');
    const fs::path a = work / ("a_" + slug);
    const fs::path b = work / ("b_" + slug);
    run(arm_cmd("trace --out " + quote(a.string()) + " " + quote(cmd)));
    run(arm_cmd("trace --out " + quote(b.string()) + " " + quote(cmd)));
    bool same = true;
    bool gold = true;
    for (const char* f : {"cmd_1_frames.txt", "cmd_1_trajectory.csv"}) {
      const std::string x = slurp(a / f);
      same = same && !x.empty() && x == slurp(b / f);
      gold = gold && x == slurp(fs::path(VOICEARM_GOLDEN_DIR) / slug / f);
    }
    stable += same;
    golden += gold;
  }
  ok = ok && stable == 3 && golden == 3;
  os << "golden traces stable " << stable << "/3, matching checked-in " << golden << "/3";
  if (ok) fs::remove_all(work);
  return {ok, os.str()};
}

}  // namespace

int main() {
  report("IK correctness", ik_correctness);
  report("PWM endpoints", pwm_endpoints);
  report("Wire codecs", wire_codecs);
  report("Plant physics", plant_physics);
  report("Recognition robustness", recognition_robustness);
  report("End-to-end", end_to_end);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
