#include <cmath>

#include <gtest/gtest.h>

#include "voicearm/choreography.hpp"

namespace {

using namespace voicearm;
using namespace voicearm::choreo;
using grammar::Intent;
using grammar::IntentKind;
using kinematics::kPi;

const kinematics::ArmGeometry kGeom{100, 100};

const ScriptLibrary& shipped() {
  static const auto profile = actuation::CalibrationProfile::standard();
  static const ScriptLibrary lib =
      load_scripts(std::string(VOICEARM_DATA_DIR) + "/scripts.json", kGeom, &profile);
  return lib;
}

JointState home_pose() { return {kPi / 2, kPi / 2, kPi / 2, kPi, kPi / 2, kPi / 2}; }

Intent turn(grammar::TurnDirection d, double deg) {
  return {IntentKind::Turn, grammar::TurnParams{d, deg}};
}

TEST(ExpandIntent, TurnLeftIncreasesAzimuth) {
  JointState q = home_pose();
  q.theta1 = 0.0;
  const auto goals = expand_intent(turn(grammar::TurnDirection::Left, 30), q, shipped(), kGeom);
  ASSERT_EQ(goals.size(), 1u);
  EXPECT_NEAR(goals[0].joints.theta1, kPi / 6, 1e-15);
  JointState expected = q;
  expected.theta1 = goals[0].joints.theta1;
  EXPECT_EQ(goals[0].joints, expected);
  EXPECT_EQ(goals[0].kind, GoalKind::Move);
}

TEST(ExpandIntent, TurnRightDecreasesAzimuthAndStopsAtTravel) {
  const auto goals =
      expand_intent(turn(grammar::TurnDirection::Right, 45), home_pose(), shipped(), kGeom);
  EXPECT_NEAR(goals[0].joints.theta1, kPi / 4, 1e-15);
  try {
    expand_intent(turn(grammar::TurnDirection::Right, 100), home_pose(), shipped(), kGeom);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnreachableStep);
  }
  EXPECT_NO_THROW(expand_intent(turn(grammar::TurnDirection::Left, 90), home_pose(), shipped(), kGeom));
}

TEST(ExpandIntent, GripReleaseHold) {
  const JointState q = home_pose();
  auto goals = expand_intent({IntentKind::Grip, {}}, q, shipped(), kGeom);
  ASSERT_EQ(goals.size(), 1u);
  EXPECT_EQ(goals[0].joints.gripper, 0.0);
  EXPECT_EQ(goals[0].joints.theta1, q.theta1);
  EXPECT_EQ(goals[0].joints.theta4, q.theta4);

  goals = expand_intent({IntentKind::Release, {}}, goals[0].joints, shipped(), kGeom);
  ASSERT_EQ(goals.size(), 1u);
  EXPECT_EQ(goals[0].joints.gripper, kPi / 2);

  goals = expand_intent({IntentKind::Hold, {}}, q, shipped(), kGeom);
  ASSERT_EQ(goals.size(), 2u);
  EXPECT_EQ(goals[0].kind, GoalKind::Move);
  EXPECT_EQ(goals[0].joints.gripper, 0.0);
  EXPECT_EQ(goals[1].kind, GoalKind::Freeze);

  EXPECT_TRUE(expand_intent({IntentKind::Stop, {}}, q, shipped(), kGeom).empty());
}

TEST(ExpandIntent, MoveToUsesInverseKinematics) {
  const Intent in{IntentKind::MoveTo, grammar::MoveToParams{100, 100, 0}};
  const auto goals = expand_intent(in, home_pose(), shipped(), kGeom);
  ASSERT_EQ(goals.size(), 1u);
  const auto p = kinematics::forward_xyz(kGeom, goals[0].joints);
  EXPECT_NEAR(p.x, 100, 1e-9);
  EXPECT_NEAR(p.y, 100, 1e-9);
  EXPECT_NEAR(p.z, 0, 1e-9);
  EXPECT_NEAR(goals[0].joints.theta4, 5 * kPi / 4, 1e-12);

  const Intent far{IntentKind::MoveTo, grammar::MoveToParams{300, 0, 0}};
  try {
    expand_intent(far, home_pose(), shipped(), kGeom);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unreachable);
  }
}

TEST(ExpandIntent, DanceFollowsScriptInOrder) {
  const auto goals = expand_intent({IntentKind::Dance, {}}, home_pose(), shipped(), kGeom);
  const auto& steps = shipped().at("dance").steps;
  ASSERT_GE(goals.size(), 6u);
  ASSERT_EQ(goals.size(), steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto p = kinematics::forward_xyz(kGeom, goals[i].joints);
    EXPECT_NEAR(p.x, steps[i].x, 1e-9);
    EXPECT_NEAR(p.y, steps[i].y, 1e-9);
    EXPECT_NEAR(p.z, steps[i].z, 1e-9);
    EXPECT_EQ(goals[i].move_time_ms, steps[i].time_ms);
  }
}

TEST(ExpandIntent, IsPure) {
  for (auto k : {IntentKind::Pick, IntentKind::Pull, IntentKind::Dance, IntentKind::Home}) {
    EXPECT_EQ(expand_intent({k, {}}, home_pose(), shipped(), kGeom),
              expand_intent({k, {}}, home_pose(), shipped(), kGeom));
  }
}

TEST(ExpandIntent, MissingScriptAndShorterArm) {
  ScriptLibrary lib = shipped();
  lib.erase("pull");
  try {
    expand_intent({IntentKind::Pull, {}}, home_pose(), lib, kGeom);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownScript);
  }
  try {
    expand_intent({IntentKind::Dance, {}}, home_pose(), shipped(), {60, 60});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnreachableStep);
  }
}

TEST(LoadScripts, ShippedScriptsLoadClean) {
  EXPECT_EQ(shipped().size(), 4u);
  for (const char* name : {"home", "pick", "pull", "dance"}) EXPECT_TRUE(shipped().count(name));
  EXPECT_NEAR(shipped().at("dance").steps[0].theta5, kPi / 4, 1e-15);
}

TEST(LoadScripts, UnreachableStepNamesScriptAndStep) {
  const std::string text = R"([{"name": "reach", "steps": [
      {"x": 100, "y": 0, "z": 50, "theta5": 90, "gripper": 90, "time_ms": 500},
      {"x": 201, "y": 0, "z": 0, "theta5": 90, "gripper": 90, "time_ms": 500}]}])";
  try {
    load_scripts_text(text, kGeom);
    FAIL();
  } catch (const ScriptValidationError& e) {
    EXPECT_EQ(e.script(), "reach");
    EXPECT_EQ(e.step(), 1u);
    EXPECT_NE(std::string(e.what()).find("Unreachable"), std::string::npos);
  }
}

TEST(LoadScripts, MalformedFiles) {
  for (const char* text : {"", "  \n", "[]", "{}", "[{\"name\": \"x\", \"steps\": []}]",
                           "[{\"name\": \"x\"}]", "not json"}) {
    try {
      load_scripts_text(text, kGeom);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ScriptValidationError) << text;
    }
  }
}

TEST(LoadScripts, ServoTravelCheckedWithProfile) {
  const auto profile = actuation::CalibrationProfile::standard();
  const std::string text = R"([{"name": "twist", "steps": [
      {"x": 100, "y": 0, "z": 50, "theta5": 200, "gripper": 90, "time_ms": 500}]}])";
  EXPECT_NO_THROW(load_scripts_text(text, kGeom));
  EXPECT_THROW(load_scripts_text(text, kGeom, &profile), ScriptValidationError);
}

TEST(LoadScripts, JsonRoundTrip) {
  const auto back = validate_scripts(parse_scripts_json(scripts_to_json(shipped())), kGeom);
  ASSERT_EQ(back.size(), shipped().size());
  for (const auto& [name, s] : shipped()) {
    ASSERT_EQ(back.at(name).steps.size(), s.steps.size());
    for (std::size_t i = 0; i < s.steps.size(); ++i) {
      EXPECT_NEAR(back.at(name).steps[i].theta5, s.steps[i].theta5, 1e-12);
      EXPECT_NEAR(back.at(name).steps[i].gripper, s.steps[i].gripper, 1e-12);
      EXPECT_EQ(back.at(name).steps[i].x, s.steps[i].x);
    }
  }
}

}  // namespace
