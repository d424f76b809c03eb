#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rdvla/common.hpp"
#include "rdvla/rng.hpp"

namespace rdvla {

struct Vec2 {
    real_t x = 0;
    real_t y = 0;
};

real_t dist(Vec2 a, Vec2 b);

enum class EntityType : int { agent = 0, object = 1, goal = 2, obstacle = 3 };

struct Entity {
    EntityType type = EntityType::agent;
    Vec2 pos;
    std::array<real_t, 3> extra{};  // agent: (gripper, holding, 0); object: (held, 0, 0);
                                    // obstacle: (radius, 0, 0)
};

struct SimObservation {
    std::vector<Entity> entities;  // canonical order: agent, [object], goal, [obstacle]
    int tier = 0;
    int task_id = 0;
};

// Planar point-agent world on the unit square. Velocity-commanded Euler
// dynamics, one optional circular obstacle, one optional carryable object.
struct SimState {
    int tier = 0;
    int task_id = 0;
    Vec2 agent;
    Vec2 agent_vel;
    real_t gripper = real_t(1);  // openness: 1 open, 0 closed
    bool has_object = false;
    Vec2 object;
    bool held = false;
    Vec2 goal;
    bool has_obstacle = false;
    Vec2 obstacle;
    real_t obstacle_radius = 0;
    int step_count = 0;

    SimObservation observation() const;
    std::array<real_t, 3> proprio() const;  // (agent x, agent y, gripper openness)
    bool success() const;
};

inline constexpr real_t kSimDt = real_t(0.05);
inline constexpr real_t kGraspRadius = real_t(0.05);
inline constexpr real_t kSuccessRadius = real_t(0.05);
inline constexpr int kSimActionDim = 3;  // (vx, vy, gripper command)

int episode_cap(int tier);  // 40 / 80 / 120

// Deterministic solvable layout for the tier. Tier 0: open-space reach.
// Tier 1: reach with the straight line blocked by the obstacle. Tier 2:
// grasp the object, carry it around the obstacle, release at the goal.
SimState reset(int tier, uint64_t seed);

// Components clamped to [-1, 1]; never rejects. Collision with the obstacle
// stops the move outright (no sliding). The gripper command maps to openness
// (g+1)/2; a crossing of 0.5 attempts a grasp (downward, within
// kGraspRadius) or a release (upward).
void step(SimState& s, const std::array<real_t, 3>& action);

// Waypoint controller: single tangent waypoint around the obstacle,
// proportional velocity, phase-scheduled gripper.
std::array<real_t, 3> scripted_expert(const SimState& s);

struct DemoSample {
    SimObservation observation;
    std::array<real_t, 3> proprio{};
    std::vector<std::array<real_t, 3>> target_chunk;  // H rows of expert actions
};

std::vector<DemoSample> collect_demos(const std::vector<int>& tiers, int episodes_per_tier,
                                      int horizon, uint64_t seed, int stride = 1);

// Binary demo container: magic, version, H, action_dim, count, then
// fixed-width records (see save_demos in sim.cpp for the exact layout).
void save_demos(const std::string& path, int horizon, const std::vector<DemoSample>& demos);
std::vector<DemoSample> load_demos(const std::string& path, int* horizon_out = nullptr);
void export_demos_csv(const std::string& path, const std::vector<DemoSample>& demos);

}  // namespace rdvla
