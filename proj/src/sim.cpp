#include "rdvla/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace rdvla {

namespace {

constexpr uint64_t kResetStream = 0x7265736574ULL;
constexpr uint64_t kDemoStream = 0x64656d6fULL;
constexpr real_t kExpertKp = real_t(20);
constexpr real_t kWaypointClearance = real_t(0.06);

real_t clamp01(real_t v) { return std::min(real_t(1), std::max(real_t(0), v)); }
real_t clamp1(real_t v) { return std::min(real_t(1), std::max(real_t(-1), v)); }

real_t seg_point_dist(Vec2 a, Vec2 b, Vec2 p) {
    const real_t dx = b.x - a.x, dy = b.y - a.y;
    const real_t len2 = dx * dx + dy * dy;
    if (len2 <= real_t(0)) return dist(a, p);
    real_t t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    t = std::min(real_t(1), std::max(real_t(0), t));
    const Vec2 q{a.x + t * dx, a.y + t * dy};
    return dist(q, p);
}

bool segment_hits_circle(Vec2 a, Vec2 b, Vec2 c, real_t r) {
    return seg_point_dist(a, b, c) < r;
}

Vec2 rand_in_box(Rng& rng, real_t lo, real_t hi) {
    const real_t w = hi - lo;
    return {lo + static_cast<real_t>(rng.uniform()) * w,
            lo + static_cast<real_t>(rng.uniform()) * w};
}

// Places a circle of random radius astride the segment a-b, centered enough
// that a tangent detour stays inside the unit square.
bool place_blocking_obstacle(Rng& rng, Vec2 a, Vec2 b, Vec2* center, real_t* radius) {
    const real_t r = real_t(0.08) + static_cast<real_t>(rng.uniform()) * real_t(0.04);
    const Vec2 mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
    real_t dx = b.x - a.x, dy = b.y - a.y;
    const real_t len = std::sqrt(dx * dx + dy * dy);
    if (len <= real_t(0)) return false;
    const Vec2 perp{-dy / len, dx / len};
    const real_t off = (static_cast<real_t>(rng.uniform()) * 2 - 1) * real_t(0.3) * r;
    const Vec2 c{mid.x + perp.x * off, mid.y + perp.y * off};
    if (c.x < real_t(0.3) || c.x > real_t(0.7) || c.y < real_t(0.3) || c.y > real_t(0.7)) {
        return false;
    }
    if (dist(a, c) < r + real_t(0.1) || dist(b, c) < r + real_t(0.1)) return false;
    if (!segment_hits_circle(a, b, c, r)) return false;
    *center = c;
    *radius = r;
    return true;
}

Vec2 rotate(Vec2 v, real_t angle) {
    const real_t c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Tangent waypoint toward `target`. If the direct segment is blocked, hop
// along the inflated circle toward the target's side. Accepted chords must
// keep kAvoidMargin of clearance beyond the true radius, so the agent never
// hugs the obstacle and the alignment test below cannot limit-cycle. The
// radial fallback pushes a too-close agent back out and cannot collide.
Vec2 avoid_waypoint(const SimState& s, Vec2 from, Vec2 target) {
    if (!s.has_obstacle) return target;
    const Vec2 c = s.obstacle;
    const real_t r = s.obstacle_radius;
    if (!segment_hits_circle(from, target, c, r + real_t(0.02))) return target;

    Vec2 va{from.x - c.x, from.y - c.y};
    real_t da = std::sqrt(va.x * va.x + va.y * va.y);
    if (da < real_t(1e-9)) {
        va = {1, 0};
        da = 1;
    }
    const Vec2 ua{va.x / da, va.y / da};
    // Detours always go counterclockwise. The nearest-side choice would be
    // shorter on average but makes the demonstrated action bimodal for
    // head-on approaches, which a mean-squared imitation loss collapses to
    // "drive straight in"; a consistent side keeps the target unimodal.
    const real_t side = real_t(1);

    constexpr real_t kDeg = real_t(3.14159265358979323846 / 180.0);
    constexpr real_t kAvoidMargin = real_t(0.03);
    const real_t hops[] = {30 * kDeg, 18 * kDeg, 8 * kDeg, 0};
    for (real_t infl : {kWaypointClearance, real_t(0.1)}) {
        for (real_t hop : hops) {
            const Vec2 dir = rotate(ua, side * hop);
            const Vec2 w{c.x + dir.x * (r + infl), c.y + dir.y * (r + infl)};
            if (!segment_hits_circle(from, w, c, r + kAvoidMargin)) return w;
        }
    }
    return {c.x + ua.x * (r + kWaypointClearance), c.y + ua.y * (r + kWaypointClearance)};
}

}  // namespace

real_t dist(Vec2 a, Vec2 b) {
    const real_t dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

SimObservation SimState::observation() const {
    SimObservation obs;
    obs.tier = tier;
    obs.task_id = task_id;
    Entity agent_e;
    agent_e.type = EntityType::agent;
    agent_e.pos = agent;
    agent_e.extra = {gripper, held ? real_t(1) : real_t(-1), 0};
    obs.entities.push_back(agent_e);
    if (has_object) {
        Entity obj;
        obj.type = EntityType::object;
        obj.pos = object;
        obj.extra = {held ? real_t(1) : real_t(-1), 0, 0};
        obs.entities.push_back(obj);
    }
    Entity goal_e;
    goal_e.type = EntityType::goal;
    goal_e.pos = goal;
    obs.entities.push_back(goal_e);
    if (has_obstacle) {
        Entity obst;
        obst.type = EntityType::obstacle;
        obst.pos = obstacle;
        obst.extra = {obstacle_radius, 0, 0};
        obs.entities.push_back(obst);
    }
    return obs;
}

std::array<real_t, 3> SimState::proprio() const { return {agent.x, agent.y, gripper}; }

bool SimState::success() const {
    if (tier == 2) return has_object && !held && dist(object, goal) <= kSuccessRadius;
    return dist(agent, goal) <= kSuccessRadius;
}

int episode_cap(int tier) {
    switch (tier) {
        case 0: return 40;
        case 1: return 80;
        case 2: return 120;
        default: throw ConfigError("episode_cap: invalid tier " + std::to_string(tier));
    }
}

SimState reset(int tier, uint64_t seed) {
    if (tier < 0 || tier > 2) throw ConfigError("reset: invalid tier " + std::to_string(tier));
    Rng rng(seed_mix(static_cast<uint64_t>(tier), seed, kResetStream));
    SimState s;
    s.tier = tier;
    s.task_id = tier;
    s.gripper = real_t(1);

    if (tier == 0) {
        for (;;) {
            s.agent = rand_in_box(rng, real_t(0.1), real_t(0.9));
            s.goal = rand_in_box(rng, real_t(0.1), real_t(0.9));
            if (dist(s.agent, s.goal) >= real_t(0.3)) break;
        }
        return s;
    }

    if (tier == 1) {
        for (;;) {
            s.agent = rand_in_box(rng, real_t(0.1), real_t(0.9));
            s.goal = rand_in_box(rng, real_t(0.1), real_t(0.9));
            if (dist(s.agent, s.goal) < real_t(0.5)) continue;
            if (place_blocking_obstacle(rng, s.agent, s.goal, &s.obstacle,
                                        &s.obstacle_radius)) {
                s.has_obstacle = true;
                return s;
            }
        }
    }

    // tier 2
    for (;;) {
        s.object = rand_in_box(rng, real_t(0.1), real_t(0.9));
        s.goal = rand_in_box(rng, real_t(0.1), real_t(0.9));
        if (dist(s.object, s.goal) < real_t(0.5)) continue;
        if (!place_blocking_obstacle(rng, s.object, s.goal, &s.obstacle, &s.obstacle_radius)) {
            continue;
        }
        bool agent_ok = false;
        for (int tries = 0; tries < 32; ++tries) {
            s.agent = rand_in_box(rng, real_t(0.1), real_t(0.9));
            if (dist(s.agent, s.object) < real_t(0.15)) continue;
            if (dist(s.agent, s.obstacle) < s.obstacle_radius + real_t(0.1)) continue;
            if (segment_hits_circle(s.agent, s.object, s.obstacle,
                                    s.obstacle_radius + kWaypointClearance)) {
                continue;
            }
            agent_ok = true;
            break;
        }
        if (!agent_ok) continue;
        s.has_object = true;
        s.has_obstacle = true;
        return s;
    }
}

void step(SimState& s, const std::array<real_t, 3>& action) {
    const real_t vx = clamp1(action[0]);
    const real_t vy = clamp1(action[1]);
    const real_t gcmd = clamp1(action[2]);

    Vec2 next{s.agent.x + vx * kSimDt, s.agent.y + vy * kSimDt};
    next.x = clamp01(next.x);
    next.y = clamp01(next.y);
    bool blocked = false;
    if (s.has_obstacle) {
        blocked = segment_hits_circle(s.agent, next, s.obstacle, s.obstacle_radius);
    }
    if (!blocked) s.agent = next;
    s.agent_vel = blocked ? Vec2{0, 0} : Vec2{vx, vy};

    const real_t old_open = s.gripper;
    const real_t new_open = (gcmd + 1) / 2;
    if (old_open >= real_t(0.5) && new_open < real_t(0.5)) {
        if (s.has_object && !s.held && dist(s.agent, s.object) <= kGraspRadius) {
            s.held = true;
        }
    } else if (old_open < real_t(0.5) && new_open >= real_t(0.5)) {
        if (s.held) s.held = false;  // object stays where it was released
    }
    s.gripper = new_open;
    if (s.held) s.object = s.agent;
    ++s.step_count;
}

std::array<real_t, 3> scripted_expert(const SimState& s) {
    Vec2 target = s.goal;
    real_t g = real_t(1);

    if (s.tier == 2 && s.has_object) {
        if (s.held) {
            target = s.goal;
            g = dist(s.agent, s.goal) <= real_t(0.03) ? real_t(1) : real_t(-1);
        } else if (dist(s.object, s.goal) <= kSuccessRadius) {
            target = s.agent;  // placed: idle
            g = real_t(1);
        } else {
            target = s.object;
            g = dist(s.agent, s.object) <= real_t(0.04) ? real_t(-1) : real_t(1);
        }
    }

    const Vec2 wp = avoid_waypoint(s, s.agent, target);
    real_t vx = kExpertKp * (wp.x - s.agent.x);
    real_t vy = kExpertKp * (wp.y - s.agent.y);
    // Saturate without bending the direction, so motion stays on the
    // collision-checked chord.
    const real_t m = std::max(std::fabs(vx), std::fabs(vy));
    if (m > 1) {
        vx /= m;
        vy /= m;
    }
    return {vx, vy, g};
}

std::vector<DemoSample> collect_demos(const std::vector<int>& tiers, int episodes_per_tier,
                                      int horizon, uint64_t seed, int stride) {
    if (episodes_per_tier < 1) throw ConfigError("collect_demos: episodes_per_tier must be >= 1");
    if (horizon < 1) throw ConfigError("collect_demos: horizon must be >= 1");
    if (stride < 1) throw ConfigError("collect_demos: stride must be >= 1");
    std::vector<DemoSample> out;
    for (int tier : tiers) {
        const int cap = episode_cap(tier);
        for (int e = 0; e < episodes_per_tier; ++e) {
            SimState st = reset(tier, seed_mix(seed, static_cast<uint64_t>(tier),
                                               static_cast<uint64_t>(e) ^ kDemoStream));
            std::vector<SimObservation> observations;
            std::vector<std::array<real_t, 3>> proprios;
            std::vector<std::array<real_t, 3>> actions;
            while (!st.success() && st.step_count < cap) {
                const auto a = scripted_expert(st);
                observations.push_back(st.observation());
                proprios.push_back(st.proprio());
                actions.push_back(a);
                step(st, a);
            }
            const std::size_t T = actions.size();
            for (std::size_t t = 0; t < T; t += static_cast<std::size_t>(stride)) {
                DemoSample d;
                d.observation = observations[t];
                d.proprio = proprios[t];
                d.target_chunk.reserve(static_cast<std::size_t>(horizon));
                for (int h = 0; h < horizon; ++h) {
                    const std::size_t idx = std::min(t + static_cast<std::size_t>(h), T - 1);
                    d.target_chunk.push_back(actions[idx]);
                }
                out.push_back(std::move(d));
            }
        }
    }
    return out;
}

// ---- demo container ----
//
// Layout (little-endian):
//   u32 magic 'RDVD', u32 version=1, u32 horizon, u32 action_dim,
//   u64 record count, then per record:
//     i32 tier, i32 task_id, u32 entity_count, 4 entity slots of
//     (u8 present, i32 type, f64 x, f64 y, f64 extra[3]),
//     f64 proprio[3], f64 chunk[horizon*action_dim].

namespace {

constexpr uint32_t kDemoMagic = 0x44564452;  // "RDVD"
constexpr uint32_t kDemoVersion = 1;
constexpr std::size_t kDemoSlots = 4;

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw IntegrityError("demo container: truncated file");
    return v;
}

}  // namespace

void save_demos(const std::string& path, int horizon, const std::vector<DemoSample>& demos) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("save_demos: cannot open " + path);
    put<uint32_t>(f, kDemoMagic);
    put<uint32_t>(f, kDemoVersion);
    put<uint32_t>(f, static_cast<uint32_t>(horizon));
    put<uint32_t>(f, kSimActionDim);
    put<uint64_t>(f, demos.size());
    for (const auto& d : demos) {
        if (d.target_chunk.size() != static_cast<std::size_t>(horizon)) {
            throw UsageError("save_demos: chunk length mismatch");
        }
        put<int32_t>(f, d.observation.tier);
        put<int32_t>(f, d.observation.task_id);
        put<uint32_t>(f, static_cast<uint32_t>(d.observation.entities.size()));
        for (std::size_t i = 0; i < kDemoSlots; ++i) {
            const bool present = i < d.observation.entities.size();
            put<uint8_t>(f, present ? 1 : 0);
            Entity e;
            if (present) e = d.observation.entities[i];
            put<int32_t>(f, static_cast<int32_t>(e.type));
            put<double>(f, static_cast<double>(e.pos.x));
            put<double>(f, static_cast<double>(e.pos.y));
            for (real_t x : e.extra) put<double>(f, static_cast<double>(x));
        }
        for (real_t x : d.proprio) put<double>(f, static_cast<double>(x));
        for (const auto& row : d.target_chunk) {
            for (real_t x : row) put<double>(f, static_cast<double>(x));
        }
    }
    if (!f) throw IoError("save_demos: write failed for " + path);
}

std::vector<DemoSample> load_demos(const std::string& path, int* horizon_out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_demos: cannot open " + path);
    if (get<uint32_t>(f) != kDemoMagic) throw IntegrityError("load_demos: bad magic in " + path);
    if (get<uint32_t>(f) != kDemoVersion) {
        throw IntegrityError("load_demos: unsupported version in " + path);
    }
    const uint32_t horizon = get<uint32_t>(f);
    const uint32_t adim = get<uint32_t>(f);
    if (adim != kSimActionDim) throw IntegrityError("load_demos: unexpected action dim");
    const uint64_t count = get<uint64_t>(f);
    std::vector<DemoSample> out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        DemoSample d;
        d.observation.tier = get<int32_t>(f);
        d.observation.task_id = get<int32_t>(f);
        const uint32_t n_ent = get<uint32_t>(f);
        for (std::size_t slot = 0; slot < kDemoSlots; ++slot) {
            const uint8_t present = get<uint8_t>(f);
            Entity e;
            e.type = static_cast<EntityType>(get<int32_t>(f));
            e.pos.x = static_cast<real_t>(get<double>(f));
            e.pos.y = static_cast<real_t>(get<double>(f));
            for (auto& x : e.extra) x = static_cast<real_t>(get<double>(f));
            if (present) d.observation.entities.push_back(e);
        }
        if (d.observation.entities.size() != n_ent) {
            throw IntegrityError("load_demos: entity count mismatch");
        }
        for (auto& x : d.proprio) x = static_cast<real_t>(get<double>(f));
        d.target_chunk.resize(horizon);
        for (auto& row : d.target_chunk) {
            for (auto& x : row) x = static_cast<real_t>(get<double>(f));
        }
        out.push_back(std::move(d));
    }
    if (horizon_out) *horizon_out = static_cast<int>(horizon);
    return out;
}

void export_demos_csv(const std::string& path, const std::vector<DemoSample>& demos) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("export_demos_csv: cannot open " + path);
    f << "index,tier,task_id,entities,agent_x,agent_y,gripper";
    if (!demos.empty()) {
        for (std::size_t h = 0; h < demos[0].target_chunk.size(); ++h) {
            f << ",a" << h << "_vx,a" << h << "_vy,a" << h << "_g";
        }
    }
    f << "\n";
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const auto& d = demos[i];
        f << i << "," << d.observation.tier << "," << d.observation.task_id << ","
          << d.observation.entities.size() << "," << d.proprio[0] << "," << d.proprio[1] << ","
          << d.proprio[2];
        for (const auto& row : d.target_chunk) {
            f << "," << row[0] << "," << row[1] << "," << row[2];
        }
        f << "\n";
    }
}

}  // namespace rdvla
