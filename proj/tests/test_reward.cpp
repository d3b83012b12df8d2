#include <doctest.h>

#include "camrl/reward.hpp"
#include "camrl/verify.hpp"

using namespace camrl;

TEST_CASE("reward branch values") {
    reward::RewardConfig cfg;  // r_c = 0.2, dt = 0.25, limit = 25
    CHECK(reward::compute_reward(-0.05, false, 3.0, cfg) == -0.25);
    CHECK(reward::compute_reward(0.1, false, 3.0, cfg) ==
          doctest::Approx((0.1 - 0.2) * 0.25 / 2.0).epsilon(1e-15));
    CHECK(reward::compute_reward(0.1, false, 3.0, cfg) == doctest::Approx(-0.0125).epsilon(1e-15));
    CHECK(reward::compute_reward(1.0, true, 3.0, cfg) == 1.0);
    CHECK(reward::compute_reward(1.0, false, 25.0, cfg) == -0.5);
    CHECK(reward::compute_reward(1.0, false, 10.0, cfg) == 0.0);
}

TEST_CASE("reward boundary cases") {
    reward::RewardConfig cfg;
    CHECK(reward::compute_reward(0.0, false, 3.0, cfg) == -0.25);  // d_t = 0 is a collision
    // at d_t = r_c the discomfort branch no longer applies and the zero branch matches it
    CHECK(reward::compute_reward(cfg.discomfort_radius, false, 3.0, cfg) == 0.0);
    CHECK(reward::compute_reward(1.0, false, 25.0 + 1e-9, cfg) == -0.5);  // t >= limit reading
    // reaching the goal inside the discomfort band pays the discomfort value
    CHECK(reward::compute_reward(0.1, true, 3.0, cfg) ==
          doctest::Approx(-0.0125).epsilon(1e-15));
    // collision while at goal still pays the collision penalty
    CHECK(reward::compute_reward(-0.1, true, 3.0, cfg) == -0.25);
}

TEST_CASE("discomfort branch is strictly increasing and continuous at r_c") {
    reward::RewardConfig cfg;
    double prev = reward::compute_reward(1e-6, false, 3.0, cfg);
    for (double d = 0.01; d < cfg.discomfort_radius; d += 0.01) {
        double r = reward::compute_reward(d, false, 3.0, cfg);
        CHECK(r > prev);
        prev = r;
    }
    double just_below = reward::compute_reward(cfg.discomfort_radius - 1e-12, false, 3.0, cfg);
    CHECK(just_below == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("bitwise agreement with the literal transcription") {
    auto res = verify::verify_reward_transcription(100000, 2024);
    INFO(res.detail);
    CHECK(res.pass);
}
