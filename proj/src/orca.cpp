#include "camrl/orca.hpp"

#include <cmath>
#include <cstddef>

namespace camrl::sim {

namespace {

constexpr double kEps = 1e-10;

struct Line {
    Vec2 point;
    Vec2 direction;
};

// 1D LP along lines[line_no], constrained by lines[0..line_no) and the disc
// of the given radius. Returns false when infeasible.
bool linear_program1(const std::vector<Line>& lines, std::size_t line_no, double radius,
                     const Vec2& opt_velocity, bool direction_opt, Vec2& result) {
    const Line& ln = lines[line_no];
    double dot = ln.point.dot(ln.direction);
    double discriminant = dot * dot + radius * radius - ln.point.norm_sq();
    if (discriminant < 0.0) return false;  // disc misses the line entirely
    double sqrt_disc = std::sqrt(discriminant);
    double t_left = -dot - sqrt_disc;
    double t_right = -dot + sqrt_disc;

    for (std::size_t i = 0; i < line_no; ++i) {
        double denominator = ln.direction.det(lines[i].direction);
        double numerator = lines[i].direction.det(ln.point - lines[i].point);
        if (std::fabs(denominator) <= kEps) {
            if (numerator < 0.0) return false;  // parallel and fully outside
            continue;
        }
        double t = numerator / denominator;
        if (denominator >= 0.0) {
            t_right = std::min(t_right, t);
        } else {
            t_left = std::max(t_left, t);
        }
        if (t_left > t_right) return false;
    }

    if (direction_opt) {
        result = (opt_velocity.dot(ln.direction) > 0.0) ? ln.point + t_right * ln.direction
                                                        : ln.point + t_left * ln.direction;
    } else {
        double t = ln.direction.dot(opt_velocity - ln.point);
        t = std::min(std::max(t, t_left), t_right);
        result = ln.point + t * ln.direction;
    }
    return true;
}

// 2D LP: closest point to opt_velocity inside all half-planes and the disc.
// Returns lines.size() on success, else the index of the failing constraint.
std::size_t linear_program2(const std::vector<Line>& lines, double radius,
                            const Vec2& opt_velocity, bool direction_opt, Vec2& result) {
    if (direction_opt) {
        result = opt_velocity * radius;  // opt_velocity is a unit direction
    } else if (opt_velocity.norm_sq() > radius * radius) {
        result = opt_velocity.normalized() * radius;
    } else {
        result = opt_velocity;
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].direction.det(lines[i].point - result) > 0.0) {
            Vec2 temp = result;
            if (!linear_program1(lines, i, radius, opt_velocity, direction_opt, result)) {
                result = temp;
                return i;
            }
        }
    }
    return lines.size();
}

// Infeasible case: minimize the maximum constraint violation (the 3D-lifted
// least-violating solution of the ORCA construction).
void linear_program3(const std::vector<Line>& lines, std::size_t begin_line, double radius,
                     Vec2& result) {
    double distance = 0.0;
    for (std::size_t i = begin_line; i < lines.size(); ++i) {
        if (lines[i].direction.det(lines[i].point - result) > distance) {
            std::vector<Line> proj_lines;
            proj_lines.reserve(i);
            for (std::size_t j = 0; j < i; ++j) {
                Line line;
                double determinant = lines[i].direction.det(lines[j].direction);
                if (std::fabs(determinant) <= kEps) {
                    if (lines[i].direction.dot(lines[j].direction) > 0.0) continue;
                    line.point = 0.5 * (lines[i].point + lines[j].point);
                } else {
                    line.point = lines[i].point +
                                 (lines[j].direction.det(lines[i].point - lines[j].point) /
                                  determinant) *
                                     lines[i].direction;
                }
                line.direction = (lines[j].direction - lines[i].direction).normalized();
                proj_lines.push_back(line);
            }
            Vec2 temp = result;
            if (linear_program2(proj_lines, radius, Vec2(-lines[i].direction.y, lines[i].direction.x),
                                true, result) < proj_lines.size()) {
                result = temp;
            }
            distance = lines[i].direction.det(lines[i].point - result);
        }
    }
}

}  // namespace

Vec2 orca_policy(const FullAgentState& self, const std::vector<ObservableState>& neighbors,
                 const OrcaParams& params) {
    double inv_horizon = 1.0 / params.time_horizon;
    std::vector<Line> lines;
    lines.reserve(neighbors.size());

    for (const ObservableState& other : neighbors) {
        Vec2 relative_position = other.p - self.obs.p;
        if (relative_position.norm() > params.neighbor_range) continue;
        Vec2 relative_velocity = self.obs.v - other.v;
        double dist_sq = relative_position.norm_sq();
        double combined_radius = self.obs.r + other.r + params.safety_margin;
        double combined_radius_sq = combined_radius * combined_radius;

        Line line;
        Vec2 u;
        if (dist_sq > combined_radius_sq) {
            // Velocity obstacle truncated at the horizon; project onto its boundary.
            Vec2 w = relative_velocity - inv_horizon * relative_position;
            double w_len_sq = w.norm_sq();
            double dot1 = w.dot(relative_position);
            if (dot1 < 0.0 && dot1 * dot1 > combined_radius_sq * w_len_sq) {
                // closest on the cut-off circle
                double w_len = std::sqrt(w_len_sq);
                Vec2 unit_w = w / w_len;
                line.direction = Vec2(unit_w.y, -unit_w.x);
                u = (combined_radius * inv_horizon - w_len) * unit_w;
            } else {
                // closest on one of the legs
                double leg = std::sqrt(dist_sq - combined_radius_sq);
                if (relative_position.det(w) > 0.0) {
                    line.direction = Vec2(relative_position.x * leg - relative_position.y * combined_radius,
                                          relative_position.x * combined_radius +
                                              relative_position.y * leg) /
                                     dist_sq;
                } else {
                    line.direction = -Vec2(relative_position.x * leg + relative_position.y * combined_radius,
                                           -relative_position.x * combined_radius +
                                               relative_position.y * leg) /
                                     dist_sq;
                }
                double dot2 = relative_velocity.dot(line.direction);
                u = dot2 * line.direction - relative_velocity;
            }
        } else {
            // already in contact: push apart within one time step
            double inv_dt = 1.0 / params.dt;
            Vec2 w = relative_velocity - inv_dt * relative_position;
            double w_len = w.norm();
            Vec2 unit_w = w_len > 0.0 ? w / w_len : Vec2(1.0, 0.0);
            line.direction = Vec2(unit_w.y, -unit_w.x);
            u = (combined_radius * inv_dt - w_len) * unit_w;
        }
        // reciprocity: this agent takes half the avoidance responsibility
        line.point = self.obs.v + 0.5 * u;
        lines.push_back(line);
    }

    Vec2 to_goal = self.hidden.goal - self.obs.p;
    double dist = to_goal.norm();
    double desired_speed = std::min(self.hidden.v_pref, dist / params.dt);
    Vec2 pref_velocity = to_goal.normalized() * desired_speed;

    Vec2 new_velocity;
    std::size_t fail = linear_program2(lines, params.max_speed, pref_velocity, false, new_velocity);
    if (fail < lines.size()) linear_program3(lines, fail, params.max_speed, new_velocity);
    return new_velocity;
}

}  // namespace camrl::sim
