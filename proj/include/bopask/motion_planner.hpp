#ifndef BOPASK_MOTION_PLANNER_HPP
#define BOPASK_MOTION_PLANNER_HPP

#include "bopask/scene_geometry.hpp"

namespace bopask {

/// Collision world for trajectory planning: one axis-aligned box per
/// non-participating object instance (world frame, mm), inflated by a
/// safety margin, plus an optional obstacle point cloud.
struct ObstacleSet {
    std::vector<Aabb> aabbs;
    double inflation = 5.0;       // mm added on every side
    std::vector<Vec3> cloud;      // optional dense obstacle points
    double cloud_radius = 0.0;    // mm; 0 disables the cloud check

    bool point_free(const Vec3& p) const {
        for (const Aabb& b : aabbs)
            if (b.contains(p, inflation)) return false;
        if (cloud_radius > 0) {
            const double r2 = cloud_radius * cloud_radius;
            for (const Vec3& q : cloud)
                if ((p - q).squaredNorm() <= r2) return false;
        }
        return true;
    }

    /// Validate a segment by sub-sampling at steps no larger than `step`,
    /// endpoints included.
    bool segment_free(const Vec3& a, const Vec3& b, double step) const {
        const double len = (b - a).norm();
        const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
        for (int i = 0; i <= n; ++i) {
            const double t = static_cast<double>(i) / n;
            if (!point_free(a + t * (b - a))) return false;
        }
        return true;
    }
};

struct PlannerParams {
    int max_iters = 5000;
    double extend_step = 50;     // mm
    double goal_tol = 20;        // mm
    double edge_step = 10;       // mm edge validation step
    double goal_bias = 0.10;     // fraction of samples drawn at the goal
    double z_band_bias = 0.70;   // fraction of free samples above the clutter
    double margin = 200;         // mm sampling-bounds margin
    double inflation = 5;        // mm obstacle inflation
    double rdp_tol = 30;         // mm simplification tolerance
    double lift_clearance = 10;  // mm table clearance for the carried object
};

/// Axis-aligned sampling region. x/y from the object centroids plus margin;
/// z from the table plane (0) up to the highest centroid plus margin.
/// `band_low` marks the top of the tallest obstacle: the vertical band
/// [band_low, max.z] is favored to encourage lifting motions.
struct SamplingBounds {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
    double band_low = 0;

    bool band_valid() const { return band_low < max.z(); }
};

inline SamplingBounds sampling_bounds(const std::vector<Cuboid3D>& world_cuboids,
                                      double margin = 200.0) {
    if (world_cuboids.size() < 2)
        throw std::invalid_argument("sampling_bounds needs at least 2 objects");
    Vec3 lo = world_cuboids[0].center();
    Vec3 hi = lo;
    double tallest_top = 0;
    for (const Cuboid3D& c : world_cuboids) {
        lo = lo.cwiseMin(c.center());
        hi = hi.cwiseMax(c.center());
        tallest_top = std::max(tallest_top, aabb_of(c).max.z());
    }
    SamplingBounds b;
    b.min = {lo.x() - margin, lo.y() - margin, 0.0};
    b.max = {hi.x() + margin, hi.y() + margin, hi.z() + margin};
    b.band_low = tallest_top;
    return b;
}

/// Goal-biased workspace sampler. Kept separate from the tree so the bias
/// statistic is observable on its own.
class WorkspaceSampler {
public:
    WorkspaceSampler(const SamplingBounds& bounds, const Vec3& goal,
                     double goal_bias, double z_band_bias)
        : bounds_(bounds), goal_(goal), goal_bias_(goal_bias),
          z_band_bias_(z_band_bias) {}

    struct Draw {
        Vec3 point;
        bool goal_directed;
    };

    Draw sample(Rng& rng) const {
        if (rng.uniform() < goal_bias_) return {goal_, true};
        Vec3 p;
        p.x() = rng.uniform(bounds_.min.x(), bounds_.max.x());
        p.y() = rng.uniform(bounds_.min.y(), bounds_.max.y());
        if (bounds_.band_valid() && rng.uniform() < z_band_bias_)
            p.z() = rng.uniform(bounds_.band_low, bounds_.max.z());
        else
            p.z() = rng.uniform(bounds_.min.z(), bounds_.max.z());
        return {p, false};
    }

private:
    SamplingBounds bounds_;
    Vec3 goal_;
    double goal_bias_;
    double z_band_bias_;
};

/// Goal-biased RRT in 3D Cartesian space. Returns a piecewise-linear path
/// from `start` to `goal` whose edges validate at `edge_step` resolution.
/// Deterministic for a fixed seed.
inline std::vector<Vec3> rrt_plan(const Vec3& start, const Vec3& goal,
                                  const ObstacleSet& obstacles,
                                  const SamplingBounds& bounds,
                                  const PlannerParams& params, std::uint64_t seed) {
    if (!obstacles.point_free(start))
        throw PlanError(PlanCode::start_in_collision, "start inside an obstacle");
    if (!obstacles.point_free(goal))
        throw PlanError(PlanCode::goal_in_collision, "goal inside an obstacle");

    if ((goal - start).norm() <= params.goal_tol &&
        obstacles.segment_free(start, goal, params.edge_step))
        return {start, goal};

    Rng rng(mix_seed(seed, 0x7272u));
    WorkspaceSampler sampler(bounds, goal, params.goal_bias, params.z_band_bias);

    std::vector<Vec3> nodes = {start};
    std::vector<int> parents = {-1};

    for (int it = 0; it < params.max_iters; ++it) {
        const Vec3 target = sampler.sample(rng).point;

        std::size_t nearest = 0;
        double best = (nodes[0] - target).squaredNorm();
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            const double d = (nodes[i] - target).squaredNorm();
            if (d < best) {
                best = d;
                nearest = i;
            }
        }
        const Vec3 dir = target - nodes[nearest];
        const double len = dir.norm();
        if (len < 1e-9) continue;
        const Vec3 fresh =
            nodes[nearest] + dir * std::min(1.0, params.extend_step / len);
        if (!obstacles.point_free(fresh)) continue;
        if (!obstacles.segment_free(nodes[nearest], fresh, params.edge_step)) continue;

        nodes.push_back(fresh);
        parents.push_back(static_cast<int>(nearest));

        if ((fresh - goal).norm() <= params.goal_tol &&
            obstacles.segment_free(fresh, goal, params.edge_step)) {
            std::vector<Vec3> path = {goal};
            for (int i = static_cast<int>(nodes.size()) - 1; i >= 0; i = parents[static_cast<std::size_t>(i)])
                path.push_back(nodes[static_cast<std::size_t>(i)]);
            std::reverse(path.begin(), path.end());
            return path;
        }
    }
    throw PlanError(PlanCode::no_path,
                    "no path after " + std::to_string(params.max_iters) + " iterations");
}

// ---------------------------------------------------------------------------
// Ramer-Douglas-Peucker simplification
// ---------------------------------------------------------------------------

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 < 1e-18) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

namespace detail {

inline void rdp_indices(const std::vector<Vec3>& path, std::size_t lo, std::size_t hi,
                        double tol, std::vector<std::size_t>& keep) {
    double worst = -1;
    std::size_t split = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const double d = point_segment_distance(path[i], path[lo], path[hi]);
        if (d > worst) {
            worst = d;
            split = i;
        }
    }
    if (worst > tol) {
        rdp_indices(path, lo, split, tol, keep);
        keep.push_back(split);
        rdp_indices(path, split, hi, tol, keep);
    }
}

}  // namespace detail

/// Classic RDP: keeps both endpoints; every removed point stays within
/// `tol` of the simplified polyline.
inline std::vector<Vec3> rdp_simplify(const std::vector<Vec3>& path, double tol) {
    if (path.size() < 2) throw std::invalid_argument("rdp_simplify needs >= 2 points");
    if (tol <= 0) throw std::invalid_argument("rdp_simplify needs tol > 0");
    std::vector<std::size_t> keep = {0};
    detail::rdp_indices(path, 0, path.size() - 1, tol, keep);
    keep.push_back(path.size() - 1);
    std::vector<Vec3> out;
    out.reserve(keep.size());
    for (std::size_t i : keep) out.push_back(path[i]);
    return out;
}

namespace detail {

// RDP fused with collision re-validation: a chord is only accepted when it
// both stays within tol of the raw points and validates against the
// obstacles; otherwise it splits at the max-deviation point, falling back
// toward the raw (already validated) path.
inline void rdp_validated_indices(const std::vector<Vec3>& path, std::size_t lo,
                                  std::size_t hi, double tol,
                                  const ObstacleSet& obstacles, double edge_step,
                                  std::vector<std::size_t>& keep) {
    double worst = -1;
    std::size_t split = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const double d = point_segment_distance(path[i], path[lo], path[hi]);
        if (d > worst) {
            worst = d;
            split = i;
        }
    }
    const bool must_split =
        (worst > tol) ||
        (hi > lo + 1 && !obstacles.segment_free(path[lo], path[hi], edge_step));
    if (must_split && split != lo) {
        rdp_validated_indices(path, lo, split, tol, obstacles, edge_step, keep);
        keep.push_back(split);
        rdp_validated_indices(path, split, hi, tol, obstacles, edge_step, keep);
    }
}

}  // namespace detail

inline std::vector<Vec3> rdp_simplify_validated(const std::vector<Vec3>& path,
                                                double tol,
                                                const ObstacleSet& obstacles,
                                                double edge_step) {
    if (path.size() < 2) throw std::invalid_argument("rdp_simplify needs >= 2 points");
    std::vector<std::size_t> keep = {0};
    detail::rdp_validated_indices(path, 0, path.size() - 1, tol, obstacles, edge_step,
                                  keep);
    keep.push_back(path.size() - 1);
    std::vector<Vec3> out;
    out.reserve(keep.size());
    for (std::size_t i : keep) out.push_back(path[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Frame-level pair planning
// ---------------------------------------------------------------------------

struct Trajectory {
    int source_id = 0;
    int target_id = 0;
    std::vector<Vec3> waypoints_3d;        // world frame, mm
    std::vector<PixelPoint> waypoints_2d;  // rounded, clamped
};

struct PairFailure {
    int source_id = 0;
    int target_id = 0;
    std::string reason;
};

struct TrajectoryBatch {
    std::vector<Trajectory> trajectories;
    std::vector<PairFailure> failures;
};

/// Pick-and-place start/goal: the carried object's centroid raised until
/// its box clears the table by `lift_clearance`.
inline double lifted_z(const Cuboid3D& carried, double centroid_z,
                       double lift_clearance) {
    const double below = carried.center().z() - aabb_of(carried).min.z();
    return std::max(centroid_z, below + lift_clearance);
}

/// Plan all C(n,2) unordered object pairs of a frame. Failures are recorded
/// per pair and never abort the frame. Per-pair seeds derive from
/// (scene, frame, source, target, seed), so results are independent of
/// scheduling order.
inline TrajectoryBatch plan_pair_trajectories(const SceneFrame& frame,
                                              const ModelTable& models,
                                              const WorldTransform& world,
                                              const PlannerParams& params,
                                              std::uint64_t seed) {
    TrajectoryBatch batch;
    const std::vector<Cuboid3D> cuboids = frame_cuboids_world(frame, models, world);
    const std::size_t n = cuboids.size();
    if (n < 2) return batch;

    const SamplingBounds bounds = sampling_bounds(cuboids, params.margin);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const int src = frame.instances[i].instance_id;
            const int tgt = frame.instances[j].instance_id;
            ObstacleSet obstacles;
            obstacles.inflation = params.inflation;
            for (std::size_t k = 0; k < n; ++k)
                if (k != i && k != j) obstacles.aabbs.push_back(aabb_of(cuboids[k]));

            Vec3 start = cuboids[i].center();
            start.z() = lifted_z(cuboids[i], start.z(), params.lift_clearance);
            Vec3 goal = cuboids[j].center();
            goal.z() = lifted_z(cuboids[i], goal.z(), params.lift_clearance);

            const std::uint64_t pair_seed =
                mix_seed(seed, static_cast<std::uint64_t>(frame.scene_id),
                         static_cast<std::uint64_t>(frame.frame_id),
                         static_cast<std::uint64_t>(src),
                         static_cast<std::uint64_t>(tgt));
            try {
                const std::vector<Vec3> raw =
                    rrt_plan(start, goal, obstacles, bounds, params, pair_seed);
                Trajectory traj;
                traj.source_id = src;
                traj.target_id = tgt;
                traj.waypoints_3d = rdp_simplify_validated(raw, params.rdp_tol,
                                                           obstacles, params.edge_step);
                traj.waypoints_2d.reserve(traj.waypoints_3d.size());
                for (const Vec3& w : traj.waypoints_3d)
                    traj.waypoints_2d.push_back(round_clamp(
                        project_point(world.to_cam_mm(w), frame.intrinsics),
                        frame.intrinsics));
                batch.trajectories.push_back(std::move(traj));
            } catch (const PlanError& e) {
                batch.failures.push_back({src, tgt, e.what()});
            } catch (const GeometryError& e) {
                batch.failures.push_back({src, tgt, e.what()});
            }
        }
    }
    return batch;
}

/// Answer serialization: <points x="U" y="V">pointK</points> in path order.
inline std::string trajectory_answer_string(const std::vector<PixelPoint>& pts) {
    std::string s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        s += "<points x=\"" + std::to_string(static_cast<long long>(pts[i].u)) +
             "\" y=\"" + std::to_string(static_cast<long long>(pts[i].v)) +
             "\">point" + std::to_string(i + 1) + "</points>";
    }
    return s;
}

}  // namespace bopask

#endif  // BOPASK_MOTION_PLANNER_HPP
