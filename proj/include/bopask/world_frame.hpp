#ifndef BOPASK_WORLD_FRAME_HPP
#define BOPASK_WORLD_FRAME_HPP

#include <limits>

#include "bopask/bop_ingest.hpp"
#include "bopask/geometry.hpp"

namespace bopask {

/// Sparse back-projected depth, camera frame, meters. `pixel_indices`
/// keeps v*width+u of the source pixel for every point.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<int> pixel_indices;

    std::size_t size() const { return points.size(); }
};

/// n . x = d with unit normal; offsets in meters.
struct Plane {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0;
    std::vector<int> inlier_indices;  // indices into the fitted cloud

    double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

/// Recovered camera-to-world transform. Translation in meters; +Z is the
/// world up axis and z = 0 is the support-plane surface.
struct WorldTransform {
    Pose cam_to_world;
    double inlier_ratio = 0;
    double rms_residual = 0;  // meters

    Vec3 to_world_mm(const Vec3& p_cam_mm) const {
        return cam_to_world.rotation * p_cam_mm + cam_to_world.translation * 1000.0;
    }
    Vec3 to_cam_mm(const Vec3& p_world_mm) const {
        return cam_to_world.rotation.transpose() *
               (p_world_mm - cam_to_world.translation * 1000.0);
    }
    /// Same transform with millimeter translation, for composing with
    /// millimeter object poses.
    Pose cam_to_world_pose_mm() const {
        return {cam_to_world.rotation, cam_to_world.translation * 1000.0};
    }
};

struct WorldFrameParams {
    int ransac_iterations = 1000;
    double inlier_tol = 0.008;  // meters
    int max_cloud_points = 50000;
    bool yaw_refine = true;
    // Reject candidate planes whose camera-facing normal is more than 60
    // degrees away from both -Y and -Z; keeps walls out of tabletop scenes.
    bool restrict_normal = true;
    std::uint64_t seed = 0;
};

/// Pinhole back-projection of every stride-th pixel with valid depth.
/// Output in meters (raw depth * depth_scale is millimeters).
inline PointCloud backproject_depth(const SceneFrame& frame, int stride = 1) {
    if (stride < 1) stride = 1;
    const CameraIntrinsics& k = frame.intrinsics;
    PointCloud cloud;
    for (int v = 0; v < frame.depth.height; v += stride) {
        for (int u = 0; u < frame.depth.width; u += stride) {
            const std::uint16_t raw = frame.depth.at(v, u);
            if (raw == 0) continue;
            const double z = raw * k.depth_scale / 1000.0;
            cloud.points.push_back(backproject_pixel(u, v, z, k));
            cloud.pixel_indices.push_back(v * frame.depth.width + u);
        }
    }
    if (cloud.points.empty())
        throw WorldFrameError(WorldFrameCode::no_depth,
                              "no valid depth pixels in frame " +
                                  std::to_string(frame.frame_id));
    return cloud;
}

namespace detail {

inline bool normal_in_camera_hemisphere(const Vec3& n_toward_camera) {
    constexpr double kCos60 = 0.5;
    return -n_toward_camera.y() >= kCos60 || -n_toward_camera.z() >= kCos60;
}

// Least-squares plane through the given subset: centroid + smallest
// principal direction of the scatter matrix.
inline Plane fit_plane_lsq(const PointCloud& cloud, const std::vector<int>& subset) {
    Vec3 centroid = Vec3::Zero();
    for (int i : subset) centroid += cloud.points[static_cast<std::size_t>(i)];
    centroid /= static_cast<double>(subset.size());
    Mat3 scatter = Mat3::Zero();
    for (int i : subset) {
        const Vec3 d = cloud.points[static_cast<std::size_t>(i)] - centroid;
        scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    Plane plane;
    plane.normal = eig.eigenvectors().col(0).normalized();
    plane.offset = plane.normal.dot(centroid);
    return plane;
}

}  // namespace detail

/// RANSAC plane fit: best triplet by inlier count, then least-squares
/// refinement over its inliers. Deterministic for a fixed seed.
inline Plane ransac_plane(const PointCloud& cloud, int iterations, double inlier_tol,
                          std::uint64_t seed, bool restrict_normal = false) {
    const std::size_t n = cloud.size();
    if (n < 3)
        throw WorldFrameError(WorldFrameCode::degenerate,
                              "plane fit needs at least 3 points");
    if (iterations < 1 || inlier_tol <= 0)
        throw std::invalid_argument("ransac_plane: bad parameters");

    Rng rng(mix_seed(seed, 0x9a5cb1u));
    Vec3 best_normal = Vec3::Zero();
    double best_offset = 0;
    long best_count = -1;

    for (int it = 0; it < iterations; ++it) {
        const std::size_t i0 = rng.uniform_int(n);
        std::size_t i1 = rng.uniform_int(n);
        while (i1 == i0) i1 = rng.uniform_int(n);
        std::size_t i2 = rng.uniform_int(n);
        while (i2 == i0 || i2 == i1) i2 = rng.uniform_int(n);

        const Vec3& a = cloud.points[i0];
        Vec3 normal = (cloud.points[i1] - a).cross(cloud.points[i2] - a);
        const double len = normal.norm();
        if (len < 1e-12) continue;  // collinear triplet
        normal /= len;
        double offset = normal.dot(a);
        // Orient toward the camera at the origin: positive side holds it.
        if (offset > 0) {
            normal = -normal;
            offset = -offset;
        }
        if (restrict_normal && !detail::normal_in_camera_hemisphere(normal)) continue;

        long count = 0;
        for (const Vec3& p : cloud.points)
            if (std::abs(normal.dot(p) - offset) <= inlier_tol) ++count;
        if (count > best_count) {
            best_count = count;
            best_normal = normal;
            best_offset = offset;
        }
    }
    if (best_count < 0)
        throw WorldFrameError(WorldFrameCode::degenerate,
                              "all sampled triplets degenerate or rejected");

    // Collect inliers of the best sample, refine, re-collect.
    std::vector<int> inliers;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(best_normal.dot(cloud.points[i]) - best_offset) <= inlier_tol)
            inliers.push_back(static_cast<int>(i));

    Plane refined = detail::fit_plane_lsq(cloud, inliers);
    if (refined.normal.dot(best_normal) < 0) {
        refined.normal = -refined.normal;
        refined.offset = -refined.offset;
    }
    refined.inlier_indices.clear();
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(refined.signed_distance(cloud.points[i])) <= inlier_tol)
            refined.inlier_indices.push_back(static_cast<int>(i));
    if (refined.inlier_indices.empty()) refined.inlier_indices = inliers;
    return refined;
}

/// Camera-frame cuboid center of an instance, millimeters.
inline Vec3 instance_centroid_cam_mm(const ObjectInstance& inst, const ModelTable& models) {
    const ModelInfo& m = models.at(inst.obj_id);
    return inst.pose_cam.apply(m.center_offset);
}

/// Flip the plane normal, if needed, so the mean signed distance of the
/// object centroids is positive (objects sit on the normal side). Ties keep
/// the input orientation.
inline Plane resolve_plane_ambiguity(const Plane& plane,
                                     const std::vector<ObjectInstance>& instances,
                                     const ModelTable& models) {
    if (instances.empty()) return plane;
    double mean = 0;
    for (const ObjectInstance& inst : instances)
        mean += plane.signed_distance(instance_centroid_cam_mm(inst, models) / 1000.0);
    mean /= static_cast<double>(instances.size());
    if (mean >= -1e-9) return plane;
    Plane flipped = plane;
    flipped.normal = -plane.normal;
    flipped.offset = -plane.offset;
    return flipped;
}

/// Rotation taking the canonical up axis (0,0,1) onto `n_p`, built from the
/// axis-angle (Rodrigues) form. The antiparallel case rotates 180 degrees
/// about the fixed fallback axis (1,0,0).
inline Mat3 rodrigues_align(const Vec3& n_p) {
    const Vec3 vz = Vec3::UnitZ();
    const double c = vz.dot(n_p);
    if (c < -1.0 + 1e-12) {
        Mat3 flip;
        flip << 1, 0, 0, 0, -1, 0, 0, 0, -1;  // pi about x
        return flip;
    }
    const Vec3 axis = vz.cross(n_p);
    const Mat3 k = skew(axis);
    return Mat3::Identity() + k + k * k / (1.0 + c);
}

/// Rotate about world Z so the first principal component of the plane
/// inliers (projected through R_partial) lands on +X. Near-isotropic inlier
/// spreads (eigenvalue ratio < 1.05) leave the rotation untouched.
inline Mat3 refine_yaw(const Plane& plane, const PointCloud& cloud,
                       const Mat3& r_partial) {
    if (plane.inlier_indices.size() < 2) return r_partial;

    std::vector<Vec2> xy;
    xy.reserve(plane.inlier_indices.size());
    Vec2 mean = Vec2::Zero();
    for (int i : plane.inlier_indices) {
        const Vec3 w = r_partial * cloud.points[static_cast<std::size_t>(i)];
        xy.push_back(w.head<2>());
        mean += xy.back();
    }
    mean /= static_cast<double>(xy.size());

    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (Vec2& p : xy) {
        p -= mean;
        cov += p * p.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const double lo = std::max(eig.eigenvalues()(0), 0.0);
    const double hi = eig.eigenvalues()(1);
    if (hi <= 0 || (lo > 0 && hi / lo < 1.05)) return r_partial;

    Vec2 pc = eig.eigenvectors().col(1).normalized();
    double smax = -std::numeric_limits<double>::infinity();
    double smin = std::numeric_limits<double>::infinity();
    for (const Vec2& p : xy) {
        const double s = p.dot(pc);
        smax = std::max(smax, s);
        smin = std::min(smin, s);
    }
    const double tie = 1e-9 * std::max(1.0, smax - smin);
    if (smax + smin < -tie) {
        pc = -pc;
    } else if (std::abs(smax + smin) <= tie) {
        // Symmetric spread: canonical sign.
        if (pc.x() < 0 || (pc.x() == 0 && pc.y() < 0)) pc = -pc;
    }
    const double theta = std::atan2(pc.y(), pc.x());
    return rot_z(-theta) * r_partial;
}

/// Full per-frame world-frame construction: strided back-projection, RANSAC
/// support plane, orientation disambiguation, Rodrigues alignment, PCA yaw
/// refinement, and table-height translation (median inlier z goes to 0).
inline WorldTransform build_world_transform(const SceneFrame& frame,
                                            const ModelTable& models,
                                            const WorldFrameParams& params = {}) {
    const double total_px =
        static_cast<double>(frame.depth.width) * frame.depth.height;
    int stride = std::max(
        1, static_cast<int>(std::ceil(std::sqrt(total_px / params.max_cloud_points))));
    PointCloud cloud = backproject_depth(frame, stride);

    Plane plane = ransac_plane(cloud, params.ransac_iterations, params.inlier_tol,
                               params.seed, params.restrict_normal);
    plane = resolve_plane_ambiguity(plane, frame.instances, models);

    const Mat3 r0 = rodrigues_align(plane.normal).transpose();
    const Mat3 r_cw = params.yaw_refine ? refine_yaw(plane, cloud, r0) : r0;

    std::vector<double> zs;
    zs.reserve(plane.inlier_indices.size());
    double sq_sum = 0;
    for (int i : plane.inlier_indices) {
        const Vec3 w = r_cw * cloud.points[static_cast<std::size_t>(i)];
        zs.push_back(w.z());
        const double r = plane.signed_distance(cloud.points[static_cast<std::size_t>(i)]);
        sq_sum += r * r;
    }
    const double table_z = median(zs);

    WorldTransform out;
    out.cam_to_world.rotation = r_cw;
    out.cam_to_world.translation = Vec3(0, 0, -table_z);
    out.inlier_ratio =
        static_cast<double>(plane.inlier_indices.size()) / static_cast<double>(cloud.size());
    out.rms_residual =
        std::sqrt(sq_sum / static_cast<double>(plane.inlier_indices.size()));
    return out;
}

}  // namespace bopask

#endif  // BOPASK_WORLD_FRAME_HPP
