#ifndef BOPASK_CAMERA_HPP
#define BOPASK_CAMERA_HPP

#include <vector>

#include "bopask/pose.hpp"

namespace bopask {

/// Pinhole intrinsics plus the raw-depth scale of the source dataset.
/// `depth_scale` converts stored 16-bit depth values to millimeters.
struct CameraIntrinsics {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    int width = 0, height = 0;
    double depth_scale = 1.0;

    bool valid() const {
        return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 &&
               cx < width && cy >= 0 && cy < height && depth_scale > 0;
    }
};

/// Image-space point. Fractional while being computed; rounded and clamped
/// to the image rectangle whenever it is emitted in an answer.
struct PixelPoint {
    double u = 0, v = 0;
};

/// Round half away from zero, then clamp into [0, width-1] x [0, height-1].
inline PixelPoint round_clamp(const PixelPoint& p, const CameraIntrinsics& k) {
    PixelPoint out;
    out.u = std::clamp<double>(static_cast<double>(std::llround(p.u)), 0.0, k.width - 1.0);
    out.v = std::clamp<double>(static_cast<double>(std::llround(p.v)), 0.0, k.height - 1.0);
    return out;
}

/// Project one camera-frame point (any length unit, z > 0) to pixels.
inline PixelPoint project_point(const Vec3& p, const CameraIntrinsics& k) {
    if (p.z() <= 0.0)
        throw GeometryError(GeometryCode::behind_camera,
                            "point at or behind the camera plane");
    return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

inline std::vector<PixelPoint> project_points(const std::vector<Vec3>& pts,
                                              const CameraIntrinsics& k) {
    std::vector<PixelPoint> out;
    out.reserve(pts.size());
    for (const Vec3& p : pts) out.push_back(project_point(p, k));
    return out;
}

/// Inverse of project_point for a known depth z (same unit as z).
inline Vec3 backproject_pixel(double u, double v, double z, const CameraIntrinsics& k) {
    return {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

}  // namespace bopask

#endif  // BOPASK_CAMERA_HPP
