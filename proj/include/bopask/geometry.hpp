#ifndef BOPASK_GEOMETRY_HPP
#define BOPASK_GEOMETRY_HPP

#include <array>
#include <string>
#include <vector>

#include "bopask/camera.hpp"
#include "bopask/pose.hpp"

namespace bopask {

// ---------------------------------------------------------------------------
// Oriented cuboid
// ---------------------------------------------------------------------------

/// Oriented box: `pose` maps the cuboid frame into some reference frame
/// (camera or world), half extents in millimeters.
///
/// Canonical corner order: corner index bits (b2 b1 b0) select the sign of
/// (z y x): bit set = positive. Serialized answers list corners in this
/// order.
struct Cuboid3D {
    Pose pose;
    Vec3 half_extents = Vec3::Zero();

    std::array<Vec3, 8> corners() const {
        std::array<Vec3, 8> out;
        for (int i = 0; i < 8; ++i) {
            const Vec3 local((i & 1) ? half_extents.x() : -half_extents.x(),
                             (i & 2) ? half_extents.y() : -half_extents.y(),
                             (i & 4) ? half_extents.z() : -half_extents.z());
            out[i] = pose.apply(local);
        }
        return out;
    }

    Vec3 center() const { return pose.translation; }

    double volume() const {
        return 8.0 * half_extents.x() * half_extents.y() * half_extents.z();
    }

    /// Same cuboid expressed in another frame: `frame_change` maps this
    /// cuboid's reference frame into the new one.
    Cuboid3D in_frame(const Pose& frame_change) const {
        return {frame_change.compose(pose), half_extents};
    }

    Cuboid3D inflated(double margin) const {
        return {pose, half_extents + Vec3::Constant(margin)};
    }
};

struct Aabb {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    bool contains(const Vec3& p, double margin = 0.0) const {
        return p.x() >= min.x() - margin && p.x() <= max.x() + margin &&
               p.y() >= min.y() - margin && p.y() <= max.y() + margin &&
               p.z() >= min.z() - margin && p.z() <= max.z() + margin;
    }

    Aabb inflated(double margin) const {
        return {min - Vec3::Constant(margin), max + Vec3::Constant(margin)};
    }
};

inline Aabb aabb_of(const Cuboid3D& c) {
    Aabb box;
    const auto pts = c.corners();
    box.min = box.max = pts[0];
    for (const Vec3& p : pts) {
        box.min = box.min.cwiseMin(p);
        box.max = box.max.cwiseMax(p);
    }
    return box;
}

/// OBB-vs-OBB separating axis test. Touching boxes count as intersecting.
inline bool obb_intersects(const Cuboid3D& a, const Cuboid3D& b) {
    constexpr double kEps = 1e-9;
    const Mat3 ra = a.pose.rotation;
    const Mat3 rb = b.pose.rotation;
    const Mat3 r = ra.transpose() * rb;           // b axes in a's frame
    const Mat3 abs_r = r.cwiseAbs() + Mat3::Constant(kEps);
    const Vec3 t = ra.transpose() * (b.pose.translation - a.pose.translation);
    const Vec3& ea = a.half_extents;
    const Vec3& eb = b.half_extents;

    // a's face axes
    for (int i = 0; i < 3; ++i) {
        const double rb_proj = abs_r.row(i).dot(eb);
        if (std::abs(t[i]) > ea[i] + rb_proj + kEps) return false;
    }
    // b's face axes
    for (int j = 0; j < 3; ++j) {
        const double ra_proj = abs_r.col(j).dot(ea);
        if (std::abs(t.dot(r.col(j))) > ra_proj + eb[j] + kEps) return false;
    }
    // cross-product axes
    for (int i = 0; i < 3; ++i) {
        const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
        for (int j = 0; j < 3; ++j) {
            const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
            const double ta = std::abs(t[i2] * r(i1, j) - t[i1] * r(i2, j));
            const double ra_proj = ea[i1] * abs_r(i2, j) + ea[i2] * abs_r(i1, j);
            const double rb_proj = eb[j1] * abs_r(i, j2) + eb[j2] * abs_r(i, j1);
            if (ta > ra_proj + rb_proj + kEps) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Exact cuboid intersection volume by successive half-space clipping
// ---------------------------------------------------------------------------

namespace detail {

using Polygon3 = std::vector<Vec3>;
using Polytope = std::vector<Polygon3>;

// Outward-wound quad faces for the canonical corner order above.
inline Polytope polytope_of(const Cuboid3D& c) {
    static constexpr int kFaces[6][4] = {
        {0, 2, 3, 1},  // -z
        {4, 5, 7, 6},  // +z
        {0, 4, 6, 2},  // -x
        {1, 3, 7, 5},  // +x
        {0, 1, 5, 4},  // -y
        {2, 6, 7, 3},  // +y
    };
    const auto pts = c.corners();
    Polytope faces;
    faces.reserve(6);
    for (const auto& f : kFaces)
        faces.push_back({pts[f[0]], pts[f[1]], pts[f[2]], pts[f[3]]});
    return faces;
}

// Clip the polytope against half-space n.x <= d, sealing the cut with a cap
// face whose outward normal is +n.
inline Polytope clip_polytope(const Polytope& poly, const Vec3& n, double d,
                              double eps) {
    Polytope out;
    std::vector<Vec3> cap_points;
    for (const Polygon3& face : poly) {
        Polygon3 kept;
        const std::size_t m = face.size();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec3& a = face[i];
            const Vec3& b = face[(i + 1) % m];
            const double da = n.dot(a) - d;
            const double db = n.dot(b) - d;
            const bool a_in = da <= eps;
            const bool b_in = db <= eps;
            if (a_in) kept.push_back(a);
            if (a_in != b_in) {
                const double t = da / (da - db);
                const Vec3 x = a + t * (b - a);
                kept.push_back(x);
                cap_points.push_back(x);
            }
        }
        if (kept.size() >= 3) out.push_back(std::move(kept));
    }
    // Build the cap polygon from the crossing points.
    if (cap_points.size() >= 3) {
        std::vector<Vec3> unique;
        for (const Vec3& p : cap_points) {
            bool dup = false;
            for (const Vec3& q : unique)
                if ((p - q).squaredNorm() < eps * eps) { dup = true; break; }
            if (!dup) unique.push_back(p);
        }
        if (unique.size() >= 3) {
            Vec3 centroid = Vec3::Zero();
            for (const Vec3& p : unique) centroid += p;
            centroid /= static_cast<double>(unique.size());
            const Vec3 e1 = (std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY())
                                .cross(n)
                                .normalized();
            const Vec3 e2 = n.cross(e1);
            std::sort(unique.begin(), unique.end(), [&](const Vec3& a, const Vec3& b) {
                const Vec3 pa = a - centroid, pb = b - centroid;
                return std::atan2(pa.dot(e2), pa.dot(e1)) <
                       std::atan2(pb.dot(e2), pb.dot(e1));
            });
            out.push_back(std::move(unique));
        }
    }
    return out;
}

// Divergence theorem over outward-wound faces.
inline double polytope_volume(const Polytope& poly) {
    double six_v = 0.0;
    for (const Polygon3& face : poly)
        for (std::size_t i = 1; i + 1 < face.size(); ++i)
            six_v += face[0].dot(face[i].cross(face[i + 1]));
    return six_v / 6.0;
}

}  // namespace detail

/// Exact intersection volume of two oriented cuboids (mm^3): cuboid `a`'s
/// polytope clipped by each of `b`'s six face half-spaces.
inline double cuboid_intersection_volume(const Cuboid3D& a, const Cuboid3D& b) {
    constexpr double kEps = 1e-9;
    detail::Polytope poly = detail::polytope_of(a);
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign = -1; sign <= 1; sign += 2) {
            const Vec3 n = sign * b.pose.rotation.col(axis);
            const double d = n.dot(b.pose.translation) + b.half_extents[axis];
            poly = detail::clip_polytope(poly, n, d, kEps);
            if (poly.empty()) return 0.0;
        }
    }
    return std::max(0.0, detail::polytope_volume(poly));
}

/// Volumetric intersection-over-union of two oriented cuboids in a shared
/// reference frame. Disjoint boxes score 0, identical boxes 1.
inline double iou3d(const Cuboid3D& a, const Cuboid3D& b) {
    const double inter = cuboid_intersection_volume(a, b);
    const double uni = a.volume() + b.volume() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

// ---------------------------------------------------------------------------
// 2D convex polygon utilities (pixel space)
// ---------------------------------------------------------------------------

using Polygon2 = std::vector<PixelPoint>;

namespace detail {
inline double cross2(const PixelPoint& o, const PixelPoint& a, const PixelPoint& b) {
    return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}
}  // namespace detail

/// Andrew monotone chain, counter-clockwise in (u, v) coordinates. When all
/// points are collinear the strict hull would collapse below three vertices;
/// the sorted unique point sequence is returned instead (a zero-area
/// polygon that still supports containment tests).
inline Polygon2 convex_hull(std::vector<PixelPoint> pts) {
    std::sort(pts.begin(), pts.end(), [](const PixelPoint& a, const PixelPoint& b) {
        return a.u < b.u || (a.u == b.u && a.v < b.v);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const PixelPoint& a, const PixelPoint& b) {
                              return a.u == b.u && a.v == b.v;
                          }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;

    Polygon2 hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && detail::cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && detail::cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) return pts;  // collinear input
    return hull;
}

inline double polygon_area(const Polygon2& poly) {
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const PixelPoint& a = poly[i];
        const PixelPoint& b = poly[(i + 1) % poly.size()];
        twice += a.u * b.v - b.u * a.v;
    }
    return std::abs(twice) * 0.5;
}

/// Boundary-inclusive containment for a counter-clockwise convex polygon.
inline bool point_in_convex(const PixelPoint& p, const Polygon2& poly,
                            double eps = 1e-6) {
    if (poly.empty()) return false;
    if (poly.size() == 1)
        return std::abs(p.u - poly[0].u) <= eps && std::abs(p.v - poly[0].v) <= eps;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const PixelPoint& a = poly[i];
        const PixelPoint& b = poly[(i + 1) % poly.size()];
        if (detail::cross2(a, b, p) < -eps) return false;
    }
    return true;
}

/// Sutherland-Hodgman intersection of two counter-clockwise convex polygons.
inline Polygon2 clip_convex(const Polygon2& subject, const Polygon2& clip) {
    Polygon2 out = subject;
    for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
        const PixelPoint& a = clip[i];
        const PixelPoint& b = clip[(i + 1) % clip.size()];
        Polygon2 next;
        for (std::size_t j = 0; j < out.size(); ++j) {
            const PixelPoint& p = out[j];
            const PixelPoint& q = out[(j + 1) % out.size()];
            const double dp = detail::cross2(a, b, p);
            const double dq = detail::cross2(a, b, q);
            if (dp >= 0) next.push_back(p);
            if ((dp >= 0) != (dq >= 0)) {
                const double t = dp / (dp - dq);
                next.push_back({p.u + t * (q.u - p.u), p.v + t * (q.v - p.v)});
            }
        }
        out = std::move(next);
    }
    return out;
}

/// Area IoU of the convex hulls of two point sets; the reported pose score
/// for pixel-space predictions. Order-free in both point lists.
inline double hull_iou(const std::vector<PixelPoint>& a,
                       const std::vector<PixelPoint>& b) {
    const Polygon2 ha = convex_hull(a);
    const Polygon2 hb = convex_hull(b);
    const double area_a = polygon_area(ha);
    const double area_b = polygon_area(hb);
    if (ha.size() < 3 || hb.size() < 3) return 0.0;
    const double inter = polygon_area(clip_convex(ha, hb));
    const double uni = area_a + area_b - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

// ---------------------------------------------------------------------------
// Camera-facing operations
// ---------------------------------------------------------------------------

/// 2D convex hull of the eight projected corners, counter-clockwise.
/// Throws behind_camera if any corner has z <= 0.
inline Polygon2 projected_hull(const Cuboid3D& cuboid_cam, const CameraIntrinsics& k) {
    const auto pts3 = cuboid_cam.corners();
    std::vector<PixelPoint> px;
    px.reserve(8);
    for (const Vec3& p : pts3) px.push_back(project_point(p, k));
    return convex_hull(px);
}

/// Projected corners in canonical order, rounded and clamped to the image.
inline std::array<PixelPoint, 8> projected_corners(const Cuboid3D& cuboid_cam,
                                                   const CameraIntrinsics& k) {
    const auto pts3 = cuboid_cam.corners();
    std::array<PixelPoint, 8> out;
    for (int i = 0; i < 8; ++i) out[i] = round_clamp(project_point(pts3[i], k), k);
    return out;
}

/// Answer serialization for cuboid corners: {"bbox": [[u1, v1], ...]}.
inline std::string bbox_answer_string(const std::array<PixelPoint, 8>& pts) {
    std::string s = "{\"bbox\": [";
    for (int i = 0; i < 8; ++i) {
        if (i) s += ", ";
        s += "[" + std::to_string(static_cast<long long>(pts[i].u)) + ", " +
             std::to_string(static_cast<long long>(pts[i].v)) + "]";
    }
    s += "]}";
    return s;
}

}  // namespace bopask

#endif  // BOPASK_GEOMETRY_HPP
