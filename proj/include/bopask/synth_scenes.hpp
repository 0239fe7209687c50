#ifndef BOPASK_SYNTH_SCENES_HPP
#define BOPASK_SYNTH_SCENES_HPP

#include <map>
#include <set>

#include "bopask/scene_geometry.hpp"

namespace bopask {

// ---------------------------------------------------------------------------
// Scene specification
// ---------------------------------------------------------------------------

struct SynthObject {
    enum class Shape { box, cylinder };
    Shape shape = Shape::box;
    Vec3 size = Vec3::Zero();  // box: extents; cylinder: (d, d, h), mm
    Pose pose_world;           // model frame centered at the object center, mm
    std::string description;
};

/// Deterministic synthetic tabletop scene: bounded table plate at z = 0,
/// primitive objects, one camera pose per frame (cam->world, translation mm).
struct SynthSpec {
    std::string name;
    std::uint64_t seed = 0;
    double table_x = 1200, table_y = 800;  // mm extents of the table plate
    CameraIntrinsics intrinsics;
    std::vector<Pose> cameras;  // one frame per camera pose
    std::vector<SynthObject> objects;
    double depth_noise_sigma = 0;  // mm, additive Gaussian
};

/// Everything the renderer knows exactly, for use as test oracles.
struct SynthGroundTruth {
    WorldTransform cam_to_world;               // exact, translation meters
    std::vector<Cuboid3D> cuboids_world;       // mm
    std::vector<Cuboid3D> cuboids_cam;         // mm
    std::vector<std::pair<int, int>> near_contacts;  // inflated-box adjacency
};

inline CameraIntrinsics default_synth_intrinsics() {
    CameraIntrinsics k;
    k.fx = k.fy = 570;
    k.cx = 320;
    k.cy = 240;
    k.width = 640;
    k.height = 480;
    k.depth_scale = 0.1;  // 0.1 mm quantization
    return k;
}

/// cam->world look-at with world +Z up and CV axis convention
/// (+X right, +Y down, +Z forward).
inline Pose look_at(const Vec3& eye_mm, const Vec3& target_mm) {
    const Vec3 fwd = (target_mm - eye_mm).normalized();
    Vec3 up = Vec3::UnitZ();
    if (std::abs(fwd.dot(up)) > 0.999) up = Vec3::UnitY();
    const Vec3 right = fwd.cross(up).normalized();
    const Vec3 down = fwd.cross(right);
    Pose p;
    p.rotation.col(0) = right;
    p.rotation.col(1) = down;
    p.rotation.col(2) = fwd;
    p.translation = eye_mm;
    return p;
}

// ---------------------------------------------------------------------------
// Ray casting
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<double> ray_box_local(const Vec3& o, const Vec3& d,
                                           const Vec3& half) {
    double t_near = -1e300, t_far = 1e300;
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-12) {
            if (std::abs(o[a]) > half[a]) return std::nullopt;
            continue;
        }
        double t0 = (-half[a] - o[a]) / d[a];
        double t1 = (half[a] - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far) return std::nullopt;
    }
    if (t_far < 1e-9) return std::nullopt;
    return t_near > 1e-9 ? t_near : t_far;
}

inline std::optional<double> ray_cylinder_local(const Vec3& o, const Vec3& d,
                                                double radius, double half_h) {
    double best = 1e300;
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a > 1e-12) {
        const double b = 2 * (o.x() * d.x() + o.y() * d.y());
        const double c = o.x() * o.x() + o.y() * o.y() - radius * radius;
        const double disc = b * b - 4 * a * c;
        if (disc >= 0) {
            const double sq = std::sqrt(disc);
            for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
                if (t > 1e-9 && t < best && std::abs(o.z() + t * d.z()) <= half_h)
                    best = t;
            }
        }
    }
    if (std::abs(d.z()) > 1e-12) {
        for (double zcap : {-half_h, half_h}) {
            const double t = (zcap - o.z()) / d.z();
            if (t > 1e-9 && t < best) {
                const double x = o.x() + t * d.x(), y = o.y() + t * d.y();
                if (x * x + y * y <= radius * radius) best = t;
            }
        }
    }
    if (best >= 1e300) return std::nullopt;
    return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Rendering and ground truth
// ---------------------------------------------------------------------------

/// Ray-cast depth of one frame. Depth is the camera-frame z coordinate,
/// quantized by depth_scale; rays that miss everything store 0. Noise is
/// seeded per (spec.seed, frame) and applied before quantization.
inline DepthImage render_depth_image(const SynthSpec& spec, std::size_t frame_idx) {
    const Pose& cam = spec.cameras.at(frame_idx);
    if (cam.translation.z() <= 0)
        throw SynthError(SynthCode::camera_pose, "camera at or below the table plane");
    const CameraIntrinsics& k = spec.intrinsics;

    std::vector<Pose> world_to_local;
    world_to_local.reserve(spec.objects.size());
    for (const SynthObject& obj : spec.objects)
        world_to_local.push_back(obj.pose_world.inverse());

    Rng noise(mix_seed(spec.seed, static_cast<std::uint64_t>(frame_idx), 0x6e6fu));
    DepthImage img;
    img.width = k.width;
    img.height = k.height;
    img.data.assign(static_cast<std::size_t>(k.width) * k.height, 0);

    for (int v = 0; v < k.height; ++v) {
        for (int u = 0; u < k.width; ++u) {
            const Vec3 dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
            const Vec3 dir = cam.rotation * dir_cam;
            const Vec3& orig = cam.translation;

            double best = 1e300;
            // table plate at z = 0
            if (std::abs(dir.z()) > 1e-12) {
                const double t = -orig.z() / dir.z();
                if (t > 1e-9 && t < best) {
                    const Vec3 p = orig + t * dir;
                    if (std::abs(p.x()) <= spec.table_x / 2 &&
                        std::abs(p.y()) <= spec.table_y / 2)
                        best = t;
                }
            }
            for (std::size_t i = 0; i < spec.objects.size(); ++i) {
                const SynthObject& obj = spec.objects[i];
                const Vec3 lo = world_to_local[i].apply(orig);
                const Vec3 ld = world_to_local[i].rotation * dir;
                std::optional<double> t;
                if (obj.shape == SynthObject::Shape::box)
                    t = detail::ray_box_local(lo, ld, obj.size * 0.5);
                else
                    t = detail::ray_cylinder_local(lo, ld, obj.size.x() * 0.5,
                                                   obj.size.z() * 0.5);
                if (t && *t < best) best = *t;
            }
            if (best >= 1e300) continue;
            double depth_mm = best;  // dir_cam.z == 1, so t is camera z
            if (spec.depth_noise_sigma > 0)
                depth_mm += spec.depth_noise_sigma * noise.gaussian();
            const double raw = std::round(depth_mm / k.depth_scale);
            if (raw >= 1 && raw <= 65535)
                img.at(v, u) = static_cast<std::uint16_t>(raw);
        }
    }
    return img;
}

/// Deterministic model table for the spec: one obj_id per distinct
/// (shape, size), meshes synthesized from the primitives.
inline ModelTable synth_model_table(const SynthSpec& spec) {
    ModelTable table;
    std::map<std::string, int> ids;
    for (const SynthObject& obj : spec.objects) {
        char key[64];
        std::snprintf(key, sizeof(key), "%d_%.3f_%.3f_%.3f",
                      static_cast<int>(obj.shape), obj.size.x(), obj.size.y(),
                      obj.size.z());
        if (ids.count(key)) continue;
        const int obj_id = static_cast<int>(ids.size()) + 1;
        ids[key] = obj_id;

        ModelInfo m;
        m.obj_id = obj_id;
        m.size = obj.size;
        m.diameter = obj.size.norm();
        m.center_offset = Vec3::Zero();
        if (obj.shape == SynthObject::Shape::box) {
            m.mesh = make_box_mesh(obj.size);
            m.category_name = "box";
        } else {
            m.mesh = make_cylinder_mesh(obj.size.x(), obj.size.z());
            m.category_name = "cylinder";
        }
        m.description = obj.description.empty() ? m.category_name : obj.description;
        table[obj_id] = std::move(m);
    }
    return table;
}

inline int synth_obj_id(const ModelTable& table, const SynthObject& obj) {
    const bool cyl = obj.shape == SynthObject::Shape::cylinder;
    for (const auto& [id, m] : table) {
        const bool m_cyl = m.category_name == "cylinder";
        if (cyl == m_cyl && (m.size - obj.size).norm() < 1e-9) return id;
    }
    throw SynthError(SynthCode::unknown_fixture, "object not in the synth table");
}

struct SynthFrameResult {
    SceneFrame frame;
    SynthGroundTruth gt;
};

/// Render one frame and bundle the exact ground truth.
inline SynthFrameResult render_frame(const SynthSpec& spec, const ModelTable& models,
                                     std::size_t frame_idx, int scene_id = 0,
                                     double contact_inflation = 5.0) {
    const Pose& cam = spec.cameras.at(frame_idx);
    SynthFrameResult out;
    out.frame.scene_id = scene_id;
    out.frame.frame_id = static_cast<int>(frame_idx);
    out.frame.intrinsics = spec.intrinsics;
    out.frame.depth = render_depth_image(spec, frame_idx);

    const Pose world_to_cam = cam.inverse();
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        const SynthObject& obj = spec.objects[i];
        ObjectInstance inst;
        inst.instance_id = static_cast<int>(i);
        inst.obj_id = synth_obj_id(models, obj);
        inst.pose_cam = world_to_cam.compose(obj.pose_world);
        out.frame.instances.push_back(inst);

        Cuboid3D world_cuboid{obj.pose_world, obj.size * 0.5};
        out.gt.cuboids_world.push_back(world_cuboid);
        out.gt.cuboids_cam.push_back(world_cuboid.in_frame(world_to_cam));
    }
    out.gt.cam_to_world.cam_to_world = {cam.rotation, cam.translation / 1000.0};
    out.gt.cam_to_world.inlier_ratio = 1.0;

    for (std::size_t i = 0; i < out.gt.cuboids_world.size(); ++i)
        for (std::size_t j = i + 1; j < out.gt.cuboids_world.size(); ++j)
            if (obb_intersects(out.gt.cuboids_world[i].inflated(contact_inflation),
                               out.gt.cuboids_world[j]))
                out.gt.near_contacts.push_back(
                    {static_cast<int>(i), static_cast<int>(j)});
    return out;
}

// ---------------------------------------------------------------------------
// Canonical fixtures
// ---------------------------------------------------------------------------

namespace detail {

inline SynthObject box_at(const Vec3& size, double x, double y, double yaw = 0,
                          const std::string& desc = "") {
    SynthObject o;
    o.shape = SynthObject::Shape::box;
    o.size = size;
    o.pose_world.rotation = rot_z(yaw);
    o.pose_world.translation = {x, y, size.z() / 2};
    o.description = desc;
    return o;
}

inline SynthObject cylinder_at(double d, double h, double x, double y,
                               const std::string& desc = "") {
    SynthObject o;
    o.shape = SynthObject::Shape::cylinder;
    o.size = {d, d, h};
    o.pose_world.translation = {x, y, h / 2};
    o.description = desc;
    return o;
}

}  // namespace detail

/// The canonical fixture suite used across the test suites:
///  tilted30     camera pitched 30 degrees from vertical over 3 boxes
///  topdown      camera looking straight down
///  sealed_box   two boxes separated by a wall that fills the sampling box
///  ring_clutter target box walled in by four taller bars
///  two_plane    table plus a large raised slab (competing plane)
///  line3        three objects in a line, all pairs plannable
inline SynthSpec standard_fixture(const std::string& name) {
    SynthSpec spec;
    spec.name = name;
    spec.intrinsics = default_synth_intrinsics();

    if (name == "tilted30") {
        // 30 degrees from vertical: eye at z = d*cos(30), y = -d*sin(30)
        const double d = 1500;
        spec.cameras = {look_at({0, -d * std::sin(deg2rad(30)), d * std::cos(deg2rad(30))},
                                {0, 0, 0})};
        spec.objects = {detail::box_at({80, 60, 100}, -200, -80, 0.3, "blue box"),
                        detail::box_at({60, 60, 60}, 0, 120, 0.0, "green cube"),
                        detail::cylinder_at(70, 140, 220, -40, "red cylinder")};
    } else if (name == "topdown") {
        spec.cameras = {look_at({0, 0, 1400}, {0, 0, 0})};
        spec.objects = {detail::box_at({80, 60, 100}, -180, -60, 0.2, "blue box"),
                        detail::box_at({60, 60, 60}, 40, 110, 0.0, "green cube"),
                        detail::cylinder_at(70, 140, 200, -60, "red cylinder")};
    } else if (name == "sealed_box") {
        spec.cameras = {look_at({10, 5, 3600}, {0, 0, 0})};
        spec.objects = {detail::box_at({60, 60, 60}, -300, 0, 0, "west cube"),
                        detail::box_at({60, 60, 60}, 300, 0, 0, "east cube"),
                        detail::box_at({40, 4000, 3000}, 0, 0, 0, "separating wall")};
    } else if (name == "ring_clutter") {
        // target half-width 20, 5 mm gap, 40 mm bars: bar centers at +-45.
        const double off = 45, bar = 40, h = 120;
        spec.cameras = {look_at({0, -1100, 1250}, {0, 0, 0})};
        spec.objects = {
            detail::box_at({40, 40, 40}, 0, 0, 0, "trapped cube"),
            detail::box_at({160, bar, h}, 0, +off, 0, "north bar"),
            detail::box_at({160, bar, h}, 0, -off, 0, "south bar"),
            detail::box_at({bar, bar, h}, +off, 0, 0, "east bar"),
            detail::box_at({bar, bar, h}, -off, 0, 0, "west bar"),
        };
    } else if (name == "two_plane") {
        spec.cameras = {look_at({0, -1250, 1350}, {0, 100, 0})};
        spec.objects = {detail::box_at({520, 400, 150}, -250, 150, 0, "raised slab"),
                        detail::box_at({70, 50, 90}, 220, -120, 0.4, "amber box"),
                        detail::box_at({60, 60, 60}, 400, 120, 0.0, "green cube")};
    } else if (name == "line3") {
        spec.cameras = {look_at({0, -1200, 1300}, {0, 0, 0})};
        spec.objects = {detail::box_at({60, 60, 60}, -300, 0, 0, "left cube"),
                        detail::box_at({50, 50, 80}, 0, 0, 0, "middle box"),
                        detail::cylinder_at(60, 90, 300, 0, "right cylinder")};
    } else {
        throw SynthError(SynthCode::unknown_fixture, "unknown fixture: " + name);
    }
    return spec;
}

inline std::vector<std::string> standard_fixture_names() {
    return {"tilted30", "topdown", "sealed_box", "ring_clutter", "two_plane", "line3"};
}

/// Seeded cluttered tabletop with n primitives placed without overlap, and
/// `n_frames` cameras orbiting the table. The workhorse for corpus-scale
/// tests.
inline SynthSpec random_tabletop(std::uint64_t seed, int n_objects, int n_frames = 1,
                                 double noise_sigma = 0.0) {
    SynthSpec spec;
    spec.name = "random_" + std::to_string(seed);
    spec.seed = seed;
    spec.intrinsics = default_synth_intrinsics();
    spec.depth_noise_sigma = noise_sigma;

    Rng rng(mix_seed(seed, 0x7ab1eu));
    static const char* kColors[] = {"red", "green", "blue", "yellow",
                                    "white", "black", "orange", "purple"};
    int attempts = 0;
    while (static_cast<int>(spec.objects.size()) < n_objects && attempts < 1000) {
        ++attempts;
        SynthObject obj;
        const bool box = rng.uniform() < 0.7;
        const char* color = kColors[rng.uniform_int(8)];
        if (box) {
            obj.shape = SynthObject::Shape::box;
            obj.size = {rng.uniform(40, 120), rng.uniform(40, 120),
                        rng.uniform(40, 140)};
            obj.description = std::string(color) + " box";
        } else {
            obj.shape = SynthObject::Shape::cylinder;
            const double d = rng.uniform(40, 90);
            obj.size = {d, d, rng.uniform(60, 140)};
            obj.description = std::string(color) + " cylinder";
        }
        obj.pose_world.rotation = rot_z(rng.uniform(0, 2 * M_PI));
        obj.pose_world.translation = {rng.uniform(-420, 420), rng.uniform(-260, 260),
                                      obj.size.z() / 2};
        const Cuboid3D cand{obj.pose_world, obj.size * 0.5};
        bool clash = false;
        for (const SynthObject& other : spec.objects) {
            const Cuboid3D c{other.pose_world, other.size * 0.5};
            if (obb_intersects(cand.inflated(20.0), c)) {
                clash = true;
                break;
            }
        }
        if (!clash) spec.objects.push_back(std::move(obj));
    }

    for (int f = 0; f < n_frames; ++f) {
        const double az = 2 * M_PI * f / std::max(1, n_frames) - M_PI / 2;
        const double elev = deg2rad(42 + 14 * ((f * 7) % 3));
        const double radius = 1350 + 60 * ((f * 5) % 4);
        const Vec3 eye(radius * std::cos(elev) * std::cos(az),
                       radius * std::cos(elev) * std::sin(az),
                       radius * std::sin(elev));
        spec.cameras.push_back(look_at(eye, {0, 0, 50}));
    }
    return spec;
}

// ---------------------------------------------------------------------------
// BOP export
// ---------------------------------------------------------------------------

/// Render every frame of the spec and write a self-contained BOP-layout
/// dataset: <out>/<scene>/..., <out>/models/..., descriptions sidecar, and
/// a scene_extrinsics.json with the exact cam->world transforms (mm).
inline void export_fixture_bop(const SynthSpec& spec, const std::string& out_dir,
                               int scene_id = 0) {
    namespace fs = std::filesystem;
    const ModelTable models = synth_model_table(spec);

    std::vector<SceneFrame> frames;
    Json extrinsics = Json::object();
    for (std::size_t f = 0; f < spec.cameras.size(); ++f) {
        SynthFrameResult r = render_frame(spec, models, f, scene_id);
        frames.push_back(std::move(r.frame));
        Json rot = Json::array();
        const Pose& cam = spec.cameras[f];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) rot.push_back(cam.rotation(i, j));
        extrinsics[std::to_string(f)] = {
            {"cam_R_c2w", rot},
            {"cam_t_c2w_mm",
             {cam.translation.x(), cam.translation.y(), cam.translation.z()}},
        };
    }

    char scene_name[16];
    std::snprintf(scene_name, sizeof(scene_name), "%06d", scene_id);
    const fs::path scene_dir = fs::path(out_dir) / scene_name;
    write_scene_dir(scene_dir.string(), frames);
    std::ofstream(scene_dir / "scene_extrinsics.json") << extrinsics.dump(2) << "\n";
    write_model_table((fs::path(out_dir) / "models").string(), models);
}

}  // namespace bopask

#endif  // BOPASK_SYNTH_SCENES_HPP
